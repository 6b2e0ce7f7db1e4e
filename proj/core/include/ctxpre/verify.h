// core/include/ctxpre/verify.h

// Copyright 2026  ctxpre authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CTXPRE_VERIFY_H_
#define CTXPRE_VERIFY_H_

#include <string>
#include <vector>

// Built-in self-checks comparing the production kernels against slow
// independent routes (finite differences, Jacobian probing, exhaustive
// enumeration, closed-form loss values).  The command-line `verify`
// subcommand and the test suite both run these.

namespace ctxpre {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;  // the measured quantity, or what went wrong
};

struct VerifyReport {
  std::string suite;
  std::vector<VerifyCheck> checks;

  bool all_passed() const;
  // One PASS/FAIL line per check followed by a summary line.
  std::string to_text() const;
};

// The available suites in fixed order:
//   gradients  - finite-difference checks on every layer and loss
//   causality  - attention window support, receptive field, frame hop
//   oracles    - alignment, triple-scoring and quantizer enumeration checks
//   losses     - closed-form loss identities
const std::vector<std::string>& verify_suite_names();

// Runs one suite by name; throws std::invalid_argument for an unknown name.
// Deterministic: every random draw inside uses fixed seeds.
VerifyReport run_verify_suite(const std::string& suite);

}  // namespace ctxpre

#endif  // CTXPRE_VERIFY_H_
