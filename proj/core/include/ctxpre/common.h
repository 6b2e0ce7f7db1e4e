// core/include/ctxpre/common.h

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

#ifndef CTXPRE_COMMON_H_
#define CTXPRE_COMMON_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace ctxpre {

// Malformed or inconsistent external data file (wav, alignments, config,
// checkpoint, representation file).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or other numerical breakdown during computation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace internal {

template <typename... Args>
std::string format_message(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

// Precondition on caller-supplied arguments; failure throws
// std::invalid_argument.
template <typename... Args>
void require(bool cond, const Args&... args) {
  if (!cond) throw std::invalid_argument(internal::format_message(args...));
}

// Validity condition on external data; failure throws DataError.
template <typename... Args>
void require_data(bool cond, const Args&... args) {
  if (!cond) throw DataError(internal::format_message(args...));
}

// Numerical health condition; failure throws NumericalError.
template <typename... Args>
void require_numeric(bool cond, const Args&... args) {
  if (!cond) throw NumericalError(internal::format_message(args...));
}

}  // namespace ctxpre

#endif  // CTXPRE_COMMON_H_
