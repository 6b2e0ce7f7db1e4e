// core/include/ctxpre/threading.h

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

#ifndef CTXPRE_THREADING_H_
#define CTXPRE_THREADING_H_

#include <cstdint>
#include <functional>

namespace ctxpre {

// Number of worker threads to use: explicit request if > 0, else the
// CTXPRE_THREADS environment variable, else 1.
int resolve_thread_count(int requested);

// Runs fn(i) for i in [0, n).  Tasks are distributed over `workers` threads
// by striding, so the task-to-thread assignment is a pure function of
// (n, workers).  Results must be written to per-task storage; the caller is
// responsible for combining them in a thread-count-independent order.
// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(int64_t n, int workers, const std::function<void(int64_t)>& fn);

}  // namespace ctxpre

#endif  // CTXPRE_THREADING_H_
