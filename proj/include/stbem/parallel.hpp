// Copyright 2026 The stbem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>

#include "stbem/types.hpp"

namespace stbem {

/// Worker threads used by parallel loops: hardware concurrency, capped by the
/// STBEM_NUM_THREADS environment variable when set.
int thread_count();

/// Runs body(i) for i in [begin, end) on up to thread_count() threads.
/// Iterations must write disjoint outputs; the first exception is rethrown.
void parallel_for(Index begin, Index end, const std::function<void(Index)>& body);

}  // namespace stbem
