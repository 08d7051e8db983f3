/*
 * Copyright 2026 The bcond Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bcond {

/// Runs the command line (without the program name) and returns the exit
/// status: 0 on success, 1 on a library error (one line on `err`), 2 on a
/// usage error.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Runs job(i) for i in [0, count) on up to `workers` threads. The first
/// exception in index order is rethrown after all jobs finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job);

}  // namespace bcond
