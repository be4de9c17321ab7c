/*
 * Copyright 2026 The ubimap Authors. All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UBIMAP_TEXTIO_HPP
#define UBIMAP_TEXTIO_HPP

#include <string>

namespace ubimap {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_shortest(double v);

/// printf-style %.*g; stable across runs, used for report columns.
std::string format_g(double v, int precision = 10);

std::string format_fixed(double v, int decimals);

}  // namespace ubimap

#endif  // UBIMAP_TEXTIO_HPP
