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

#ifndef UBIMAP_RENDER_HPP
#define UBIMAP_RENDER_HPP

#include "ubimap/fusion.hpp"
#include "ubimap/world.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace ubimap::render {

using Rgb = std::array<std::uint8_t, 3>;

Rgb state_color(fusion::CellState s);

/// Binary PPM ("P6"), one pixel per cell, row 0 first.
std::vector<std::uint8_t> render_map(const fusion::GridMap& map);

/// Camera multiplicity per cell: walls black, uncovered dark gray, then
/// brighter blue for each additional covering camera (saturating at 4).
std::vector<std::uint8_t> render_coverage(const world::GridWorld& world,
                                          const std::map<world::CellIndex, int>& multiplicity);

}  // namespace ubimap::render

#endif  // UBIMAP_RENDER_HPP
