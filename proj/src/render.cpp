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

#include "ubimap/render.hpp"

#include <algorithm>
#include <string>

namespace ubimap::render {

namespace {

std::vector<std::uint8_t> ppm_header(int width, int height)
{
    const std::string h = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    return {h.begin(), h.end()};
}

void put(std::vector<std::uint8_t>& out, const Rgb& c)
{
    out.insert(out.end(), c.begin(), c.end());
}

}  // namespace

Rgb state_color(fusion::CellState s)
{
    switch (s) {
    case fusion::CellState::Wall: return {0, 0, 0};
    case fusion::CellState::Unexplored: return {96, 96, 96};
    case fusion::CellState::Explored: return {200, 200, 200};
    case fusion::CellState::Obstacle: return {220, 0, 0};
    case fusion::CellState::Robot: return {0, 200, 0};
    }
    return {255, 0, 255};
}

std::vector<std::uint8_t> render_map(const fusion::GridMap& map)
{
    auto out = ppm_header(map.width(), map.height());
    out.reserve(out.size() + 3 * map.cells().size());
    for (fusion::CellState s : map.cells())
        put(out, state_color(s));
    return out;
}

std::vector<std::uint8_t> render_coverage(const world::GridWorld& world,
                                          const std::map<world::CellIndex, int>& multiplicity)
{
    auto out = ppm_header(world.width(), world.height());
    for (std::size_t i = 0; i < world.cell_count(); ++i) {
        const auto c = world.from_linear(i);
        if (world.is_wall(c)) {
            put(out, {0, 0, 0});
            continue;
        }
        auto it = multiplicity.find(c);
        const int m = it == multiplicity.end() ? 0 : std::min(it->second, 4);
        if (m == 0)
            put(out, {96, 96, 96});
        else
            put(out, {static_cast<std::uint8_t>(40 * (m - 1)), static_cast<std::uint8_t>(80 + 40 * m), 255});
    }
    return out;
}

}  // namespace ubimap::render
