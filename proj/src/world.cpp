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

#include "ubimap/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ubimap::world {

namespace {

// Inclusive slack on footprint edges so cell centers lying exactly on an
// edge survive the rounding of cos/sin at non-zero yaw.
constexpr double kEdgeSlack = 1e-9;

template <typename Visit>
void traverse(const GridWorld& world, const Point2& a, const Point2& b, Visit&& visit)
{
    const double s = world.cell_size();
    const double u0 = a.x() / s, v0 = a.y() / s;
    const double u1 = b.x() / s, v1 = b.y() / s;
    int x = static_cast<int>(std::floor(u0));
    int y = static_cast<int>(std::floor(v0));
    const int x_end = static_cast<int>(std::floor(u1));
    const int y_end = static_cast<int>(std::floor(v1));

    auto emit = [&](int cx, int cy) {
        CellIndex c{cx, cy};
        if (!world.in_bounds(c))
            return false;
        return visit(c);
    };

    if (emit(x, y))
        return;

    const double du = u1 - u0, dv = v1 - v0;
    const int step_x = du > 0 ? 1 : (du < 0 ? -1 : 0);
    const int step_y = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
    const double inf = std::numeric_limits<double>::infinity();
    double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
    if (step_x != 0) {
        t_delta_x = 1.0 / std::abs(du);
        t_max_x = step_x > 0 ? (std::floor(u0) + 1.0 - u0) / du : (u0 - std::floor(u0)) / -du;
    }
    if (step_y != 0) {
        t_delta_y = 1.0 / std::abs(dv);
        t_max_y = step_y > 0 ? (std::floor(v0) + 1.0 - v0) / dv : (v0 - std::floor(v0)) / -dv;
    }

    const int max_steps = std::abs(x_end - x) + std::abs(y_end - y) + 4;
    for (int i = 0; i < max_steps; ++i) {
        if (x == x_end && y == y_end)
            return;
        if (t_max_x < t_max_y) {
            if (t_max_x > 1.0)
                return;
            x += step_x;
            t_max_x += t_delta_x;
        } else if (t_max_y < t_max_x) {
            if (t_max_y > 1.0)
                return;
            y += step_y;
            t_max_y += t_delta_y;
        } else {
            if (t_max_x > 1.0)
                return;
            // Exact corner crossing: both side cells are touched.
            if (emit(x + step_x, y) || emit(x, y + step_y))
                return;
            x += step_x;
            y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        }
        if (emit(x, y))
            return;
    }
}

}  // namespace

bool CameraSpec::valid() const
{
    return height > 0.0 && hfov > 0.0 && hfov < std::numbers::pi && vfov > 0.0 &&
           vfov < std::numbers::pi && max_range > 0.0 && std::isfinite(x) && std::isfinite(y) &&
           std::isfinite(yaw);
}

Point2 GroundFootprint::to_local(const Point2& world) const
{
    const double dx = world.x() - x, dy = world.y() - y;
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {dx * c + dy * s, -dx * s + dy * c};
}

Point2 GroundFootprint::to_world(const Point2& local) const
{
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {x + local.x() * c - local.y() * s, y + local.x() * s + local.y() * c};
}

bool GroundFootprint::contains(const Point2& world) const
{
    Point2 l = to_local(world);
    return l.x() >= -0.5 * width - kEdgeSlack && l.x() <= 0.5 * width + kEdgeSlack &&
           l.y() >= -kEdgeSlack && l.y() <= depth + kEdgeSlack;
}

GridWorld::GridWorld(double cell_size, int width, int height)
    : cell_size_(cell_size), width_(width), height_(height)
{
    if (!(cell_size > 0.0) || width <= 0 || height <= 0)
        throw std::invalid_argument("GridWorld: cell_size, width and height must be positive");
    terrain_.assign(static_cast<std::size_t>(width) * height, Terrain::Free);
}

bool GridWorld::in_bounds(CellIndex c) const
{
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
}

bool GridWorld::contains(const Point2& p) const
{
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width_ * cell_size_ && p.y() <= height_ * cell_size_;
}

std::optional<CellIndex> GridWorld::cell_at(const Point2& p) const
{
    if (!contains(p))
        return std::nullopt;
    // The far boundary belongs to the last cell.
    int col = std::min(static_cast<int>(std::floor(p.x() / cell_size_)), width_ - 1);
    int row = std::min(static_cast<int>(std::floor(p.y() / cell_size_)), height_ - 1);
    return CellIndex{col, row};
}

Point2 GridWorld::cell_center(CellIndex c) const
{
    return {(c.col + 0.5) * cell_size_, (c.row + 0.5) * cell_size_};
}

CellIndex GridWorld::from_linear(std::size_t i) const
{
    return {static_cast<int>(i % width_), static_cast<int>(i / width_)};
}

void GridWorld::set_terrain(CellIndex c, Terrain t)
{
    if (!in_bounds(c))
        throw std::out_of_range("GridWorld::set_terrain: cell out of bounds");
    terrain_[linear(c)] = t;
}

GridWorld GridWorld::without_walls() const
{
    GridWorld copy = *this;
    std::fill(copy.terrain_.begin(), copy.terrain_.end(), Terrain::Free);
    return copy;
}

std::vector<bool> GridWorld::occupancy() const
{
    std::vector<bool> occ(cell_count(), false);
    for (const auto& o : obstacles)
        if (in_bounds(o.cell))
            occ[linear(o.cell)] = true;
    for (const auto& r : robots)
        if (auto c = cell_at({r.x, r.y}))
            occ[linear(*c)] = true;
    return occ;
}

GroundFootprint ground_footprint(const CameraSpec& cam)
{
    GroundFootprint fp;
    fp.x = cam.x;
    fp.y = cam.y;
    fp.yaw = cam.yaw;
    fp.depth = std::min(cam.height * std::tan(0.5 * cam.vfov), cam.max_range);
    fp.width = 2.0 * cam.height * std::tan(0.5 * cam.hfov);
    return fp;
}

namespace {

// Cells whose centers fall in the footprint, before any visibility test.
template <typename Fn>
void for_each_footprint_cell(const GroundFootprint& fp, const GridWorld& world, Fn&& fn)
{
    const double hw = 0.5 * fp.width;
    Point2 corners[4] = {fp.to_world({-hw, 0.0}), fp.to_world({hw, 0.0}),
                         fp.to_world({-hw, fp.depth}), fp.to_world({hw, fp.depth})};
    double min_x = corners[0].x(), max_x = min_x, min_y = corners[0].y(), max_y = min_y;
    for (const auto& c : corners) {
        min_x = std::min(min_x, c.x());
        max_x = std::max(max_x, c.x());
        min_y = std::min(min_y, c.y());
        max_y = std::max(max_y, c.y());
    }
    const double s = world.cell_size();
    int c0 = std::max(0, static_cast<int>(std::floor(min_x / s)) - 1);
    int c1 = std::min(world.width() - 1, static_cast<int>(std::floor(max_x / s)) + 1);
    int r0 = std::max(0, static_cast<int>(std::floor(min_y / s)) - 1);
    int r1 = std::min(world.height() - 1, static_cast<int>(std::floor(max_y / s)) + 1);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
            CellIndex cell{c, r};
            if (fp.contains(world.cell_center(cell)))
                fn(cell);
        }
}

}  // namespace

CellSet covered_cells(const CameraSpec& cam, const GridWorld& world)
{
    CellSet out;
    const GroundFootprint fp = ground_footprint(cam);
    const Point2 eye{cam.x, cam.y};
    for_each_footprint_cell(fp, world, [&](CellIndex c) {
        if (!world.is_wall(c) && line_of_sight(world, eye, world.cell_center(c)))
            out.push_back(c);
    });
    return out;
}

CellSet visible_wall_cells(const CameraSpec& cam, const GridWorld& world)
{
    CellSet out;
    const GroundFootprint fp = ground_footprint(cam);
    const Point2 eye{cam.x, cam.y};
    for_each_footprint_cell(fp, world, [&](CellIndex c) {
        if (!world.is_wall(c))
            return;
        auto hit = first_wall(world, eye, world.cell_center(c));
        if (hit && *hit == c)
            out.push_back(c);
    });
    return out;
}

std::optional<CellIndex> first_wall(const GridWorld& world, const Point2& a, const Point2& b)
{
    std::optional<CellIndex> hit;
    traverse(world, a, b, [&](CellIndex c) {
        if (world.is_wall(c)) {
            hit = c;
            return true;
        }
        return false;
    });
    return hit;
}

bool line_of_sight(const GridWorld& world, const Point2& a, const Point2& b)
{
    return !first_wall(world, a, b).has_value();
}

RigidTransform camera_ground_frame(const CameraSpec& cam)
{
    return RigidTransform::translate(cam.x, cam.y, 0.0) * RigidTransform::rot_z(cam.yaw);
}

RigidTransform camera_mount(const CameraSpec& cam)
{
    const GroundFootprint fp = ground_footprint(cam);
    const double pitch = std::atan2(cam.height, 0.5 * fp.depth);
    const double c = std::cos(pitch), s = std::sin(pitch);
    geom::Mat3 r;
    // Columns: optical x, y, z axes expressed in the ground frame.
    r << 1.0, 0.0, 0.0,
         0.0, -s, c,
         0.0, -c, -s;
    return {r, geom::Vec3(0.0, 0.0, cam.height)};
}

RigidTransform camera_world_pose(const CameraSpec& cam)
{
    return camera_ground_frame(cam) * camera_mount(cam);
}

std::vector<CameraSpec> lattice_candidates(const GridWorld& world, const CameraSpec& prototype,
                                           double step, int first_id)
{
    if (!(step > 0.0))
        throw std::invalid_argument("lattice_candidates: step must be positive");
    std::vector<CameraSpec> out;
    const double half = 0.5 * world.cell_size();
    int id = first_id;
    for (double y = half; y < world.height() * world.cell_size(); y += step)
        for (double x = half; x < world.width() * world.cell_size(); x += step) {
            auto cell = world.cell_at({x, y});
            if (!cell || world.is_wall(*cell))
                continue;
            for (int k = 0; k < 8; ++k) {
                CameraSpec c = prototype;
                c.id = id++;
                c.x = x;
                c.y = y;
                c.yaw = k * (std::numbers::pi / 4.0);
                out.push_back(c);
            }
        }
    return out;
}

}  // namespace ubimap::world
