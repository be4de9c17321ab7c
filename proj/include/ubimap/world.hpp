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

#ifndef UBIMAP_WORLD_HPP
#define UBIMAP_WORLD_HPP

#include "ubimap/geom.hpp"

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <optional>
#include <vector>

namespace ubimap::world {

using Point2 = Eigen::Vector2d;
using geom::Point3;
using geom::RigidTransform;

struct CellIndex {
    int col = 0;
    int row = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
    // Row-major order, so sorted cell sets iterate like the map buffer.
    friend std::strong_ordering operator<=>(const CellIndex& a, const CellIndex& b)
    {
        if (auto c = a.row <=> b.row; c != 0)
            return c;
        return a.col <=> b.col;
    }
};

/// Sorted (row-major), duplicate-free.
using CellSet = std::vector<CellIndex>;

enum class Terrain : unsigned char { Free, Wall };

/// Fixed depth camera. Angles in radians, lengths in meters.
struct CameraSpec {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double height = 0.0;
    double yaw = 0.0;
    double hfov = 0.0;
    double vfov = 0.0;
    double max_range = 0.0;

    bool valid() const;
    friend bool operator==(const CameraSpec&, const CameraSpec&) = default;
};

/// Ground rectangle seen by a camera: `width` across, `depth` forward of
/// (x, y), rotated by `yaw`. Yaw 0 looks along +y.
struct GroundFootprint {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;
    double depth = 0.0;
    double width = 0.0;

    /// World point -> footprint-local (lateral, forward).
    Point2 to_local(const Point2& world) const;
    Point2 to_world(const Point2& local) const;
    bool contains(const Point2& world) const;
};

struct RobotSpec {
    int id = 0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    int tag = 0;
    /// Robots drive straight to the goal at `speed` and stop there.
    std::optional<Point2> goal;
    double speed = 0.0;

    friend bool operator==(const RobotSpec&, const RobotSpec&) = default;
};

struct ObstacleSpec {
    int id = 0;
    CellIndex cell;
    friend bool operator==(const ObstacleSpec&, const ObstacleSpec&) = default;
};

struct Landmark {
    int id = 0;
    Point3 position = Point3::Zero();
    friend bool operator==(const Landmark& a, const Landmark& b)
    {
        return a.id == b.id && a.position == b.position;
    }
};

/// Ground-truth environment on a regular grid. Cell (c, r) spans
/// [c*s, (c+1)*s) x [r*s, (r+1)*s) in world meters.
class GridWorld {
public:
    GridWorld() = default;
    GridWorld(double cell_size, int width, int height);

    double cell_size() const { return cell_size_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t cell_count() const { return terrain_.size(); }

    bool in_bounds(CellIndex c) const;
    bool contains(const Point2& p) const;
    std::optional<CellIndex> cell_at(const Point2& p) const;
    Point2 cell_center(CellIndex c) const;

    std::size_t linear(CellIndex c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }
    CellIndex from_linear(std::size_t i) const;

    Terrain terrain(CellIndex c) const { return terrain_[linear(c)]; }
    bool is_wall(CellIndex c) const { return terrain(c) == Terrain::Wall; }
    void set_terrain(CellIndex c, Terrain t);
    /// Same dimensions, every cell Free, entities kept.
    GridWorld without_walls() const;

    std::vector<ObstacleSpec> obstacles;
    std::vector<RobotSpec> robots;
    std::vector<Landmark> landmarks;

    /// Cells holding an obstacle or a robot (at its true position).
    std::vector<bool> occupancy() const;

    friend bool operator==(const GridWorld&, const GridWorld&) = default;

private:
    double cell_size_ = 1.0;
    int width_ = 0;
    int height_ = 0;
    std::vector<Terrain> terrain_;
};

/// depth = min(h tan(vfov/2), max_range), width = 2 h tan(hfov/2).
GroundFootprint ground_footprint(const CameraSpec& cam);

/// Cells whose centers lie in the footprint and are visible from the
/// camera's ground point through free cells.
CellSet covered_cells(const CameraSpec& cam, const GridWorld& world);

/// True iff the segment a->b touches no Wall cell (supercover traversal;
/// a segment through a grid corner touches all cells sharing the corner).
bool line_of_sight(const GridWorld& world, const Point2& a, const Point2& b);

/// First Wall cell met walking a->b, if any.
std::optional<CellIndex> first_wall(const GridWorld& world, const Point2& a, const Point2& b);

/// Wall cells with their center inside the footprint whose first blocking
/// cell along the sight line is the cell itself.
CellSet visible_wall_cells(const CameraSpec& cam, const GridWorld& world);

/// Camera-local ground frame in world: origin at (x, y, 0), x lateral,
/// y forward, z up.
RigidTransform camera_ground_frame(const CameraSpec& cam);

/// Optical frame (x right, y down, z along the axis) in the ground frame.
/// The axis is pitched down to meet the ground at depth/2.
RigidTransform camera_mount(const CameraSpec& cam);

/// camera_ground_frame(cam) * camera_mount(cam)
RigidTransform camera_world_pose(const CameraSpec& cam);

/// Lattice of positions every `step` meters (cell-center aligned) times 8
/// yaw angles, on free cells only. Ids are assigned from `first_id`.
std::vector<CameraSpec> lattice_candidates(const GridWorld& world, const CameraSpec& prototype,
                                           double step, int first_id = 0);

}  // namespace ubimap::world

#endif  // UBIMAP_WORLD_HPP
