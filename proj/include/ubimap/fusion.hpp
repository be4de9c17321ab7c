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

#ifndef UBIMAP_FUSION_HPP
#define UBIMAP_FUSION_HPP

#include "ubimap/geom.hpp"
#include "ubimap/sensim.hpp"
#include "ubimap/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubimap::fusion {

using world::CellIndex;

/// Wire values are part of the map snapshot and MAP_UPDATE formats.
enum class CellState : std::uint8_t { Unexplored = 0, Explored = 1, Wall = 2, Obstacle = 3, Robot = 4 };

constexpr int kCellStateCount = 5;
const char* to_string(CellState s);

struct RobotEstimate {
    double x = 0.0;
    double y = 0.0;
    double sigma = 0.0;  // m, sqrt of the larger position eigenvalue
    friend bool operator==(const RobotEstimate&, const RobotEstimate&) = default;
};

class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shared occupancy map. Every cell starts Unexplored.
class GridMap {
public:
    GridMap() = default;
    GridMap(int width, int height, double cell_size);

    int width() const { return width_; }
    int height() const { return height_; }
    double cell_size() const { return cell_size_; }
    std::uint32_t revision() const { return revision_; }
    void set_revision(std::uint32_t r) { revision_ = r; }

    bool in_bounds(CellIndex c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
    std::optional<CellIndex> cell_at(double x, double y) const;
    std::size_t linear(CellIndex c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }
    CellIndex from_linear(std::size_t i) const;

    CellState at(CellIndex c) const { return cells_[linear(c)]; }
    void set(CellIndex c, CellState s) { cells_[linear(c)] = s; }
    const std::vector<CellState>& cells() const { return cells_; }
    std::vector<CellState>& cells() { return cells_; }

    std::map<int, RobotEstimate> robot_poses;

    bool same_shape(const GridMap& o) const;
    friend bool operator==(const GridMap&, const GridMap&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    double cell_size_ = 1.0;
    std::uint32_t revision_ = 0;
    std::vector<CellState> cells_;
};

/// revision (u32 LE) | width (u16 LE) | height (u16 LE) | one byte per cell,
/// row-major.
std::vector<std::uint8_t> export_snapshot(const GridMap& map);
/// Inverse of export_snapshot; throws std::invalid_argument on bad input.
GridMap import_snapshot(std::span<const std::uint8_t> bytes, double cell_size);

/// Outcome of one fixed-vs-robot vote. `blind` marks cells no fixed camera
/// covers; there the robot's report is adopted outright (a reported Robot
/// becomes Obstacle, since only the server places robots).
CellState vote(CellState global, CellState local, int weight_fixed, int weight_robot, bool blind);

/// Cell-wise vote of a robot-contributed map into the global one. Without
/// a mask, blind cells are the global Unexplored cells. Revision advances
/// iff a cell changed. Throws DimensionMismatch.
GridMap merge_robot_map(const GridMap& global, const GridMap& local, int weight_fixed = 2, int weight_robot = 1,
                        const std::vector<bool>* blind = nullptr);

// ---------------------------------------------------------------------------
// Localization filters

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Pose (x, y, heading) estimate.
struct GaussianBelief {
    Vector3 mean = Vector3::Zero();
    Matrix3 covariance = Matrix3::Zero();

    bool is_symmetric(double tol = 1e-12) const;
    bool is_psd(double tol = 1e-12) const;
};

struct MotionModel {
    std::function<Vector3(const Vector3&, const Vector3&)> f;
    std::function<Matrix3(const Vector3&, const Vector3&)> jacobian;
    Matrix3 process_noise = Matrix3::Zero();

    /// x + u in the world frame; Jacobian is the identity.
    static MotionModel additive(const Matrix3& q);
    /// u = (forward, lateral, turn) in the robot frame at the current heading.
    static MotionModel odometry(const Matrix3& q);
};

struct ObservationModel {
    std::function<Eigen::VectorXd(const Vector3&)> h;
    std::function<Eigen::MatrixXd(const Vector3&)> jacobian;
    Eigen::MatrixXd measurement_noise;

    /// z = (x, y)
    static ObservationModel position(double sigma);
    static ObservationModel position(const Eigen::Matrix2d& r);
    /// z = x only; the 1D case.
    static ObservationModel x_only(double variance);
};

double wrap_angle(double a);

GaussianBelief ekf_predict(const GaussianBelief& b, const Vector3& u, const MotionModel& mm);
/// Joseph-form correction, symmetrized afterwards.
GaussianBelief ekf_update(const GaussianBelief& b, const Eigen::VectorXd& z, const ObservationModel& om);

class DegenerateLikelihood : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Histogram over (x, y, heading) bins. Bin (i, j, k) is centered at
/// origin + (i + 1/2, j + 1/2) * resolution, heading -pi + (k + 1/2) * 2pi/nh
/// (0 when nh == 1).
struct GridBelief {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double resolution = 1.0;
    int nx = 1;
    int ny = 1;
    int nh = 1;
    std::vector<double> p;
    /// Normalizer applied by the last step.
    double eta = 1.0;

    static GridBelief uniform(double origin_x, double origin_y, double resolution, int nx, int ny, int nh);
    std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(k) * ny + j) * nx + i; }
    double at(int i, int j, int k) const { return p[index(i, j, k)]; }
    Vector3 center(int i, int j, int k) const;
    double total() const;
};

/// One recursive Bayes step: motion convolution with N(f(x, u), Q) using the
/// diagonal of Q (zero variance splits mass between the two nearest bins),
/// then the likelihood of `z` when given, then renormalization. States in
/// Wall or Obstacle cells of `map` get zero likelihood. Throws
/// DegenerateLikelihood if nothing survives.
GridBelief bayes_grid_step(const GridBelief& gb, const Vector3& u, const std::optional<Eigen::VectorXd>& z,
                           const MotionModel& mm, const ObservationModel& om, const GridMap* map = nullptr);

// ---------------------------------------------------------------------------
// Map server

struct FusionOptions {
    double obstacle_clear_time = 2.0;  // s
    int weight_fixed = 2;
    int weight_robot = 1;
    double tag_sigma = 0.01;           // m
    Matrix3 process_noise = Vector3(1e-4, 1e-4, 1e-3).asDiagonal();
    /// Heading variance for robots first seen without a prior.
    double initial_heading_variance = 4.0;
};

struct Frame {
    std::vector<sensim::ObstacleEvidence> obstacles;
    std::vector<sensim::TagDetection> tags;
};

struct Fault {
    double t = 0.0;
    std::string what;
};

/// Single-writer owner of the global map. Camera ground frames map the
/// camera-local ground coordinates (lateral, forward, up) to the world.
class MapServer {
public:
    MapServer(int width, int height, double cell_size, std::map<int, geom::RigidTransform> camera_ground_frames,
              FusionOptions opts = {});

    const GridMap& map() const { return map_; }
    const std::vector<Fault>& faults() const { return faults_; }
    /// Cells some camera has reported on.
    const std::vector<bool>& camera_seen() const { return camera_seen_; }

    /// Declares a robot; its tag keys detections. Without a prior the first
    /// detection initializes the filter.
    void register_robot(int robot_id, int tag, std::optional<GaussianBelief> prior = std::nullopt);
    /// Odometry-model prediction for a tracked robot.
    void predict(int robot_id, const Vector3& odometry);
    std::optional<GaussianBelief> belief(int robot_id) const;

    /// Returns true iff the map changed (revision advanced).
    bool fuse_frame(const Frame& frame, double t);
    /// Robot upload; cells never reported by a camera are blind and adopt
    /// the robot's states. Returns true iff the map changed.
    bool merge_robot_map(const GridMap& local, double t);

    void record_fault(double t, std::string what) { faults_.push_back({t, std::move(what)}); }

private:
    struct Track {
        int robot_id = 0;
        std::optional<GaussianBelief> belief;
        double last_update = -1.0;
        bool seen_this_frame = false;
    };

    void publish(const std::vector<CellState>& cells, const std::map<int, RobotEstimate>& poses);

    GridMap map_;
    std::vector<CellState> base_;  // map without the robot overlay
    std::vector<double> last_occupied_;
    std::vector<bool> camera_seen_;
    std::map<int, geom::RigidTransform> frames_;
    std::map<int, Track> tracks_;  // by tag
    FusionOptions opts_;
    std::vector<Fault> faults_;
};

}  // namespace ubimap::fusion

#endif  // UBIMAP_FUSION_HPP
