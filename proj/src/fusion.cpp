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

#include "ubimap/fusion.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <set>
#include <tuple>

namespace ubimap::fusion {

const char* to_string(CellState s)
{
    switch (s) {
    case CellState::Unexplored: return "Unexplored";
    case CellState::Explored: return "Explored";
    case CellState::Wall: return "Wall";
    case CellState::Obstacle: return "Obstacle";
    case CellState::Robot: return "Robot";
    }
    return "?";
}

GridMap::GridMap(int width, int height, double cell_size)
    : width_(width), height_(height), cell_size_(cell_size)
{
    if (width < 0 || height < 0 || !(cell_size > 0.0))
        throw std::invalid_argument("GridMap: bad dimensions");
    cells_.assign(static_cast<std::size_t>(width) * height, CellState::Unexplored);
}

std::optional<CellIndex> GridMap::cell_at(double x, double y) const
{
    if (!(x >= 0.0 && y >= 0.0 && x <= width_ * cell_size_ && y <= height_ * cell_size_))
        return std::nullopt;
    int c = std::min(static_cast<int>(std::floor(x / cell_size_)), width_ - 1);
    int r = std::min(static_cast<int>(std::floor(y / cell_size_)), height_ - 1);
    return CellIndex{c, r};
}

CellIndex GridMap::from_linear(std::size_t i) const
{
    return {static_cast<int>(i % width_), static_cast<int>(i / width_)};
}

bool GridMap::same_shape(const GridMap& o) const
{
    return width_ == o.width_ && height_ == o.height_ && cell_size_ == o.cell_size_;
}

std::vector<std::uint8_t> export_snapshot(const GridMap& map)
{
    std::vector<std::uint8_t> out;
    out.reserve(8 + map.cells().size());
    const std::uint32_t rev = map.revision();
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<std::uint8_t>(rev >> (8 * b)));
    const auto w = static_cast<std::uint16_t>(map.width());
    const auto h = static_cast<std::uint16_t>(map.height());
    out.push_back(static_cast<std::uint8_t>(w & 0xff));
    out.push_back(static_cast<std::uint8_t>(w >> 8));
    out.push_back(static_cast<std::uint8_t>(h & 0xff));
    out.push_back(static_cast<std::uint8_t>(h >> 8));
    for (CellState s : map.cells())
        out.push_back(static_cast<std::uint8_t>(s));
    return out;
}

GridMap import_snapshot(std::span<const std::uint8_t> bytes, double cell_size)
{
    if (bytes.size() < 8)
        throw std::invalid_argument("snapshot: shorter than its 8-byte header");
    const std::uint32_t rev = static_cast<std::uint32_t>(bytes[0]) | static_cast<std::uint32_t>(bytes[1]) << 8 |
                              static_cast<std::uint32_t>(bytes[2]) << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
    const int w = bytes[4] | bytes[5] << 8;
    const int h = bytes[6] | bytes[7] << 8;
    if (bytes.size() != 8 + static_cast<std::size_t>(w) * h)
        throw std::invalid_argument("snapshot: cell count does not match width x height");
    GridMap m(w, h, cell_size);
    for (std::size_t i = 0; i < m.cells().size(); ++i) {
        if (bytes[8 + i] >= kCellStateCount)
            throw std::invalid_argument("snapshot: invalid cell state byte");
        m.cells()[i] = static_cast<CellState>(bytes[8 + i]);
    }
    m.set_revision(rev);
    return m;
}

namespace {

int occupancy_rank(CellState s)
{
    switch (s) {
    case CellState::Wall: return 3;
    case CellState::Obstacle:
    case CellState::Robot: return 2;
    case CellState::Explored: return 1;
    default: return 0;
    }
}

CellState adopt(CellState local)
{
    return local == CellState::Robot ? CellState::Obstacle : local;
}

}  // namespace

CellState vote(CellState global, CellState local, int weight_fixed, int weight_robot, bool blind)
{
    if (local == CellState::Unexplored || global == CellState::Wall)
        return global;
    if (blind || weight_robot > weight_fixed)
        return adopt(local);
    if (weight_robot == weight_fixed && occupancy_rank(adopt(local)) > occupancy_rank(global))
        return adopt(local);
    return global;
}

GridMap merge_robot_map(const GridMap& global, const GridMap& local, int weight_fixed, int weight_robot,
                        const std::vector<bool>* blind)
{
    if (!global.same_shape(local))
        throw DimensionMismatch("merge_robot_map: local map shape differs from the global map");
    if (blind && blind->size() != global.cells().size())
        throw DimensionMismatch("merge_robot_map: blind mask size differs from the map");
    GridMap out = global;
    bool changed = false;
    for (std::size_t i = 0; i < out.cells().size(); ++i) {
        const CellState g = global.cells()[i];
        const bool is_blind = blind ? static_cast<bool>((*blind)[i]) : g == CellState::Unexplored;
        const CellState v = vote(g, local.cells()[i], weight_fixed, weight_robot, is_blind);
        if (v != g) {
            out.cells()[i] = v;
            changed = true;
        }
    }
    if (changed)
        out.set_revision(global.revision() + 1);
    return out;
}

// ---------------------------------------------------------------------------

double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * std::numbers::pi);
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

bool GaussianBelief::is_symmetric(double tol) const
{
    return (covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= tol;
}

bool GaussianBelief::is_psd(double tol) const
{
    Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (covariance + covariance.transpose()));
    return es.eigenvalues().minCoeff() >= -tol;
}

MotionModel MotionModel::additive(const Matrix3& q)
{
    MotionModel m;
    m.f = [](const Vector3& x, const Vector3& u) { return Vector3(x + u); };
    m.jacobian = [](const Vector3&, const Vector3&) { return Matrix3(Matrix3::Identity()); };
    m.process_noise = q;
    return m;
}

MotionModel MotionModel::odometry(const Matrix3& q)
{
    MotionModel m;
    m.f = [](const Vector3& x, const Vector3& u) {
        const double c = std::cos(x.z()), s = std::sin(x.z());
        return Vector3(x.x() + u.x() * c - u.y() * s, x.y() + u.x() * s + u.y() * c, wrap_angle(x.z() + u.z()));
    };
    m.jacobian = [](const Vector3& x, const Vector3& u) {
        const double c = std::cos(x.z()), s = std::sin(x.z());
        Matrix3 f = Matrix3::Identity();
        f(0, 2) = -u.x() * s - u.y() * c;
        f(1, 2) = u.x() * c - u.y() * s;
        return f;
    };
    m.process_noise = q;
    return m;
}

ObservationModel ObservationModel::position(double sigma)
{
    return position(Eigen::Matrix2d(Eigen::Vector2d::Constant(sigma * sigma).asDiagonal()));
}

ObservationModel ObservationModel::position(const Eigen::Matrix2d& r)
{
    ObservationModel o;
    o.h = [](const Vector3& x) { return Eigen::VectorXd(x.head<2>()); };
    o.jacobian = [](const Vector3&) {
        Eigen::MatrixXd hj = Eigen::MatrixXd::Zero(2, 3);
        hj(0, 0) = 1.0;
        hj(1, 1) = 1.0;
        return hj;
    };
    o.measurement_noise = r;
    return o;
}

ObservationModel ObservationModel::x_only(double variance)
{
    ObservationModel o;
    o.h = [](const Vector3& x) { return Eigen::VectorXd(x.head<1>()); };
    o.jacobian = [](const Vector3&) {
        Eigen::MatrixXd hj = Eigen::MatrixXd::Zero(1, 3);
        hj(0, 0) = 1.0;
        return hj;
    };
    o.measurement_noise = Eigen::MatrixXd::Constant(1, 1, variance);
    return o;
}

GaussianBelief ekf_predict(const GaussianBelief& b, const Vector3& u, const MotionModel& mm)
{
    const Matrix3 f = mm.jacobian(b.mean, u);
    GaussianBelief out;
    out.mean = mm.f(b.mean, u);
    out.covariance = f * b.covariance * f.transpose() + mm.process_noise;
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

GaussianBelief ekf_update(const GaussianBelief& b, const Eigen::VectorXd& z, const ObservationModel& om)
{
    const Eigen::MatrixXd h = om.jacobian(b.mean);
    const Eigen::MatrixXd& r = om.measurement_noise;
    const Eigen::VectorXd innovation = z - om.h(b.mean);
    const Eigen::MatrixXd s = h * b.covariance * h.transpose() + r;
    const Eigen::MatrixXd k = b.covariance * h.transpose() * s.inverse();

    GaussianBelief out;
    out.mean = b.mean + k * innovation;
    out.mean.z() = wrap_angle(out.mean.z());
    const Matrix3 ikh = Matrix3::Identity() - k * h;
    out.covariance = ikh * b.covariance * ikh.transpose() + k * r * k.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
    return out;
}

// ---------------------------------------------------------------------------

MapServer::MapServer(int width, int height, double cell_size, std::map<int, geom::RigidTransform> camera_ground_frames,
                     FusionOptions opts)
    : map_(width, height, cell_size),
      base_(map_.cells()),
      last_occupied_(map_.cells().size(), -std::numeric_limits<double>::infinity()),
      camera_seen_(map_.cells().size(), false),
      frames_(std::move(camera_ground_frames)),
      opts_(opts)
{
}

void MapServer::register_robot(int robot_id, int tag, std::optional<GaussianBelief> prior)
{
    Track tr;
    tr.robot_id = robot_id;
    tr.belief = prior;
    tracks_[tag] = tr;
}

void MapServer::predict(int robot_id, const Vector3& odometry)
{
    for (auto& [tag, tr] : tracks_)
        if (tr.robot_id == robot_id && tr.belief)
            tr.belief = ekf_predict(*tr.belief, odometry, MotionModel::odometry(opts_.process_noise));
}

std::optional<GaussianBelief> MapServer::belief(int robot_id) const
{
    for (const auto& [tag, tr] : tracks_)
        if (tr.robot_id == robot_id)
            return tr.belief;
    return std::nullopt;
}

void MapServer::publish(const std::vector<CellState>& cells, const std::map<int, RobotEstimate>& poses)
{
    if (cells == map_.cells() && poses == map_.robot_poses)
        return;
    map_.cells() = cells;
    map_.robot_poses = poses;
    map_.set_revision(map_.revision() + 1);
}

bool MapServer::fuse_frame(const Frame& frame, double t)
{
    const std::uint32_t before = map_.revision();
    std::set<int> unknown;

    // Tag detections: independent EKF updates in camera-id order.
    std::vector<sensim::TagDetection> tags = frame.tags;
    std::stable_sort(tags.begin(), tags.end(), [](const auto& a, const auto& b) {
        return std::tie(a.camera_id, a.tag_id) < std::tie(b.camera_id, b.tag_id);
    });
    std::map<int, double> previous_update;
    for (auto& [tag, tr] : tracks_) {
        tr.seen_this_frame = false;
        previous_update[tag] = tr.last_update;
    }
    const auto obs = ObservationModel::position(opts_.tag_sigma);
    std::vector<geom::Vec3> detected;
    for (const auto& d : tags) {
        auto fr = frames_.find(d.camera_id);
        if (fr == frames_.end()) {
            unknown.insert(d.camera_id);
            continue;
        }
        if (!tracks_.count(d.tag_id)) {
            register_robot(d.tag_id, d.tag_id);
            previous_update[d.tag_id] = -1.0;
        }
        Track& tr = tracks_[d.tag_id];
        tr.seen_this_frame = true;
        // Replayed detections (same or older timestamp) were already fused.
        if (d.timestamp <= previous_update[d.tag_id])
            continue;
        const geom::Vec3 w = fr->second.apply(geom::Vec3(d.ground_position.x(), d.ground_position.y(), 0.0));
        detected.push_back(w);
        if (!tr.belief) {
            GaussianBelief b;
            b.mean = Vector3(w.x(), w.y(), 0.0);
            b.covariance = Vector3(opts_.tag_sigma * opts_.tag_sigma, opts_.tag_sigma * opts_.tag_sigma,
                                   opts_.initial_heading_variance)
                               .asDiagonal();
            tr.belief = b;
        } else {
            tr.belief = ekf_update(*tr.belief, w.head<2>(), obs);
        }
        tr.last_update = std::max(tr.last_update, d.timestamp);
    }

    // Cell evidence. Occupancy within 3 sigma of a tag detection is the
    // robot itself, not an obstacle.
    const std::size_t n = base_.size();
    std::vector<std::uint8_t> seen(n, 0), occupied(n, 0), wall(n, 0), robot(n, 0);
    const double cs = map_.cell_size();
    const double reach = 3.0 * opts_.tag_sigma;
    for (const auto& w : detected) {
        const int c0 = static_cast<int>(std::floor((w.x() - reach) / cs));
        const int c1 = static_cast<int>(std::floor((w.x() + reach) / cs));
        const int r0 = static_cast<int>(std::floor((w.y() - reach) / cs));
        const int r1 = static_cast<int>(std::floor((w.y() + reach) / cs));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const CellIndex cell{c, r};
                if (!map_.in_bounds(cell))
                    continue;
                const double dx = std::max({c * cs - w.x(), 0.0, w.x() - (c + 1) * cs});
                const double dy = std::max({r * cs - w.y(), 0.0, w.y() - (r + 1) * cs});
                if (dx * dx + dy * dy <= reach * reach)
                    robot[map_.linear(cell)] = 1;
            }
    }
    for (const auto& e : frame.obstacles) {
        if (!frames_.count(e.camera_id)) {
            unknown.insert(e.camera_id);
            continue;
        }
        if (!map_.in_bounds(e.cell)) {
            record_fault(t, "camera " + std::to_string(e.camera_id) + " reported a cell outside the map");
            continue;
        }
        const std::size_t i = map_.linear(e.cell);
        seen[i] = 1;
        if (e.wall || (e.occupied && !robot[i]))
            occupied[i] = 1;
        if (e.wall)
            wall[i] = 1;
    }
    for (int id : unknown)
        record_fault(t, "evidence from unknown camera " + std::to_string(id) + " rejected");

    for (std::size_t i = 0; i < n; ++i) {
        CellState& s = base_[i];
        if (seen[i])
            camera_seen_[i] = true;
        if (s == CellState::Wall)
            continue;
        if (wall[i]) {
            s = CellState::Wall;
        } else if (occupied[i]) {
            s = CellState::Obstacle;
            last_occupied_[i] = t;
        } else if (s == CellState::Obstacle) {
            if (camera_seen_[i] && t - last_occupied_[i] >= opts_.obstacle_clear_time)
                s = CellState::Explored;
        } else if (seen[i]) {
            s = CellState::Explored;
        }
    }

    std::map<int, RobotEstimate> poses;
    std::vector<CellState> cells = base_;
    for (const auto& [tag, tr] : tracks_) {
        if (!tr.belief)
            continue;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(tr.belief->covariance.topLeftCorner<2, 2>());
        poses[tr.robot_id] = {tr.belief->mean.x(), tr.belief->mean.y(),
                              std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()))};
        if (!tr.seen_this_frame)
            continue;
        if (auto c = map_.cell_at(tr.belief->mean.x(), tr.belief->mean.y()))
            if (cells[map_.linear(*c)] != CellState::Wall)
                cells[map_.linear(*c)] = CellState::Robot;
    }
    publish(cells, poses);
    return map_.revision() != before;
}

bool MapServer::merge_robot_map(const GridMap& local, double t)
{
    if (!map_.same_shape(local)) {
        record_fault(t, "robot map shape differs from the global map");
        throw DimensionMismatch("MapServer::merge_robot_map: local map shape differs from the global map");
    }
    const std::uint32_t before = map_.revision();
    std::vector<bool> blind(camera_seen_.size());
    for (std::size_t i = 0; i < blind.size(); ++i)
        blind[i] = !camera_seen_[i];
    std::vector<CellState> cells = map_.cells();
    for (std::size_t i = 0; i < base_.size(); ++i) {
        const CellState v = vote(base_[i], local.cells()[i], opts_.weight_fixed, opts_.weight_robot, blind[i]);
        if (v == base_[i])
            continue;
        base_[i] = v;
        if (cells[i] != CellState::Robot)
            cells[i] = v;
    }
    publish(cells, map_.robot_poses);
    return map_.revision() != before;
}

}  // namespace ubimap::fusion
