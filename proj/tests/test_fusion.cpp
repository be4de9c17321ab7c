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

#include "gen.hpp"
#include "oracles.hpp"
#include "ubimap/fusion.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ubimap::fusion;
using ubimap::geom::RigidTransform;
using ubimap::sensim::ObstacleEvidence;
using ubimap::sensim::TagDetection;

namespace {

constexpr CellState kStates[] = {CellState::Unexplored, CellState::Explored, CellState::Wall, CellState::Obstacle,
                                 CellState::Robot};

GridMap one_cell(CellState s)
{
    GridMap m(1, 1, 1.0);
    m.set({0, 0}, s);
    return m;
}

ObstacleEvidence ev(int cam, int col, int row, bool occupied, bool wall = false, double t = 0.0)
{
    return {cam, {col, row}, occupied, wall, t};
}

TagDetection tag(int cam, int id, double lateral, double forward, double t)
{
    TagDetection d;
    d.camera_id = cam;
    d.tag_id = id;
    d.ground_position = {lateral, forward};
    d.timestamp = t;
    return d;
}

// Two cameras at the south edge of a 4 x 4 map, both looking north.
MapServer small_server(FusionOptions opts = {})
{
    std::map<int, RigidTransform> frames{{1, RigidTransform::translate(1.0, 0.0, 0.0)},
                                         {2, RigidTransform::translate(3.0, 0.0, 0.0)}};
    return MapServer(4, 4, 1.0, frames, opts);
}

bool close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("vote reproduces the covered and blind tables")
{
    for (CellState g : kStates)
        for (CellState l : kStates) {
            CAPTURE(to_string(g));
            CAPTURE(to_string(l));
            CHECK(vote(g, l, 2, 1, false) == oracle::vote_table_covered(g, l));
            CHECK(vote(g, l, 2, 1, true) == oracle::vote_table_blind(g, l));
        }
}

TEST_CASE("merge_robot_map reproduces the 25-entry table")
{
    // All pairs in one 5 x 5 map: row = global state, column = local state.
    GridMap global(5, 5, 0.5), local(5, 5, 0.5);
    global.set_revision(40);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
            global.set({c, r}, kStates[r]);
            local.set({c, r}, kStates[c]);
        }
    const GridMap merged = merge_robot_map(global, local);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
            const CellState g = kStates[r], l = kStates[c];
            const CellState want =
                g == CellState::Unexplored ? oracle::vote_table_blind(g, l) : oracle::vote_table_covered(g, l);
            CHECK(merged.at({c, r}) == want);
            // Same answer one cell at a time.
            CHECK(merge_robot_map(one_cell(g), one_cell(l)).at({0, 0}) == want);
        }
    CHECK(merged.revision() == 41);
}

TEST_CASE("merge examples")
{
    GridMap g(3, 1, 1.0), l(3, 1, 1.0);
    g.set({0, 0}, CellState::Explored);
    g.set_revision(5);
    SUBCASE("all-Unexplored local leaves the global map alone")
    {
        const GridMap m = merge_robot_map(g, l);
        CHECK(m == g);
        CHECK(m.revision() == 5);
    }
    SUBCASE("blind cell adopts a reported obstacle")
    {
        l.set({2, 0}, CellState::Obstacle);
        const GridMap m = merge_robot_map(g, l);
        CHECK(m.at({2, 0}) == CellState::Obstacle);
        CHECK(m.revision() == 6);
    }
    SUBCASE("covered Explored outvotes a robot Obstacle")
    {
        l.set({0, 0}, CellState::Obstacle);
        CHECK(merge_robot_map(g, l).at({0, 0}) == CellState::Explored);
    }
    SUBCASE("a heavier robot wins, except against walls")
    {
        l.set({0, 0}, CellState::Obstacle);
        CHECK(merge_robot_map(g, l, 1, 2).at({0, 0}) == CellState::Obstacle);
        g.set({0, 0}, CellState::Wall);
        l.set({0, 0}, CellState::Explored);
        CHECK(merge_robot_map(g, l, 1, 2).at({0, 0}) == CellState::Wall);
    }
    SUBCASE("equal weights favour the more occupied state")
    {
        l.set({0, 0}, CellState::Robot);
        CHECK(merge_robot_map(g, l, 1, 1).at({0, 0}) == CellState::Obstacle);
        g.set({0, 0}, CellState::Obstacle);
        l.set({0, 0}, CellState::Explored);
        CHECK(merge_robot_map(g, l, 1, 1).at({0, 0}) == CellState::Obstacle);
    }
    SUBCASE("explicit mask")
    {
        std::vector<bool> blind{false, false, true};
        g.set({1, 0}, CellState::Explored);
        g.set({2, 0}, CellState::Explored);
        l.set({1, 0}, CellState::Obstacle);
        l.set({2, 0}, CellState::Obstacle);
        const GridMap m = merge_robot_map(g, l, 2, 1, &blind);
        CHECK(m.at({1, 0}) == CellState::Explored);
        CHECK(m.at({2, 0}) == CellState::Obstacle);
        std::vector<bool> short_mask{true};
        CHECK_THROWS_AS(merge_robot_map(g, l, 2, 1, &short_mask), DimensionMismatch);
    }
    SUBCASE("shape mismatch")
    {
        CHECK_THROWS_AS(merge_robot_map(g, GridMap(2, 1, 1.0)), DimensionMismatch);
        CHECK_THROWS_AS(merge_robot_map(g, GridMap(3, 1, 0.5)), DimensionMismatch);
    }
}

TEST_CASE("snapshot round trip and errors")
{
    gen::Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        GridMap m(gen::integer(rng, 0, 9), gen::integer(rng, 0, 9), 0.25);
        for (auto& c : m.cells())
            c = kStates[gen::integer(rng, 0, 4)];
        m.set_revision(static_cast<std::uint32_t>(rng()));
        const auto bytes = export_snapshot(m);
        CHECK(bytes.size() == 8 + m.cells().size());
        CHECK(import_snapshot(bytes, 0.25) == m);
    }
    CHECK(export_snapshot(one_cell(CellState::Wall)) == oracle::bytes({0, 0, 0, 0, 1, 0, 1, 0, 2}));
    CHECK_THROWS_AS(import_snapshot(oracle::bytes({0, 0, 0, 0, 1, 0}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(import_snapshot(oracle::bytes({0, 0, 0, 0, 1, 0, 1, 0}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(import_snapshot(oracle::bytes({0, 0, 0, 0, 1, 0, 1, 0, 5}), 1.0), std::invalid_argument);
}

TEST_CASE("fuse_frame semantics")
{
    MapServer s = small_server();

    SUBCASE("no evidence keeps everything Unexplored")
    {
        CHECK_FALSE(s.fuse_frame({}, 0.0));
        CHECK(s.map().revision() == 0);
        for (CellState c : s.map().cells())
            CHECK(c == CellState::Unexplored);
    }
    SUBCASE("observed free cells become Explored, others stay Unexplored")
    {
        CHECK(s.fuse_frame({{ev(1, 0, 0, false), ev(1, 1, 0, false)}, {}}, 0.0));
        CHECK(s.map().at({0, 0}) == CellState::Explored);
        CHECK(s.map().at({1, 0}) == CellState::Explored);
        CHECK(s.map().at({2, 0}) == CellState::Unexplored);
        CHECK(s.map().revision() == 1);
        CHECK(s.camera_seen()[0]);
        CHECK_FALSE(s.camera_seen()[2]);
    }
    SUBCASE("occupied wins over free")
    {
        s.fuse_frame({{ev(1, 2, 1, false), ev(2, 2, 1, true)}, {}}, 0.0);
        CHECK(s.map().at({2, 1}) == CellState::Obstacle);
        MapServer other = small_server();
        other.fuse_frame({{ev(2, 2, 1, true), ev(1, 2, 1, false)}, {}}, 0.0);
        CHECK(other.map() == s.map());
    }
    SUBCASE("walls are permanent")
    {
        s.fuse_frame({{ev(1, 0, 3, true, true)}, {}}, 0.0);
        CHECK(s.map().at({0, 3}) == CellState::Wall);
        for (double t = 0.1; t < 5.0; t += 0.5)
            s.fuse_frame({{ev(1, 0, 3, false)}, {tag(1, 9, -0.5, 3.5, t)}}, t);
        CHECK(s.map().at({0, 3}) == CellState::Wall);
    }
    SUBCASE("obstacles clear after two seconds of free evidence")
    {
        s.fuse_frame({{ev(1, 1, 1, true)}, {}}, 0.0);
        s.fuse_frame({{ev(1, 1, 1, false)}, {}}, 1.0);
        CHECK(s.map().at({1, 1}) == CellState::Obstacle);
        s.fuse_frame({{ev(1, 1, 1, false)}, {}}, 1.9);
        CHECK(s.map().at({1, 1}) == CellState::Obstacle);
        s.fuse_frame({{ev(1, 1, 1, false)}, {}}, 2.0);
        CHECK(s.map().at({1, 1}) == CellState::Explored);
    }
    SUBCASE("identical evidence at the same time is idempotent")
    {
        s.register_robot(1, 9);
        const Frame f{{ev(1, 0, 0, false), ev(2, 3, 2, true)}, {tag(1, 9, 0.4, 1.5, 0.5), tag(2, 9, -1.6, 1.5, 0.5)}};
        CHECK(s.fuse_frame(f, 0.5));
        const GridMap after = s.map();
        const auto belief = s.belief(1);
        CHECK_FALSE(s.fuse_frame(f, 0.5));
        CHECK(s.map() == after);
        CHECK(s.belief(1)->mean == belief->mean);
        CHECK(s.belief(1)->covariance == belief->covariance);
    }
    SUBCASE("a detected robot overlays its cell until it is no longer seen")
    {
        s.register_robot(4, 9);
        s.fuse_frame({{ev(1, 1, 1, true)}, {tag(1, 9, 0.5, 1.5, 0.0)}}, 0.0);
        CHECK(s.map().at({1, 1}) == CellState::Robot);
        REQUIRE(s.map().robot_poses.count(4));
        CHECK(s.map().robot_poses.at(4).x == doctest::Approx(1.5));
        CHECK(s.map().robot_poses.at(4).y == doctest::Approx(1.5));
        // Occupancy at the tag was the robot, so nothing is left behind.
        s.fuse_frame({{ev(1, 1, 1, false), ev(1, 1, 2, true)}, {tag(1, 9, 0.5, 2.5, 0.1)}}, 0.1);
        CHECK(s.map().at({1, 1}) == CellState::Explored);
        CHECK(s.map().at({1, 2}) == CellState::Robot);
        // Unexplained occupancy in a robot cell is an obstacle.
        s.fuse_frame({{ev(1, 1, 2, true)}, {}}, 0.2);
        CHECK(s.map().at({1, 2}) == CellState::Obstacle);
    }
    SUBCASE("unknown cameras raise one fault per id and frame")
    {
        s.fuse_frame({{ev(7, 0, 0, false), ev(7, 1, 0, false), ev(8, 0, 0, true)}, {tag(7, 1, 0, 0, 0)}}, 0.0);
        CHECK(s.faults().size() == 2);
        CHECK(s.map().at({0, 0}) == CellState::Unexplored);
        s.fuse_frame({{ev(1, 9, 9, false)}, {}}, 0.1);
        CHECK(s.faults().size() == 3);
    }
    SUBCASE("server upload merge only overrides blind cells")
    {
        s.fuse_frame({{ev(1, 0, 0, false)}, {}}, 0.0);
        GridMap local(4, 4, 1.0);
        local.set({0, 0}, CellState::Obstacle);
        local.set({3, 3}, CellState::Robot);
        CHECK(s.merge_robot_map(local, 0.1));
        CHECK(s.map().at({0, 0}) == CellState::Explored);
        CHECK(s.map().at({3, 3}) == CellState::Obstacle);
        CHECK_FALSE(s.merge_robot_map(local, 0.2));
        CHECK_THROWS_AS(s.merge_robot_map(GridMap(3, 3, 1.0), 0.3), DimensionMismatch);
        // Upload-only obstacles are not cleared by time.
        s.fuse_frame({}, 10.0);
        CHECK(s.map().at({3, 3}) == CellState::Obstacle);
    }
}

TEST_CASE("fuse_frame invariants over fuzzed evidence")
{
    gen::Rng rng(52);
    for (int run = 0; run < 30; ++run) {
        MapServer s = small_server();
        s.register_robot(1, 5);
        GridMap prev = s.map();
        std::vector<bool> ever_seen(16, false);
        double t = 0.0;
        for (int step = 0; step < 60; ++step) {
            t += gen::uniform(rng, 0.0, 0.6);
            Frame f;
            const int n = gen::integer(rng, 0, 10);
            for (int k = 0; k < n; ++k) {
                const bool occ = gen::integer(rng, 0, 3) == 0;
                const bool wall = occ && gen::integer(rng, 0, 9) == 0;
                f.obstacles.push_back(ev(gen::integer(rng, 1, 2), gen::integer(rng, 0, 3), gen::integer(rng, 0, 3), occ,
                                         wall, t));
            }
            if (gen::integer(rng, 0, 2) == 0)
                f.tags.push_back(tag(1, 5, gen::uniform(rng, -0.9, 0.9), gen::uniform(rng, 0.1, 3.9), t));
            if (gen::integer(rng, 0, 5) == 0)
                f.obstacles.push_back(ev(3, 0, 0, true, false, t));
            const bool changed = s.fuse_frame(f, t);
            const GridMap& m = s.map();

            // Cells within 3 sigma of the tag belong to the robot.
            std::vector<int> near_tag(16, 0);
            for (const auto& d : f.tags) {
                const double wx = d.ground_position.x() + 1.0, wy = d.ground_position.y();
                for (std::size_t i = 0; i < 16; ++i) {
                    const double c = static_cast<double>(i % 4), r = static_cast<double>(i / 4);
                    const double dx = std::max({c - wx, 0.0, wx - c - 1.0});
                    const double dy = std::max({r - wy, 0.0, wy - r - 1.0});
                    near_tag[i] |= std::hypot(dx, dy) <= 0.03;
                }
            }
            std::vector<int> occupied(16, 0), seen(16, 0);
            for (const auto& e : f.obstacles)
                if (e.camera_id != 3) {
                    const std::size_t i = m.linear(e.cell);
                    seen[i] = 1;
                    occupied[i] |= e.wall || (e.occupied && !near_tag[i]);
                }
            for (std::size_t i = 0; i < 16; ++i) {
                ever_seen[i] = ever_seen[i] || seen[i];
                const CellState before = prev.cells()[i], now = m.cells()[i];
                // Unexplored only until first observation, then never again.
                if (now != CellState::Robot)
                    CHECK((now == CellState::Unexplored) == !ever_seen[i]);
                if (before == CellState::Wall)
                    CHECK(now == CellState::Wall);
                if (occupied[i])
                    CHECK((now == CellState::Obstacle || now == CellState::Wall || now == CellState::Robot));
            }
            CHECK(changed == (m.revision() != prev.revision()));
            CHECK(changed == (m.cells() != prev.cells() || m.robot_poses != prev.robot_poses));
            if (changed)
                CHECK(m.revision() == prev.revision() + 1);
            prev = m;
        }
    }
}

TEST_CASE("ekf_predict examples")
{
    GaussianBelief b;
    b.mean = {1.0, 2.0, 0.0};
    b.covariance = Vector3(0.1, 0.2, 0.0).asDiagonal();
    b.covariance(0, 1) = b.covariance(1, 0) = 0.05;

    const GaussianBelief same = ekf_predict(b, Vector3::Zero(), MotionModel::odometry(Matrix3::Zero()));
    CHECK(same.mean == b.mean);
    CHECK(same.covariance == b.covariance);

    const GaussianBelief moved = ekf_predict(b, Vector3(1.0, 0.0, 0.0), MotionModel::odometry(Matrix3::Zero()));
    CHECK(moved.mean.isApprox(Vector3(2.0, 2.0, 0.0)));
    CHECK(moved.covariance == b.covariance);

    const Matrix3 q = Vector3::Constant(0.01).asDiagonal();
    const GaussianBelief grown = ekf_predict(b, Vector3(0.3, -0.2, 0.1), MotionModel::additive(q));
    CHECK(grown.covariance.trace() == doctest::Approx(b.covariance.trace() + q.trace()).epsilon(1e-14));
    CHECK(grown.mean.isApprox(Vector3(1.3, 1.8, 0.1)));
}

TEST_CASE("odometry Jacobian matches finite differences")
{
    gen::Rng rng(53);
    const MotionModel mm = MotionModel::odometry(Matrix3::Zero());
    for (int trial = 0; trial < 50; ++trial) {
        const Vector3 x = gen::vec3(rng, -2.0, 2.0), u = gen::vec3(rng, -0.5, 0.5);
        const Matrix3 j = mm.jacobian(x, u);
        for (int k = 0; k < 3; ++k) {
            Vector3 d = Vector3::Zero();
            d[k] = 1e-6;
            Vector3 diff = mm.f(x + d, u) - mm.f(x - d, u);
            diff.z() = wrap_angle(diff.z());
            CHECK((diff / 2e-6 - j.col(k)).norm() < 1e-7);
        }
    }
}

TEST_CASE("ekf_update limits")
{
    GaussianBelief b;
    b.mean = {1.0, 2.0, 0.3};
    b.covariance = Vector3(0.04, 0.09, 0.5).asDiagonal();

    const GaussianBelief flat = ekf_update(b, Eigen::Vector2d(1.0, 2.0), ObservationModel::position(1e15));
    CHECK((flat.mean - b.mean).norm() < 1e-12);
    CHECK((flat.covariance - b.covariance).norm() < 1e-12);

    const GaussianBelief sharp = ekf_update(b, Eigen::Vector2d(1.4, 1.7), ObservationModel::position(1e-6));
    CHECK(sharp.mean.x() == doctest::Approx(1.4).epsilon(1e-8));
    CHECK(sharp.mean.y() == doctest::Approx(1.7).epsilon(1e-8));
    CHECK(sharp.covariance.trace() < b.covariance.trace());
}

TEST_CASE("1D update equals the conjugate product of Gaussians")
{
    gen::Rng rng(54);
    for (int trial = 0; trial < 200; ++trial) {
        GaussianBelief b;
        const oracle::Gauss1 prior{gen::uniform(rng, -5, 5), gen::uniform(rng, 0.01, 4.0)};
        b.mean = {prior.mean, gen::uniform(rng, -5, 5), 0.0};
        b.covariance = Vector3(prior.var, gen::uniform(rng, 0.1, 1), gen::uniform(rng, 0.1, 1)).asDiagonal();
        const double z = gen::uniform(rng, -5, 5), r = gen::uniform(rng, 0.01, 4.0);
        const GaussianBelief post = ekf_update(b, Eigen::VectorXd::Constant(1, z), ObservationModel::x_only(r));
        const oracle::Gauss1 want = oracle::conjugate(prior, z, r);
        CHECK(close(post.mean.x(), want.mean, 1e-12));
        CHECK(close(post.covariance(0, 0), want.var, 1e-12));
        CHECK(post.mean.y() == b.mean.y());
        CHECK(post.covariance(1, 1) == b.covariance(1, 1));
    }
}

TEST_CASE("covariance stays symmetric PSD over 1000 random steps")
{
    gen::Rng rng(55);
    GaussianBelief b;
    b.covariance = Vector3(0.1, 0.1, 1.0).asDiagonal();
    const MotionModel mm = MotionModel::odometry(Vector3(1e-4, 2e-4, 1e-3).asDiagonal());
    for (int step = 0; step < 1000; ++step) {
        b = ekf_predict(b, gen::vec3(rng, -0.3, 0.3), mm);
        CHECK(b.is_symmetric());
        CHECK(b.is_psd());
        if (gen::integer(rng, 0, 1)) {
            const double trace = b.covariance.trace();
            const Eigen::Vector2d z = b.mean.head<2>() + Eigen::Vector2d(gen::uniform(rng, -0.05, 0.05),
                                                                         gen::uniform(rng, -0.05, 0.05));
            b = ekf_update(b, z, ObservationModel::position(gen::uniform(rng, 1e-4, 0.1)));
            CHECK(b.covariance.trace() <= trace + 1e-15);
        }
        CHECK(b.is_symmetric());
        CHECK(b.is_psd());
        CHECK(std::abs(b.mean.z()) <= std::numbers::pi);
    }
}

TEST_CASE("wrap_angle")
{
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - 2 * std::numbers::pi));
}

TEST_CASE("grid Bayes examples")
{
    const MotionModel still = MotionModel::additive(Matrix3::Zero());
    const ObservationModel om = ObservationModel::position(0.1);

    SUBCASE("uniform prior, no information")
    {
        const GridBelief g = GridBelief::uniform(0, 0, 0.5, 6, 4, 1);
        const GridBelief out = bayes_grid_step(g, Vector3::Zero(), std::nullopt, still, om);
        for (double v : out.p)
            CHECK(v == doctest::Approx(1.0 / 24).epsilon(1e-12));
        const GridBelief flat =
            bayes_grid_step(g, Vector3::Zero(), Eigen::VectorXd::Constant(1, 1.0), still, ObservationModel::x_only(1e12));
        for (double v : flat.p)
            CHECK(v == doctest::Approx(1.0 / 24).epsilon(1e-9));
    }
    SUBCASE("delta prior shifted one cell east")
    {
        GridBelief g = GridBelief::uniform(0, 0, 0.5, 6, 4, 1);
        std::fill(g.p.begin(), g.p.end(), 0.0);
        g.p[g.index(2, 1, 0)] = 1.0;
        const GridBelief out = bayes_grid_step(g, Vector3(0.5, 0, 0), std::nullopt, still, om);
        CHECK(out.at(3, 1, 0) == 1.0);
        CHECK(out.total() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("heading wraps around")
    {
        GridBelief g = GridBelief::uniform(0, 0, 1.0, 1, 1, 8);
        std::fill(g.p.begin(), g.p.end(), 0.0);
        g.p[g.index(0, 0, 7)] = 1.0;
        const GridBelief out =
            bayes_grid_step(g, Vector3(0, 0, std::numbers::pi / 4), std::nullopt, still, om);
        CHECK(out.at(0, 0, 0) == 1.0);
    }
    SUBCASE("occupied cells get no mass")
    {
        GridMap map(6, 4, 0.5);
        map.set({1, 1}, CellState::Wall);
        map.set({4, 2}, CellState::Obstacle);
        const GridBelief g = GridBelief::uniform(0, 0, 0.5, 6, 4, 1);
        const GridBelief out =
            bayes_grid_step(g, Vector3::Zero(), Eigen::Vector2d(1.5, 1.0), still, ObservationModel::position(1.0), &map);
        CHECK(out.at(1, 1, 0) == 0.0);
        CHECK(out.at(4, 2, 0) == 0.0);
        CHECK(out.total() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(out.eta > 0.0);
    }
    SUBCASE("likelihood that kills everything")
    {
        GridMap map(1, 1, 0.5);
        map.set({0, 0}, CellState::Wall);
        const GridBelief g = GridBelief::uniform(0, 0, 0.5, 1, 1, 1);
        CHECK_THROWS_AS(bayes_grid_step(g, Vector3::Zero(), Eigen::Vector2d(0.25, 0.25), still, om, &map),
                        DegenerateLikelihood);
    }
}

TEST_CASE("grid Bayes conserves mass")
{
    gen::Rng rng(56);
    GridBelief g = GridBelief::uniform(0, 0, 0.25, 12, 10, 8);
    const MotionModel mm = MotionModel::odometry(Vector3(0.01, 0.01, 0.05).asDiagonal());
    const ObservationModel om = ObservationModel::position(0.3);
    for (int step = 0; step < 30; ++step) {
        std::optional<Eigen::VectorXd> z;
        if (step % 2)
            z = Eigen::Vector2d(gen::uniform(rng, 0.5, 2.5), gen::uniform(rng, 0.5, 2.0));
        g = bayes_grid_step(g, gen::vec3(rng, -0.1, 0.1), z, mm, om);
        CHECK(g.total() == doctest::Approx(1.0).epsilon(1e-9));
        for (double v : g.p)
            CHECK(v >= 0.0);
    }
}

TEST_CASE("EKF and grid Bayes agree on 1D linear-Gaussian instances")
{
    gen::Rng rng(57);
    const double res = 0.05;
    const int n = 400;  // [-10, 10)
    for (int trial = 0; trial < 30; ++trial) {
        const oracle::Gauss1 prior{gen::uniform(rng, -2, 2), gen::uniform(rng, 0.2, 1.0)};
        const double u = gen::uniform(rng, -1, 1), q = gen::uniform(rng, 0.0, 0.3);
        const double z = gen::uniform(rng, -2, 2), r = gen::uniform(rng, 0.1, 1.0);

        GaussianBelief b;
        b.mean = {prior.mean, 0.0, 0.0};
        b.covariance = Vector3(prior.var, 0.0, 0.0).asDiagonal();
        const MotionModel mm = MotionModel::additive(Vector3(q, 0.0, 0.0).asDiagonal());
        const ObservationModel om = ObservationModel::x_only(r);
        const GaussianBelief post = ekf_update(ekf_predict(b, Vector3(u, 0, 0), mm), Eigen::VectorXd::Constant(1, z), om);

        GridBelief g = GridBelief::uniform(-10.0, 0.0, res, n, 1, 1);
        g.p = oracle::discretize(prior, -10.0, res, n);
        g = bayes_grid_step(g, Vector3(u, 0, 0), Eigen::VectorXd::Constant(1, z), mm, om);

        const auto want = oracle::discretize({post.mean.x(), post.covariance(0, 0)}, -10.0, res, n);
        CAPTURE(trial);
        CHECK(oracle::total_variation(g.p, want) < 0.01);
        // The 1D chain also matches the closed form end to end.
        const oracle::Gauss1 closed = oracle::conjugate({prior.mean + u, prior.var + q}, z, r);
        CHECK(close(post.mean.x(), closed.mean, 1e-12));
        CHECK(close(post.covariance(0, 0), closed.var, 1e-12));
    }
}

}  // TEST_SUITE
