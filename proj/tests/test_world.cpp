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
#include "ubimap/world.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ubimap::world;
using ubimap::geom::deg_to_rad;

namespace {

CameraSpec make_camera(double x, double y, double h, double yaw_deg, double hfov_deg, double vfov_deg, double range)
{
    CameraSpec c;
    c.x = x;
    c.y = y;
    c.height = h;
    c.yaw = deg_to_rad(yaw_deg);
    c.hfov = deg_to_rad(hfov_deg);
    c.vfov = deg_to_rad(vfov_deg);
    c.max_range = range;
    return c;
}

bool includes(const CellSet& big, const CellSet& small)
{
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

TEST_SUITE("world") {

TEST_CASE("ground_footprint examples")
{
    CHECK(ground_footprint(make_camera(0, 0, 1.5, 0, 60, 90, 10)).depth == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(ground_footprint(make_camera(0, 0, 2.0, 0, 90, 60, 10)).width == doctest::Approx(4.0).epsilon(1e-15));
    const auto c = make_camera(0, 0, 3.0, 0, 60, 60, 10);
    CHECK(ground_footprint(c).depth == doctest::Approx(1.7320508075688772).epsilon(1e-15));
    CHECK(std::abs(ground_footprint(c).depth - static_cast<double>(oracle::footprint(c).depth)) < 1e-15);
    // Range clamps the depth.
    CHECK(ground_footprint(make_camera(0, 0, 3.0, 0, 60, 90, 1.25)).depth == 1.25);
}

TEST_CASE("footprint local frame: yaw 0 looks along +y")
{
    const auto fp = ground_footprint(make_camera(1, 1, 1, 0, 90, 90, 10));
    CHECK(fp.contains({1.0, 1.9}));
    CHECK_FALSE(fp.contains({1.0, 0.9}));
    CHECK(fp.contains({0.0, 1.5}));
    CHECK_FALSE(fp.contains({-0.1, 1.5}));
    const Point2 w = fp.to_world(fp.to_local({0.3, 1.7}));
    CHECK((w - Point2(0.3, 1.7)).norm() < 1e-15);
}

TEST_CASE("covered_cells: degenerate range gives nothing")
{
    GridWorld w(1.0, 6, 6);
    CHECK(covered_cells(make_camera(3.2, 3.2, 1, 0, 90, 90, 1e-12), w).empty());
}

TEST_CASE("covered_cells: 2 m x 2 m footprint in an open 6x6 room")
{
    GridWorld w(1.0, 6, 6);
    const auto cam = make_camera(3.0, 3.0, 1.0, 0, 90, 2.0 * std::atan(2.0) * 180.0 / std::numbers::pi, 10);
    CHECK(ground_footprint(cam).depth == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(ground_footprint(cam).width == doctest::Approx(2.0).epsilon(1e-14));
    const auto got = covered_cells(cam, w);
    CHECK(got == oracle::covered_cells(cam, w));
    CHECK(got == CellSet{{2, 3}, {3, 3}, {2, 4}, {3, 4}});
}

TEST_CASE("covered_cells: wall row one cell ahead cuts the footprint")
{
    GridWorld w(1.0, 6, 6);
    for (int c = 0; c < 6; ++c)
        w.set_terrain({c, 4}, Terrain::Wall);
    const auto cam = make_camera(3.0, 3.0, 1.0, 0, 90, 2.0 * std::atan(2.0) * 180.0 / std::numbers::pi, 10);
    const auto got = covered_cells(cam, w);
    CHECK(got == oracle::covered_cells(cam, w));
    CHECK(got == CellSet{{2, 3}, {3, 3}});
    CHECK(visible_wall_cells(cam, w) == CellSet{{2, 4}, {3, 4}});
}

TEST_CASE("line_of_sight examples")
{
    GridWorld w(1.0, 6, 6);
    CHECK(line_of_sight(w, {2.5, 2.5}, {2.5, 2.5}));
    CHECK(line_of_sight(w, {2.5, 2.5}, {3.5, 2.5}));
    for (int c = 0; c < 6; ++c)
        w.set_terrain({c, 3}, Terrain::Wall);
    const Point2 a{1.3, 1.7}, b{4.2, 5.1};
    CHECK(line_of_sight(w, a, b) == oracle::line_of_sight_sampled(w, a.x(), a.y(), b.x(), b.y()));
    CHECK_FALSE(line_of_sight(w, a, b));
    CHECK(line_of_sight(w, {0.2, 0.4}, {5.7, 2.9}));
    CHECK(first_wall(w, a, b) == CellIndex{2, 3});
}

TEST_CASE("line_of_sight: exact corner crossing touches both side cells")
{
    GridWorld w(1.0, 4, 4);
    w.set_terrain({1, 0}, Terrain::Wall);
    CHECK_FALSE(line_of_sight(w, {0.5, 0.5}, {1.5, 1.5}));
}

TEST_CASE("property: line_of_sight matches the slab-clipping oracle")
{
    gen::Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        const auto w = gen::world(rng, gen::integer(rng, 2, 10), gen::integer(rng, 2, 10), 0.5, 0.2);
        const double wx = w.width() * 0.5, wy = w.height() * 0.5;
        for (int k = 0; k < 20; ++k) {
            const double ax = gen::uniform(rng, 0, wx), ay = gen::uniform(rng, 0, wy);
            const double bx = gen::uniform(rng, 0, wx), by = gen::uniform(rng, 0, wy);
            CHECK(line_of_sight(w, {ax, ay}, {bx, by}) == oracle::line_of_sight(w, ax, ay, bx, by));
            CHECK(line_of_sight(w, {ax, ay}, {bx, by}) == line_of_sight(w, {bx, by}, {ax, ay}));
        }
    }
}

TEST_CASE("property: covered_cells matches the brute-force oracle")
{
    gen::Rng rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        const auto w = gen::world(rng, gen::integer(rng, 3, 10), gen::integer(rng, 3, 10), 0.5, 0.15);
        CameraSpec cam = gen::camera(rng);
        cam.x = gen::uniform(rng, 0.0, w.width() * 0.5);
        cam.y = gen::uniform(rng, 0.0, w.height() * 0.5);
        cam.height = gen::uniform(rng, 0.3, 2.5);
        CHECK(covered_cells(cam, w) == oracle::covered_cells(cam, w));
    }
}

TEST_CASE("property: occlusion only removes cells; height grows the footprint")
{
    gen::Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto w = gen::world(rng, 8, 8, 0.5, 0.2);
        CameraSpec cam = gen::camera(rng);
        cam.x = gen::uniform(rng, 0.0, 4.0);
        cam.y = gen::uniform(rng, 0.0, 4.0);
        cam.max_range = 100.0;
        CHECK(includes(covered_cells(cam, w.without_walls()), covered_cells(cam, w)));

        const auto open = w.without_walls();
        CameraSpec higher = cam;
        higher.height = cam.height * gen::uniform(rng, 1.0, 2.0);
        CHECK(includes(covered_cells(higher, open), covered_cells(cam, open)));
    }
}

TEST_CASE("camera pose: optical axis meets the ground at the footprint center")
{
    gen::Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const CameraSpec cam = gen::camera(rng);
        const auto pose = camera_world_pose(cam);
        const auto fp = ground_footprint(cam);
        const Point3 eye = pose.translation();
        CHECK((eye - Point3(cam.x, cam.y, cam.height)).norm() < 1e-12);
        const Point3 axis = pose.rotation().col(2);
        const double s = -eye.z() / axis.z();
        const Point3 hit = eye + s * axis;
        const Point2 target = fp.to_world({0.0, fp.depth / 2.0});
        CHECK((hit.head<2>() - target).norm() < 1e-9);
        CHECK(std::abs(hit.z()) < 1e-12);
    }
}

TEST_CASE("grid indexing")
{
    GridWorld w(0.25, 4, 3);
    CHECK(w.cell_at({0.0, 0.0}) == CellIndex{0, 0});
    CHECK(w.cell_at({1.0, 0.75}) == CellIndex{3, 2});
    CHECK_FALSE(w.cell_at({1.01, 0.1}));
    CHECK_FALSE(w.cell_at({-0.01, 0.1}));
    for (std::size_t i = 0; i < w.cell_count(); ++i)
        CHECK(w.linear(w.from_linear(i)) == i);
    CHECK((w.cell_center({1, 2}) - Point2(0.375, 0.625)).norm() < 1e-15);
}

TEST_CASE("lattice candidates skip walls and use eight yaws")
{
    GridWorld w(1.0, 3, 2);
    w.set_terrain({1, 0}, Terrain::Wall);
    CameraSpec proto = make_camera(0, 0, 1, 0, 60, 60, 2);
    const auto c = lattice_candidates(w, proto, 1.0, 10);
    CHECK(c.size() == 5 * 8);
    CHECK(c.front().id == 10);
    CHECK(c.back().id == 10 + 39);
    CHECK(c[1].yaw == doctest::Approx(std::numbers::pi / 4));
    for (const auto& cam : c)
        CHECK_FALSE(w.is_wall(*w.cell_at({cam.x, cam.y})));
}

}
