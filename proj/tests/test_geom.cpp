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
#include "ubimap/geom.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace ubimap::geom;

namespace {

constexpr double kPi = std::numbers::pi;

double max_diff(const RigidTransform& a, const RigidTransform& b)
{
    return std::max((a.rotation() - b.rotation()).cwiseAbs().maxCoeff(),
                    (a.translation() - b.translation()).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_SUITE("geom") {

TEST_CASE("compose examples")
{
    const auto t = RigidTransform(exp_so3({0.1, -0.2, 0.3}), {1, 2, 3});
    CHECK(max_diff(compose(t, RigidTransform::identity()), t) == 0.0);
    CHECK(max_diff(compose(RigidTransform::rot_z(deg_to_rad(30)), RigidTransform::rot_z(deg_to_rad(60))),
                   RigidTransform::rot_z(deg_to_rad(90))) < 1e-12);
    const auto tt = compose(RigidTransform::translate(1, 0, 0), RigidTransform::translate(0, 1, 0));
    CHECK(max_diff(tt, RigidTransform::translate(1, 1, 0)) == 0.0);
}

TEST_CASE("invert examples")
{
    CHECK(max_diff(invert(RigidTransform::identity()), RigidTransform::identity()) == 0.0);
    CHECK(max_diff(invert(RigidTransform::translate(1, 2, 3)), RigidTransform::translate(-1, -2, -3)) == 0.0);
    CHECK(max_diff(invert(RigidTransform::rot_z(kPi / 2)), RigidTransform::rot_z(-kPi / 2)) < 1e-15);
}

TEST_CASE("apply examples")
{
    CHECK(apply(RigidTransform::identity(), {1, 2, 3}) == Point3(1, 2, 3));
    CHECK((apply(RigidTransform::rot_z(kPi / 2), {1, 0, 0}) - Point3(0, 1, 0)).norm() < 1e-12);
    const auto t = compose(RigidTransform::translate(1, 0, 0), RigidTransform::rot_z(kPi / 2));
    CHECK((apply(t, {1, 0, 0}) - Point3(1, 1, 0)).norm() < 1e-12);
    CHECK((t * Point3(1, 0, 0) - Point3(1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("rotation_distance examples")
{
    const auto t = RigidTransform(exp_so3({0.4, 0.1, -1.0}), {0, 0, 0});
    CHECK(rotation_distance(t, t) < 1e-15);
    CHECK(rotation_distance(RigidTransform::identity(), RigidTransform::rot_z(kPi / 2)) ==
          doctest::Approx(kPi / 2).epsilon(1e-14));
    CHECK(rotation_distance(RigidTransform::rot_z(deg_to_rad(10)), RigidTransform::rot_z(deg_to_rad(350))) ==
          doctest::Approx(deg_to_rad(20)).epsilon(1e-12));
    CHECK(rotation_distance(RigidTransform::identity(), RigidTransform::rot_x(kPi)) ==
          doctest::Approx(kPi).epsilon(1e-14));
}

TEST_CASE("construction validates")
{
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1.0;
    CHECK_THROWS_AS(RigidTransform(reflect, Vec3::Zero()), std::invalid_argument);
    CHECK_THROWS_AS(RigidTransform(Mat3::Identity(), Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(RigidTransform(Mat3::Zero(), Vec3::Zero()), std::invalid_argument);

    // Slightly drifted input is projected back onto SO(3).
    Mat3 drifted = exp_so3({0.3, 0.2, 0.1});
    drifted(0, 1) += 1e-7;
    const RigidTransform t(drifted, Vec3::Zero());
    CHECK(orthogonality_drift(t.rotation()) < 1e-12);
    CHECK(t.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exp and log are inverse")
{
    gen::Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        Vec3 w = gen::vec3(rng, -1.0, 1.0).normalized() * gen::uniform(rng, 0.0, kPi - 1e-6);
        CHECK((log_so3(exp_so3(w)) - w).norm() < 1e-9);
    }
    CHECK(log_so3(Mat3::Identity()).norm() == 0.0);
    CHECK(exp_so3(Vec3::Zero()) == Mat3::Identity());
}

TEST_CASE("property: inverse, isometry, associativity")
{
    gen::Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        const auto a = gen::transform(rng), b = gen::transform(rng), c = gen::transform(rng);
        CHECK(max_diff(compose(invert(a), a), RigidTransform::identity()) < 1e-10);
        CHECK(max_diff(compose(a, invert(a)), RigidTransform::identity()) < 1e-12);
        CHECK(max_diff(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-10);
        const Point3 p = gen::vec3(rng, -10, 10), q = gen::vec3(rng, -10, 10);
        CHECK(std::abs((apply(a, p) - apply(a, q)).norm() - (p - q).norm()) < 1e-9);

        const auto ab = compose(a, b);
        CHECK(orthogonality_drift(ab.rotation()) < 1e-9);
        CHECK(ab.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-9));
        const double d = rotation_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= kPi);
        CHECK(d == doctest::Approx(rotation_distance(b, a)).epsilon(1e-9));
    }
}

TEST_CASE("long composition chains stay orthonormal")
{
    gen::Rng rng(5);
    RigidTransform t;
    for (int i = 0; i < 10000; ++i)
        t = t * gen::small_transform(rng, 0.3, 0.1);
    CHECK(orthogonality_drift(t.rotation()) < 1e-9);
    CHECK(t.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("nearest_rotation and angles")
{
    const Mat3 r = exp_so3({0.0, 0.0, 1.0});
    CHECK((nearest_rotation(2.0 * r) - r).norm() < 1e-12);
    CHECK(rotation_angle(r) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rad_to_deg(deg_to_rad(123.5)) == doctest::Approx(123.5).epsilon(1e-15));
    CHECK((skew({1, 2, 3}) * Vec3(4, 5, 6) - Vec3(1, 2, 3).cross(Vec3(4, 5, 6))).norm() == 0.0);
}

}
