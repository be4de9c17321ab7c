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

#ifndef UBIMAP_GEOM_HPP
#define UBIMAP_GEOM_HPP

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ubimap::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A point in some 3D frame, meters.
using Point3 = Eigen::Vector3d;

/// Proper rigid motion x -> R x + t.
///
/// Rotations are stored as matrices. Construction from an arbitrary 3x3
/// matrix projects it onto SO(3) when it has drifted, so every instance
/// satisfies |R^T R - I|_F < 1e-9 and det(R) = +1.
class RigidTransform {
public:
    RigidTransform();
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform translate(double x, double y, double z);
    static RigidTransform rot_x(double radians);
    static RigidTransform rot_y(double radians);
    static RigidTransform rot_z(double radians);
    /// Rotation by exp([axis_angle]x), no translation.
    static RigidTransform from_axis_angle(const Vec3& axis_angle);

    const Mat3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
    RigidTransform inverse() const;

    /// (*this) after `rhs`: (a * b).apply(p) == a.apply(b.apply(p)).
    RigidTransform operator*(const RigidTransform& rhs) const;
    Point3 operator*(const Point3& p) const { return apply(p); }

private:
    Mat3 rotation_;
    Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
Point3 apply(const RigidTransform& t, const Point3& p);

/// Geodesic angle between the two rotations, in [0, pi].
double rotation_distance(const RigidTransform& a, const RigidTransform& b);
double rotation_angle(const Mat3& r);

/// |R^T R - I|_F
double orthogonality_drift(const Mat3& r);
/// Nearest proper rotation in the Frobenius sense (SVD projection).
Mat3 nearest_rotation(const Mat3& m);

Mat3 skew(const Vec3& v);
/// Rodrigues map so(3) -> SO(3).
Mat3 exp_so3(const Vec3& w);
/// Inverse of exp_so3 on angles in [0, pi].
Vec3 log_so3(const Mat3& r);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace ubimap::geom

#endif  // UBIMAP_GEOM_HPP
