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

#include "ubimap/geom.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ubimap::geom {

namespace {

constexpr double kReorthoThreshold = 1e-12;

}  // namespace

RigidTransform::RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation)
{
    if (!rotation.allFinite() || !translation.allFinite())
        throw std::invalid_argument("RigidTransform: non-finite component");
    if (rotation.determinant() <= 0.0)
        throw std::invalid_argument("RigidTransform: rotation is not proper (det <= 0)");
    if (orthogonality_drift(rotation_) > kReorthoThreshold)
        rotation_ = nearest_rotation(rotation_);
}

RigidTransform RigidTransform::translate(double x, double y, double z)
{
    return {Mat3::Identity(), Vec3(x, y, z)};
}

RigidTransform RigidTransform::rot_x(double radians)
{
    return {Eigen::AngleAxisd(radians, Vec3::UnitX()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::rot_y(double radians)
{
    return {Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::rot_z(double radians)
{
    return {Eigen::AngleAxisd(radians, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero()};
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis_angle)
{
    return {exp_so3(axis_angle), Vec3::Zero()};
}

RigidTransform RigidTransform::inverse() const
{
    Mat3 rt = rotation_.transpose();
    return {rt, -(rt * translation_)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const
{
    return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

Point3 apply(const RigidTransform& t, const Point3& p) { return t.apply(p); }

double rotation_angle(const Mat3& r)
{
    // atan2 form stays accurate near 0 and pi, unlike acos of the trace.
    Vec3 v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    double s = 0.5 * v.norm();
    double c = 0.5 * (r.trace() - 1.0);
    return std::atan2(s, c);
}

double rotation_distance(const RigidTransform& a, const RigidTransform& b)
{
    return rotation_angle(a.rotation().transpose() * b.rotation());
}

double orthogonality_drift(const Mat3& r)
{
    return (r.transpose() * r - Mat3::Identity()).norm();
}

Mat3 nearest_rotation(const Mat3& m)
{
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

Mat3 skew(const Vec3& v)
{
    Mat3 k;
    k << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return k;
}

Mat3 exp_so3(const Vec3& w)
{
    double theta = w.norm();
    if (theta < 1e-8) {
        Mat3 k = skew(w);
        return nearest_rotation(Mat3::Identity() + k + 0.5 * k * k);
    }
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Vec3 log_so3(const Mat3& r)
{
    Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
}

double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

double rad_to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }

}  // namespace ubimap::geom
