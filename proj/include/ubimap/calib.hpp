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

#ifndef UBIMAP_CALIB_HPP
#define UBIMAP_CALIB_HPP

#include "ubimap/geom.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ubimap::calib {

using geom::Point3;
using geom::RigidTransform;

class DegenerateGeometry : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DisconnectedGraph : public std::runtime_error {
public:
    DisconnectedGraph(std::vector<int> unreachable);
    const std::vector<int>& unreachable() const { return unreachable_; }

private:
    std::vector<int> unreachable_;
};

struct Correspondence {
    Point3 p_i = Point3::Zero();
    Point3 p_j = Point3::Zero();
    std::optional<int> landmark_id;
};

/// Landmarks seen by both cameras, each in its own camera's frame.
struct CorrespondenceSet {
    int camera_i = 0;
    int camera_j = 0;
    std::vector<Correspondence> pairs;

    /// Same pairs with the roles of i and j exchanged.
    CorrespondenceSet swapped() const;
};

struct IcpOptions {
    int max_iterations = 50;
    /// Stop once the RMS residual, or its change, drops below this (m).
    double convergence_threshold = 1e-9;
    bool use_known_ids = true;
};

struct Alignment {
    RigidTransform transform;
    double rms_residual = 0.0;
};

/// Least-squares T with T p_i ~ p_j (centroids, cross-covariance SVD,
/// reflection guard). Throws DegenerateGeometry for fewer than 3 pairs or
/// collinear point sets.
Alignment best_rigid_transform(const CorrespondenceSet& c);

struct PointSet {
    std::vector<Point3> points;
    /// Empty, or one id per point.
    std::vector<int> ids;
};

struct IcpResult {
    RigidTransform transform;
    double rms_residual = 0.0;
    int iterations = 0;
    /// RMS after each accepted iteration.
    std::vector<double> residual_trace;
};

/// Aligns `source` onto `target` (T source ~ target). Matching is by id when
/// requested and both sets carry ids, otherwise nearest neighbour with ties
/// going to the lowest target index.
IcpResult icp(const PointSet& source, const PointSet& target, const IcpOptions& opts,
              const RigidTransform& initial = RigidTransform::identity());

/// Edge (i, j) stores T_ij, the pose of camera j in camera i's frame:
/// T_ij p_j ~ p_i for a landmark seen by both.
struct Edge {
    int i = 0;
    int j = 0;
    RigidTransform transform;
    CorrespondenceSet correspondences;
    double residual = 0.0;  // m, RMS
};

struct EdgeFailure {
    int i = 0;
    int j = 0;
    std::string reason;
};

struct TransformGraph {
    std::vector<int> nodes;  // sorted
    std::vector<Edge> edges;
    int reference = 0;
    std::vector<EdgeFailure> failures;
};

struct PairwiseInput {
    int i = 0;
    int j = 0;
    CorrespondenceSet correspondences;
};

/// Nodes are every camera named in `pairwise` plus the reference. Failed
/// or duplicate pairs are listed in `failures` and get no edge.
TransformGraph build_graph(const std::vector<PairwiseInput>& pairwise, const IcpOptions& opts, int reference);

using PoseMap = std::map<int, RigidTransform>;

/// Breadth-first spanning tree from the reference (neighbours visited in
/// id order). Each pose maps camera coordinates into the reference frame.
/// Throws DisconnectedGraph naming unreachable cameras.
PoseMap propagate(const TransformGraph& graph);

/// C = sum over edges and pairs of |pose_j p_j - pose_i p_i|^2, which equals
/// sum |T_ij p_j - p_i|^2 with T_ij = pose_i^-1 pose_j.
double global_cost(const TransformGraph& graph, const PoseMap& poses);

/// dC/d(increment) for every non-reference node, 6 entries per node in
/// sorted-id order: rotation increment (left-multiplied exp) then
/// translation.
Eigen::VectorXd global_gradient(const TransformGraph& graph, const PoseMap& poses);

struct RefineOptions {
    int max_iterations = 50;
    double gradient_tolerance = 1e-10;
    double relative_cost_tolerance = 1e-12;
    double initial_damping = 1e-3;
};

struct RefineResult {
    PoseMap poses;
    /// Cost before the first step and after every accepted step.
    std::vector<double> cost_trace;
    int iterations = 0;
};

/// Levenberg-Marquardt on global poses with the reference held fixed.
RefineResult refine(const TransformGraph& graph, const PoseMap& initial, const RefineOptions& opts = {});

struct EdgeDiscrepancy {
    int i = 0;
    int j = 0;
    double rotation = 0.0;     // rad
    double translation = 0.0;  // m
};

/// How far each measured T_ij is from pose_i^-1 pose_j.
std::vector<EdgeDiscrepancy> edge_discrepancies(const TransformGraph& graph, const PoseMap& poses);

}  // namespace ubimap::calib

#endif  // UBIMAP_CALIB_HPP
