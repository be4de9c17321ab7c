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

#include "ubimap/calib.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <unordered_map>

namespace ubimap::calib {

using geom::Mat3;
using geom::Vec3;

namespace {

// Second singular value of the centered cloud relative to the first; below
// this the set is treated as collinear.
constexpr double kCollinearRatio = 1e-9;

bool spans_plane(const std::vector<Point3>& pts, const Vec3& centroid)
{
    Eigen::Matrix<double, 3, Eigen::Dynamic> m(3, pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k)
        m.col(k) = pts[k] - centroid;
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, Eigen::Dynamic>> svd(m);
    const auto s = svd.singularValues();
    return s(0) > 0.0 && s(1) > kCollinearRatio * s(0);
}

}  // namespace

DisconnectedGraph::DisconnectedGraph(std::vector<int> unreachable)
    : std::runtime_error([&] {
          std::string msg = "transform graph is disconnected; unreachable cameras:";
          for (int id : unreachable)
              msg += " " + std::to_string(id);
          return msg;
      }()),
      unreachable_(std::move(unreachable))
{
}

CorrespondenceSet CorrespondenceSet::swapped() const
{
    CorrespondenceSet s{camera_j, camera_i, {}};
    s.pairs.reserve(pairs.size());
    for (const auto& p : pairs)
        s.pairs.push_back({p.p_j, p.p_i, p.landmark_id});
    return s;
}

Alignment best_rigid_transform(const CorrespondenceSet& c)
{
    const std::size_t n = c.pairs.size();
    if (n < 3)
        throw DegenerateGeometry("best_rigid_transform: need at least 3 correspondences, got " + std::to_string(n));

    std::vector<Point3> src, dst;
    src.reserve(n);
    dst.reserve(n);
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (const auto& p : c.pairs) {
        if (!p.p_i.allFinite() || !p.p_j.allFinite())
            throw DegenerateGeometry("best_rigid_transform: non-finite point");
        src.push_back(p.p_i);
        dst.push_back(p.p_j);
        cs += p.p_i;
        cd += p.p_j;
    }
    cs /= static_cast<double>(n);
    cd /= static_cast<double>(n);
    if (!spans_plane(src, cs) || !spans_plane(dst, cd))
        throw DegenerateGeometry("best_rigid_transform: collinear point set, rotation is ambiguous");

    Mat3 h = Mat3::Zero();
    for (std::size_t k = 0; k < n; ++k)
        h += (src[k] - cs) * (dst[k] - cd).transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    if ((v * u.transpose()).determinant() < 0.0)
        d(2, 2) = -1.0;
    const Mat3 r = v * d * u.transpose();
    const Vec3 t = cd - r * cs;

    Alignment a{RigidTransform(r, t), 0.0};
    double sq = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        sq += (a.transform.apply(src[k]) - dst[k]).squaredNorm();
    a.rms_residual = std::sqrt(sq / static_cast<double>(n));
    return a;
}

namespace {

// (source index, target index) pairs for the current estimate.
std::vector<std::pair<int, int>> match(const PointSet& source, const PointSet& target, const RigidTransform& t,
                                       bool by_id)
{
    std::vector<std::pair<int, int>> out;
    if (by_id) {
        std::unordered_map<int, int> where;
        for (std::size_t k = 0; k < target.ids.size(); ++k)
            where.emplace(target.ids[k], static_cast<int>(k));
        for (std::size_t k = 0; k < source.ids.size(); ++k)
            if (auto it = where.find(source.ids[k]); it != where.end())
                out.emplace_back(static_cast<int>(k), it->second);
        return out;
    }
    for (std::size_t k = 0; k < source.points.size(); ++k) {
        const Point3 q = t.apply(source.points[k]);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < target.points.size(); ++m) {
            double d = (target.points[m] - q).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(m);
            }
        }
        out.emplace_back(static_cast<int>(k), best);
    }
    return out;
}

struct IcpRun {
    IcpResult result;
    std::vector<std::pair<int, int>> matches;
};

IcpRun run_icp(const PointSet& source, const PointSet& target, const IcpOptions& opts, const RigidTransform& initial)
{
    if (opts.max_iterations < 1 || !(opts.convergence_threshold > 0.0))
        throw std::invalid_argument("icp: need max_iterations >= 1 and a positive threshold");
    if (source.points.size() < 3 || target.points.size() < 3)
        throw DegenerateGeometry("icp: both point sets need at least 3 points");
    const bool by_id = opts.use_known_ids && source.ids.size() == source.points.size() &&
                       target.ids.size() == target.points.size();

    IcpRun run;
    run.result.transform = initial;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opts.max_iterations; ++it) {
        auto m = match(source, target, run.result.transform, by_id);
        CorrespondenceSet cs;
        for (auto [k, q] : m)
            cs.pairs.push_back({source.points[k], target.points[q], std::nullopt});
        Alignment a = best_rigid_transform(cs);
        if (a.rms_residual > prev)
            break;  // numerical noise only; keep the last accepted estimate
        run.result.transform = a.transform;
        run.result.rms_residual = a.rms_residual;
        run.result.iterations = it;
        run.result.residual_trace.push_back(a.rms_residual);
        run.matches = std::move(m);
        if (a.rms_residual < opts.convergence_threshold || prev - a.rms_residual < opts.convergence_threshold)
            break;
        prev = a.rms_residual;
    }
    return run;
}

}  // namespace

IcpResult icp(const PointSet& source, const PointSet& target, const IcpOptions& opts, const RigidTransform& initial)
{
    return run_icp(source, target, opts, initial).result;
}

TransformGraph build_graph(const std::vector<PairwiseInput>& pairwise, const IcpOptions& opts, int reference)
{
    TransformGraph g;
    g.reference = reference;
    std::set<int> nodes{reference};
    std::set<std::pair<int, int>> seen;

    for (const auto& in : pairwise) {
        nodes.insert(in.i);
        nodes.insert(in.j);
        if (in.i == in.j) {
            g.failures.push_back({in.i, in.j, "self pair"});
            continue;
        }
        auto key = std::minmax(in.i, in.j);
        if (!seen.insert({key.first, key.second}).second) {
            g.failures.push_back({in.i, in.j, "duplicate pair"});
            continue;
        }

        // T_ij maps camera-j points onto camera-i points.
        PointSet src, dst;
        bool all_ids = true;
        for (const auto& p : in.correspondences.pairs) {
            src.points.push_back(p.p_j);
            dst.points.push_back(p.p_i);
            if (p.landmark_id) {
                src.ids.push_back(*p.landmark_id);
                dst.ids.push_back(*p.landmark_id);
            } else {
                all_ids = false;
            }
        }
        if (!all_ids) {
            src.ids.clear();
            dst.ids.clear();
        }
        try {
            IcpRun run = run_icp(src, dst, opts, RigidTransform::identity());
            Edge e;
            e.i = in.i;
            e.j = in.j;
            e.transform = run.result.transform;
            e.residual = run.result.rms_residual;
            e.correspondences.camera_i = in.i;
            e.correspondences.camera_j = in.j;
            for (auto [k, q] : run.matches) {
                std::optional<int> id;
                if (!src.ids.empty())
                    id = src.ids[k];
                e.correspondences.pairs.push_back({dst.points[q], src.points[k], id});
            }
            g.edges.push_back(std::move(e));
        } catch (const DegenerateGeometry& ex) {
            g.failures.push_back({in.i, in.j, ex.what()});
        }
    }
    g.nodes.assign(nodes.begin(), nodes.end());
    return g;
}

PoseMap propagate(const TransformGraph& graph)
{
    // node -> (neighbour, edge index), neighbours in id order
    std::map<int, std::vector<std::pair<int, std::size_t>>> adj;
    for (int n : graph.nodes)
        adj[n];
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        adj[graph.edges[e].i].emplace_back(graph.edges[e].j, e);
        adj[graph.edges[e].j].emplace_back(graph.edges[e].i, e);
    }
    for (auto& [n, list] : adj)
        std::sort(list.begin(), list.end());

    PoseMap poses;
    poses[graph.reference] = RigidTransform::identity();
    std::deque<int> queue{graph.reference};
    while (!queue.empty()) {
        int at = queue.front();
        queue.pop_front();
        for (auto [next, e] : adj[at]) {
            if (poses.count(next))
                continue;
            const Edge& edge = graph.edges[e];
            poses[next] = edge.i == at ? poses[at] * edge.transform : poses[at] * edge.transform.inverse();
            queue.push_back(next);
        }
    }

    std::vector<int> unreachable;
    for (const auto& [n, list] : adj)
        if (!poses.count(n))
            unreachable.push_back(n);
    if (!unreachable.empty())
        throw DisconnectedGraph(std::move(unreachable));
    return poses;
}

double global_cost(const TransformGraph& graph, const PoseMap& poses)
{
    double c = 0.0;
    for (const auto& e : graph.edges) {
        const RigidTransform& pi = poses.at(e.i);
        const RigidTransform& pj = poses.at(e.j);
        for (const auto& p : e.correspondences.pairs)
            c += (pj.apply(p.p_j) - pi.apply(p.p_i)).squaredNorm();
    }
    return c;
}

namespace {

// Variable block offset for each non-reference node.
std::map<int, int> variable_layout(const TransformGraph& graph)
{
    std::map<int, int> at;
    int offset = 0;
    for (int n : graph.nodes)
        if (n != graph.reference) {
            at[n] = offset;
            offset += 6;
        }
    return at;
}

// Gauss-Newton system: A = J^T J, b = J^T r.
void normal_equations(const TransformGraph& graph, const PoseMap& poses, const std::map<int, int>& layout,
                      Eigen::MatrixXd& a, Eigen::VectorXd& b)
{
    const int n = static_cast<int>(layout.size()) * 6;
    a = Eigen::MatrixXd::Zero(n, n);
    b = Eigen::VectorXd::Zero(n);
    for (const auto& e : graph.edges) {
        const RigidTransform& pi = poses.at(e.i);
        const RigidTransform& pj = poses.at(e.j);
        auto oi = layout.find(e.i);
        auto oj = layout.find(e.j);
        for (const auto& p : e.correspondences.pairs) {
            const Vec3 wi = pi.apply(p.p_i);
            const Vec3 wj = pj.apply(p.p_j);
            const Vec3 r = wj - wi;
            Eigen::Matrix<double, 3, 6> ji, jj;
            ji << geom::skew(pi.rotation() * p.p_i), -Mat3::Identity();
            jj << -geom::skew(pj.rotation() * p.p_j), Mat3::Identity();
            if (oi != layout.end()) {
                a.block<6, 6>(oi->second, oi->second) += ji.transpose() * ji;
                b.segment<6>(oi->second) += ji.transpose() * r;
            }
            if (oj != layout.end()) {
                a.block<6, 6>(oj->second, oj->second) += jj.transpose() * jj;
                b.segment<6>(oj->second) += jj.transpose() * r;
            }
            if (oi != layout.end() && oj != layout.end()) {
                a.block<6, 6>(oi->second, oj->second) += ji.transpose() * jj;
                a.block<6, 6>(oj->second, oi->second) += jj.transpose() * ji;
            }
        }
    }
}

PoseMap apply_step(const PoseMap& poses, const std::map<int, int>& layout, const Eigen::VectorXd& step)
{
    PoseMap out = poses;
    for (const auto& [node, off] : layout) {
        const RigidTransform& p = poses.at(node);
        const Vec3 dr = step.segment<3>(off);
        const Vec3 dt = step.segment<3>(off + 3);
        out[node] = RigidTransform(geom::exp_so3(dr) * p.rotation(), p.translation() + dt);
    }
    return out;
}

}  // namespace

Eigen::VectorXd global_gradient(const TransformGraph& graph, const PoseMap& poses)
{
    const auto layout = variable_layout(graph);
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    normal_equations(graph, poses, layout, a, b);
    return 2.0 * b;
}

RefineResult refine(const TransformGraph& graph, const PoseMap& initial, const RefineOptions& opts)
{
    for (int n : graph.nodes)
        if (!initial.count(n))
            throw std::invalid_argument("refine: initial poses miss camera " + std::to_string(n));

    RefineResult res;
    res.poses = initial;
    res.poses[graph.reference] = RigidTransform::identity();
    const auto layout = variable_layout(graph);
    double cost = global_cost(graph, res.poses);
    res.cost_trace.push_back(cost);
    if (layout.empty())
        return res;

    double lambda = opts.initial_damping;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    bool rebuild = true;
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (rebuild) {
            normal_equations(graph, res.poses, layout, a, b);
            rebuild = false;
        }
        if ((2.0 * b).lpNorm<Eigen::Infinity>() < opts.gradient_tolerance)
            break;
        res.iterations = it + 1;

        Eigen::MatrixXd damped = a;
        for (Eigen::Index k = 0; k < damped.rows(); ++k)
            damped(k, k) += lambda * std::max(a(k, k), 1e-9);
        const Eigen::VectorXd step = damped.ldlt().solve(-b);
        if (!step.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        PoseMap trial = apply_step(res.poses, layout, step);
        const double trial_cost = global_cost(graph, trial);
        if (trial_cost < cost) {
            const double rel = (cost - trial_cost) / std::max(cost, std::numeric_limits<double>::min());
            res.poses = std::move(trial);
            cost = trial_cost;
            res.cost_trace.push_back(cost);
            lambda = std::max(lambda / 10.0, 1e-15);
            rebuild = true;
            if (rel < opts.relative_cost_tolerance)
                break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e16)
                break;
        }
    }
    return res;
}

std::vector<EdgeDiscrepancy> edge_discrepancies(const TransformGraph& graph, const PoseMap& poses)
{
    std::vector<EdgeDiscrepancy> out;
    for (const auto& e : graph.edges) {
        const RigidTransform predicted = poses.at(e.i).inverse() * poses.at(e.j);
        out.push_back({e.i, e.j, geom::rotation_distance(predicted, e.transform),
                       (predicted.translation() - e.transform.translation()).norm()});
    }
    return out;
}

}  // namespace ubimap::calib
