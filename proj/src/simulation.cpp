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

#include "ubimap/simulation.hpp"

#include "ubimap/sensim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace ubimap::sim {

namespace {

constexpr double kFramePeriod = 0.1;  // s
constexpr int kFramePeriodMs = 100;
constexpr std::uint64_t kOdometryStream = 0x4f444f;
// Drain limit after the run; generous next to any sane latency.
constexpr int kMaxDrainMs = 600000;

int period_ms(double ms)
{
    return std::max(1, static_cast<int>(std::llround(ms)));
}

std::set<world::CellIndex> obstacle_cells(const GridWorld& w)
{
    std::set<world::CellIndex> s;
    for (const auto& o : w.obstacles)
        s.insert(o.cell);
    return s;
}

// Advances the robot one frame toward its goal: turn in place until facing
// it, then drive. Returns the body-frame odometry of the step.
fusion::Vector3 drive(world::RobotSpec& r, double dt)
{
    if (!r.goal || r.speed <= 0.0)
        return fusion::Vector3::Zero();
    const world::Point2 d = *r.goal - world::Point2(r.x, r.y);
    const double dist = d.norm();
    if (dist < 1e-6)
        return fusion::Vector3::Zero();
    const double turn = fusion::wrap_angle(std::atan2(d.y(), d.x()) - r.heading);
    if (std::abs(turn) > 1e-9) {
        r.heading = fusion::wrap_angle(r.heading + turn);
        return {0.0, 0.0, turn};
    }
    const double forward = std::min(r.speed * dt, dist);
    r.x += forward * std::cos(r.heading);
    r.y += forward * std::sin(r.heading);
    return {forward, 0.0, 0.0};
}

}  // namespace

PlanOutcome plan_cameras(const Scenario& scenario, bool exact)
{
    PlanOutcome out;
    out.exact = exact;
    auto& p = out.problem;
    p.world = scenario.world;
    if (scenario.plan) {
        const auto& pp = *scenario.plan;
        p.candidates = pp.lattice_step > 0.0
                           ? world::lattice_candidates(scenario.world, pp.lattice_prototype, pp.lattice_step)
                           : scenario.cameras;
        p.target_cells = pp.targets;
        p.min_overlap = pp.min_overlap;
        p.max_overlap = pp.max_overlap;
        p.budget = pp.budget;
        p.validate();
        out.plan = exact ? coverage::plan_exhaustive(p) : coverage::plan_greedy(p);
        return out;
    }
    const int n = std::max<int>(1, static_cast<int>(scenario.cameras.size()));
    p.candidates = scenario.cameras;
    p.max_overlap = n;
    p.budget = n;
    p.validate();
    std::vector<int> ids;
    for (const auto& c : scenario.cameras)
        ids.push_back(c.id);
    out.plan = coverage::evaluate_selection(p, ids);
    return out;
}

std::vector<CameraSpec> deployed_cameras(const Scenario& scenario, const PlanOutcome& plan)
{
    if (!scenario.plan)
        return scenario.cameras;
    return coverage::selected_cameras(plan.problem, plan.plan.selected);
}

CalibrationOutcome calibrate_cameras(const GridWorld& world, const std::vector<CameraSpec>& cameras, double sigma,
                                     std::uint64_t seed, std::optional<int> reference)
{
    if (cameras.empty())
        throw std::invalid_argument("calibrate_cameras: no cameras");
    std::vector<CameraSpec> cams = cameras;
    std::sort(cams.begin(), cams.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

    CalibrationOutcome out;
    out.reference = reference.value_or(cams.front().id);
    auto ref_cam = std::find_if(cams.begin(), cams.end(), [&](const auto& c) { return c.id == out.reference; });
    if (ref_cam == cams.end())
        throw std::invalid_argument("calibrate_cameras: reference camera " + std::to_string(out.reference) +
                                    " is not deployed");

    std::vector<std::map<int, geom::Point3>> seen;
    for (const auto& c : cams) {
        std::map<int, geom::Point3> m;
        for (const auto& o : sensim::observe_landmarks(c, world, sigma, seed))
            m[o.landmark_id] = o.point;
        seen.push_back(std::move(m));
    }
    std::vector<calib::PairwiseInput> pairwise;
    for (std::size_t a = 0; a < cams.size(); ++a)
        for (std::size_t b = a + 1; b < cams.size(); ++b) {
            calib::PairwiseInput in;
            in.i = cams[a].id;
            in.j = cams[b].id;
            in.correspondences.camera_i = in.i;
            in.correspondences.camera_j = in.j;
            for (const auto& [id, p] : seen[a])
                if (auto it = seen[b].find(id); it != seen[b].end())
                    in.correspondences.pairs.push_back({p, it->second, id});
            if (!in.correspondences.pairs.empty())
                pairwise.push_back(std::move(in));
        }

    out.graph = calib::build_graph(pairwise, calib::IcpOptions{}, out.reference);
    out.graph.nodes.clear();
    for (const auto& c : cams)
        out.graph.nodes.push_back(c.id);

    out.initial = calib::propagate(out.graph);
    out.cost_before = calib::global_cost(out.graph, out.initial);
    out.discrepancy_before = calib::edge_discrepancies(out.graph, out.initial);
    out.refined = calib::refine(out.graph, out.initial);
    out.cost_after = calib::global_cost(out.graph, out.refined.poses);
    out.discrepancy_after = calib::edge_discrepancies(out.graph, out.refined.poses);

    const auto anchor = world::camera_world_pose(*ref_cam);
    for (const auto& c : cams) {
        const auto est = anchor * out.refined.poses.at(c.id);
        const auto truth = world::camera_world_pose(c);
        out.world_poses.emplace(c.id, est);
        out.errors[c.id] = {geom::rotation_distance(est, truth), (est.translation() - truth.translation()).norm()};
    }
    return out;
}

fusion::GridMap ground_truth_map(const GridWorld& world, const std::vector<CameraSpec>& cameras)
{
    fusion::GridMap m(world.width(), world.height(), world.cell_size());
    const auto obstacles = obstacle_cells(world);
    std::set<world::CellIndex> robots;
    for (const auto& r : world.robots)
        if (auto c = world.cell_at({r.x, r.y}))
            robots.insert(*c);
    for (const auto& cam : cameras) {
        for (const auto& c : world::covered_cells(cam, world)) {
            if (robots.count(c))
                m.set(c, fusion::CellState::Robot);
            else if (obstacles.count(c))
                m.set(c, fusion::CellState::Obstacle);
            else
                m.set(c, fusion::CellState::Explored);
        }
        for (const auto& c : world::visible_wall_cells(cam, world))
            m.set(c, fusion::CellState::Wall);
    }
    return m;
}

std::vector<bool> scored_cells(const GridWorld& world, const std::vector<CameraSpec>& cameras)
{
    std::vector<bool> s(world.cell_count(), false);
    for (const auto& cam : cameras) {
        for (const auto& c : world::covered_cells(cam, world))
            s[world.linear(c)] = true;
        for (const auto& c : world::visible_wall_cells(cam, world))
            s[world.linear(c)] = true;
    }
    return s;
}

fusion::GridMap robot_local_map(const GridWorld& world, const world::RobotSpec& robot, double range)
{
    fusion::GridMap m(world.width(), world.height(), world.cell_size());
    const world::Point2 p(robot.x, robot.y);
    const auto obstacles = obstacle_cells(world);
    for (std::size_t i = 0; i < world.cell_count(); ++i) {
        const auto c = world.from_linear(i);
        const world::Point2 q = world.cell_center(c);
        if ((q - p).norm() > range)
            continue;
        if (world.is_wall(c)) {
            if (world::first_wall(world, p, q) == c)
                m.set(c, fusion::CellState::Wall);
        } else if (world::line_of_sight(world, p, q)) {
            m.set(c, obstacles.count(c) ? fusion::CellState::Obstacle : fusion::CellState::Explored);
        }
    }
    return m;
}

SimResult run_simulation(const Scenario& scenario, const SimOptions& opts)
{
    const auto& sp = scenario.sim;
    SimResult result;
    RunReport& rep = result.report;
    rep.seed = opts.seed.value_or(sp.seed);
    rep.duration = opts.duration.value_or(sp.duration);
    if (!(rep.duration >= 0.0))
        throw std::invalid_argument("duration must be >= 0");

    const PlanOutcome plan = plan_cameras(scenario, opts.exact);
    const std::vector<CameraSpec> cameras = deployed_cameras(scenario, plan);
    for (const auto& c : cameras)
        rep.cameras.push_back(c.id);
    {
        coverage::CoverageProblem p = plan.problem;
        p.candidates = cameras;
        p.max_overlap = std::max<int>(1, static_cast<int>(cameras.size()));
        p.budget = p.max_overlap;
        rep.coverage_ratio = coverage::evaluate_selection(p, rep.cameras).coverage_ratio;
    }

    rep.calibration = calibrate_cameras(scenario.world, cameras, sp.noise_sigma, rep.seed, sp.reference);

    std::map<int, geom::RigidTransform> ground_frames;
    for (const auto& c : cameras)
        ground_frames.emplace(c.id, rep.calibration.world_poses.at(c.id) * world::camera_mount(c).inverse());

    GridWorld world = scenario.world;
    const double odo_sigma = 0.5 * sp.noise_sigma;
    fusion::FusionOptions fopts;
    fopts.tag_sigma = std::max(sp.noise_sigma, 1e-3);
    fopts.process_noise = fusion::Vector3(odo_sigma * odo_sigma + 1e-10, odo_sigma * odo_sigma + 1e-10,
                                          odo_sigma * odo_sigma + 1e-10)
                              .asDiagonal();
    fusion::MapServer server(world.width(), world.height(), world.cell_size(), ground_frames, fopts);
    for (const auto& r : world.robots) {
        fusion::GaussianBelief prior;
        prior.mean = {r.x, r.y, r.heading};
        prior.covariance = fusion::Vector3(1e-4, 1e-4, 1e-3).asDiagonal();
        server.register_robot(r.id, r.tag, prior);
    }

    netsim::SimNetwork net({sp.net_latency_ms, sp.net_jitter_ms, sp.net_loss, rep.seed});
    netsim::UploadIngest ingest(world.width(), world.height(), world.cell_size());
    std::map<int, netsim::ClientState> clients;
    std::map<int, std::uint32_t> upload_seq;
    for (const auto& r : world.robots) {
        netsim::ClientState cs;
        cs.robot_id = r.id;
        cs.map = fusion::GridMap(world.width(), world.height(), world.cell_size());
        clients.emplace(r.id, std::move(cs));
        upload_seq[r.id] = 0;
    }
    std::uint32_t map_seq = 0;
    std::uint32_t pose_seq = 0;

    const std::set<world::CellIndex> observable = [&] {
        std::set<world::CellIndex> s;
        for (const auto& c : cameras)
            for (const auto& cell : world::covered_cells(c, world))
                s.insert(cell);
        return s;
    }();
    for (const auto& o : world.obstacles) {
        ObstacleSummary os;
        os.id = o.id;
        os.cell = o.cell;
        os.blind = !observable.count(o.cell);
        rep.obstacles.push_back(os);
    }
    auto note_obstacles = [&](double t, const char* source) {
        for (auto& os : rep.obstacles)
            if (!os.first_mapped && server.map().at(os.cell) == fusion::CellState::Obstacle) {
                os.first_mapped = t;
                os.mapped_by = source;
            }
    };

    auto handle = [&](const netsim::Delivery& d, double t) {
        netsim::Message msg;
        try {
            msg = netsim::decode(d.frame);
        } catch (const netsim::FrameError& e) {
            server.record_fault(t, e.what());
            return;
        }
        if (d.destination == netsim::kServerAddress) {
            if (msg.kind == netsim::Kind::Hello)
                return;
            auto r = ingest.ingest(msg);
            if (r.fault)
                server.record_fault(t, *r.fault);
            if (r.ack)
                net.submit(t, msg.sender_id, *r.ack);
            if (r.duplicate)
                ++rep.upload_duplicates;
            if (r.merge) {
                server.merge_robot_map(*r.merge, t);
                ++rep.uploads_merged;
                note_obstacles(t, "upload");
            }
            return;
        }
        auto it = clients.find(d.destination);
        if (it == clients.end())
            return;
        try {
            it->second = netsim::client_apply(std::move(it->second), msg);
        } catch (const std::exception& e) {
            server.record_fault(t, "robot " + std::to_string(d.destination) + ": " + e.what());
        }
    };

    auto broadcast = [&](double t) {
        const netsim::Message mu{netsim::Kind::MapUpdate, map_seq++, 0, netsim::encode_map_update(server.map())};
        rep.last_broadcast_revision = server.map().revision();
        for (const auto& r : world.robots)
            net.submit(t, r.id, mu);
        for (const auto& r : world.robots) {
            auto b = server.belief(r.id);
            if (!b)
                continue;
            const auto& est = server.map().robot_poses;
            const double sigma = est.count(r.id) ? est.at(r.id).sigma : 0.0;
            const netsim::RobotPose p{static_cast<std::uint16_t>(r.id), b->mean.x(), b->mean.y(), b->mean.z(), sigma};
            net.submit(t, r.id, {netsim::Kind::RobotPose, pose_seq++, 0, netsim::encode_robot_pose(p)});
        }
    };

    auto deliver = [&](double t) {
        for (const auto& d : net.deliver_until(t))
            handle(d, t);
    };

    for (const auto& r : world.robots)
        net.submit(0.0, netsim::kServerAddress, {netsim::Kind::Hello, 0, static_cast<std::uint16_t>(r.id), {}});

    const int duration_ms = static_cast<int>(std::llround(rep.duration * 1000.0));
    const int upload_ms = period_ms(sp.upload_period_ms);
    const int broadcast_ms = period_ms(sp.broadcast_period_ms);
    int tick = 0;
    for (int ms = 0; ms <= duration_ms; ++ms) {
        const double t = ms / 1000.0;
        deliver(t);

        if (ms % kFramePeriodMs == 0) {
            if (ms > 0) {
                for (auto& r : world.robots) {
                    fusion::Vector3 u = drive(r, kFramePeriod);
                    if (!u.isZero() && odo_sigma > 0.0) {
                        auto rng = sensim::stream_rng({kOdometryStream, rep.seed, static_cast<std::uint64_t>(r.id),
                                                       static_cast<std::uint64_t>(tick)});
                        std::normal_distribution<double> n(0.0, odo_sigma);
                        for (int a = 0; a < 3; ++a)
                            u[a] += n(rng);
                    }
                    server.predict(r.id, u);
                }
            }
            fusion::Frame frame;
            for (const auto& c : cameras) {
                auto ev = sensim::observe_obstacles(c, world, t);
                frame.obstacles.insert(frame.obstacles.end(), ev.begin(), ev.end());
                auto tags = sensim::observe_tags(c, world, sp.noise_sigma, rep.seed, t);
                frame.tags.insert(frame.tags.end(), tags.begin(), tags.end());
            }
            server.fuse_frame(frame, t);
            note_obstacles(t, "camera");
            for (const auto& r : world.robots)
                if (auto b = server.belief(r.id))
                    rep.localization.push_back({t, r.id, (b->mean.head<2>() - world::Point2(r.x, r.y)).norm()});
            ++tick;
        }

        if (ms > 0 && ms % upload_ms == 0) {
            for (const auto& r : world.robots) {
                const auto local = robot_local_map(world, r, sp.sense_range);
                const netsim::Message up{netsim::Kind::SensorUpload, upload_seq[r.id]++,
                                         static_cast<std::uint16_t>(r.id),
                                         netsim::encode_fragment(netsim::map_to_fragment(local))};
                net.submit(t, netsim::kServerAddress, up);
                ++rep.uploads_sent;
            }
        }

        if (ms % broadcast_ms == 0)
            broadcast(t);
    }
    rep.frames = tick;

    // Let in-flight traffic settle, push one last broadcast, settle again.
    int ms = duration_ms;
    auto drain = [&] {
        const int limit = ms + kMaxDrainMs;
        while (!net.idle() && ms < limit) {
            ++ms;
            deliver(ms / 1000.0);
        }
    };
    drain();
    broadcast(ms / 1000.0);
    drain();

    rep.server_revision = server.map().revision();
    rep.network = net.stats();
    rep.faults = server.faults();
    const auto server_bytes = fusion::export_snapshot(server.map());
    for (const auto& [id, cs] : clients) {
        ClientSummary s;
        s.robot_id = id;
        s.revision = cs.map.revision();
        s.last_applied_seq = cs.last_applied_seq;
        s.stale = cs.stale;
        s.acked = cs.acked.size();
        s.matches_server = fusion::export_snapshot(cs.map) == server_bytes;
        s.monotone = std::adjacent_find(cs.applied.begin(), cs.applied.end(),
                                        [](auto a, auto b) { return b <= a; }) == cs.applied.end();
        rep.stale += cs.stale;
        rep.clients.push_back(s);
    }

    for (const auto& r : world.robots) {
        RobotSummary s;
        s.id = r.id;
        s.true_x = r.x;
        s.true_y = r.y;
        s.estimate = server.belief(r.id);
        s.reached_goal = !r.goal || (*r.goal - world::Point2(r.x, r.y)).norm() < 1e-6;
        for (const auto& l : rep.localization)
            if (l.robot_id == r.id) {
                s.final_error = l.error;
                s.max_error = std::max(s.max_error, l.error);
            }
        rep.robots.push_back(s);
    }

    result.truth_map = ground_truth_map(world, cameras);
    result.final_map = server.map();
    const auto scored = scored_cells(world, cameras);
    for (std::size_t i = 0; i < scored.size(); ++i) {
        if (!scored[i])
            continue;
        ++rep.covered_cells;
        if (result.final_map.cells()[i] == result.truth_map.cells()[i])
            ++rep.matching_cells;
    }
    rep.map_accuracy = rep.covered_cells ? static_cast<double>(rep.matching_cells) / rep.covered_cells : 1.0;
    result.capture = net.capture();
    return result;
}

}  // namespace ubimap::sim
