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

#include "ubimap/commands.hpp"

#include "ubimap/render.hpp"
#include "ubimap/textio.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

namespace ubimap::cli {

namespace {

std::string clean(std::string s)
{
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r')
            c = c == ',' ? ';' : ' ';
    return s;
}

std::string cell_key(world::CellIndex c)
{
    return std::to_string(c.col) + ":" + std::to_string(c.row);
}

std::string pair_key(int i, int j)
{
    return std::to_string(i) + "-" + std::to_string(j);
}

std::string join_path(const std::string& dir, const std::string& name)
{
    return (std::filesystem::path(dir) / name).string();
}

void add_calibration_rows(CsvReport& r, const sim::CalibrationOutcome& cal)
{
    r.add("calibration", "all", "reference", std::to_string(cal.reference));
    r.add("calibration", "all", "edges", std::to_string(cal.graph.edges.size()));
    r.add("calibration", "all", "cost_before", cal.cost_before);
    r.add("calibration", "all", "cost_after", cal.cost_after);
    r.add("calibration", "all", "iterations", std::to_string(cal.refined.iterations));
    for (const auto& e : cal.graph.edges) {
        const auto key = pair_key(e.i, e.j);
        r.add("edge", key, "landmarks", std::to_string(e.correspondences.pairs.size()));
        r.add("edge", key, "icp_rms", e.residual);
    }
    for (const auto& d : cal.discrepancy_before) {
        r.add("loop_before", pair_key(d.i, d.j), "rotation", d.rotation);
        r.add("loop_before", pair_key(d.i, d.j), "translation", d.translation);
    }
    for (const auto& d : cal.discrepancy_after) {
        r.add("loop_after", pair_key(d.i, d.j), "rotation", d.rotation);
        r.add("loop_after", pair_key(d.i, d.j), "translation", d.translation);
    }
    for (const auto& f : cal.graph.failures)
        r.add("edge_failure", pair_key(f.i, f.j), "reason", clean(f.reason));
    for (const auto& [id, pose] : cal.world_poses) {
        const auto key = std::to_string(id);
        r.add("camera", key, "x", pose.translation().x());
        r.add("camera", key, "y", pose.translation().y());
        r.add("camera", key, "z", pose.translation().z());
        r.add("camera", key, "rotation_error", cal.errors.at(id).rotation);
        r.add("camera", key, "translation_error", cal.errors.at(id).translation);
    }
    for (std::size_t k = 0; k < cal.refined.cost_trace.size(); ++k)
        r.add("cost_trace", std::to_string(k), "cost", cal.refined.cost_trace[k]);
}

template <class F>
int guarded(const std::string& path, std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const world::ParseError& e) {
        err << path << ": " << e.what() << '\n';
        return kParseError;
    } catch (const calib::DisconnectedGraph& e) {
        err << "calibration failed: unreachable cameras:";
        for (int id : e.unreachable())
            err << ' ' << id;
        err << '\n';
        return kCalibrationError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

world::Scenario load(const std::string& path, const CommandOptions& opts)
{
    world::Scenario sc = world::load_scenario(path);
    if (opts.seed)
        sc.sim.seed = *opts.seed;
    std::filesystem::create_directories(opts.out_dir);
    return sc;
}

}  // namespace

void CsvReport::add(const std::string& section, const std::string& key, const std::string& field,
                    const std::string& value)
{
    body_ += section + ',' + key + ',' + field + ',' + value + '\n';
}

void CsvReport::add(const std::string& section, const std::string& key, const std::string& field, double value)
{
    add(section, key, field, format_shortest(value));
}

std::string CsvReport::str() const
{
    return "section,key,field,value\n" + body_;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error("cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string plan_report(const sim::PlanOutcome& po)
{
    CsvReport r;
    const auto& p = po.problem;
    const auto& plan = po.plan;
    r.add("summary", "all", "method", po.exact ? "exhaustive" : "greedy");
    r.add("summary", "all", "candidates", std::to_string(p.candidates.size()));
    r.add("summary", "all", "targets", std::to_string(p.targets().size()));
    r.add("summary", "all", "min_overlap", std::to_string(p.min_overlap));
    r.add("summary", "all", "max_overlap", std::to_string(p.max_overlap));
    r.add("summary", "all", "budget", std::to_string(p.budget));
    r.add("summary", "all", "selected", std::to_string(plan.selected.size()));
    r.add("summary", "all", "objective", coverage::objective(plan, p));
    r.add("summary", "all", "coverage_ratio", plan.coverage_ratio);
    r.add("summary", "all", "violations", std::to_string(plan.violations.size()));
    for (const auto& cam : coverage::selected_cameras(p, plan.selected)) {
        const auto key = std::to_string(cam.id);
        r.add("selected", key, "x", cam.x);
        r.add("selected", key, "y", cam.y);
        r.add("selected", key, "h", cam.height);
        r.add("selected", key, "yaw_deg", geom::rad_to_deg(cam.yaw));
    }
    std::map<int, int> histogram;
    for (const auto& c : p.targets()) {
        auto it = plan.per_cell_multiplicity.find(c);
        ++histogram[it == plan.per_cell_multiplicity.end() ? 0 : it->second];
    }
    for (const auto& [m, n] : histogram)
        r.add("multiplicity", std::to_string(m), "cells", std::to_string(n));
    for (const auto& v : plan.violations)
        r.add("violation", cell_key(v.cell), "count", std::to_string(v.count));
    return r.str();
}

std::string calibration_report(const sim::CalibrationOutcome& cal, std::uint64_t seed)
{
    CsvReport r;
    r.add("summary", "all", "seed", std::to_string(seed));
    add_calibration_rows(r, cal);
    return r.str();
}

std::string simulation_report(const sim::RunReport& rep)
{
    CsvReport r;
    r.add("summary", "all", "seed", std::to_string(rep.seed));
    r.add("summary", "all", "duration", rep.duration);
    r.add("summary", "all", "frames", std::to_string(rep.frames));
    r.add("summary", "all", "cameras", std::to_string(rep.cameras.size()));
    r.add("summary", "all", "coverage_ratio", rep.coverage_ratio);
    r.add("summary", "all", "scored_cells", std::to_string(rep.covered_cells));
    r.add("summary", "all", "matching_cells", std::to_string(rep.matching_cells));
    r.add("summary", "all", "map_accuracy", rep.map_accuracy);
    r.add("summary", "all", "server_revision", std::to_string(rep.server_revision));
    r.add("summary", "all", "last_broadcast_revision", std::to_string(rep.last_broadcast_revision));
    r.add("summary", "all", "faults", std::to_string(rep.faults.size()));
    add_calibration_rows(r, rep.calibration);
    r.add("network", "all", "sent", std::to_string(rep.network.sent));
    r.add("network", "all", "delivered", std::to_string(rep.network.delivered));
    r.add("network", "all", "dropped", std::to_string(rep.network.dropped));
    r.add("network", "all", "stale", std::to_string(rep.stale));
    r.add("network", "all", "uploads_sent", std::to_string(rep.uploads_sent));
    r.add("network", "all", "uploads_merged", std::to_string(rep.uploads_merged));
    r.add("network", "all", "upload_duplicates", std::to_string(rep.upload_duplicates));
    for (const auto& c : rep.clients) {
        const auto key = std::to_string(c.robot_id);
        r.add("client", key, "revision", std::to_string(c.revision));
        r.add("client", key, "last_applied_seq", c.last_applied_seq ? std::to_string(*c.last_applied_seq) : "");
        r.add("client", key, "stale", std::to_string(c.stale));
        r.add("client", key, "acked", std::to_string(c.acked));
        r.add("client", key, "matches_server", c.matches_server ? "1" : "0");
    }
    for (const auto& s : rep.robots) {
        const auto key = std::to_string(s.id);
        r.add("robot", key, "true_x", s.true_x);
        r.add("robot", key, "true_y", s.true_y);
        if (s.estimate) {
            r.add("robot", key, "est_x", s.estimate->mean.x());
            r.add("robot", key, "est_y", s.estimate->mean.y());
            r.add("robot", key, "est_heading", s.estimate->mean.z());
        }
        r.add("robot", key, "final_error", s.final_error);
        r.add("robot", key, "max_error", s.max_error);
        r.add("robot", key, "reached_goal", s.reached_goal ? "1" : "0");
    }
    for (const auto& o : rep.obstacles) {
        const auto key = std::to_string(o.id);
        r.add("obstacle", key, "cell", cell_key(o.cell));
        r.add("obstacle", key, "blind", o.blind ? "1" : "0");
        r.add("obstacle", key, "first_mapped", o.first_mapped ? format_shortest(*o.first_mapped) : "");
        r.add("obstacle", key, "mapped_by", o.mapped_by);
    }
    for (std::size_t k = 0; k < rep.faults.size(); ++k)
        r.add("fault", std::to_string(k), format_shortest(rep.faults[k].t), clean(rep.faults[k].what));
    return r.str();
}

std::string localization_report(const sim::RunReport& rep)
{
    std::string s = "t,robot,error\n";
    for (const auto& l : rep.localization)
        s += format_shortest(l.t) + ',' + std::to_string(l.robot_id) + ',' + format_shortest(l.error) + '\n';
    return s;
}

int cmd_plan(const std::string& path, const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(path, err, [&] {
        const auto sc = load(path, opts);
        const auto po = sim::plan_cameras(sc, opts.exact);
        const auto report = join_path(opts.out_dir, "plan.csv");
        const auto image = join_path(opts.out_dir, "coverage.ppm");
        write_file(report, plan_report(po));
        write_file(image, render::render_coverage(sc.world, po.plan.per_cell_multiplicity));
        out << "selected " << po.plan.selected.size() << " cameras, coverage ratio "
            << format_g(po.plan.coverage_ratio, 6) << '\n'
            << "wrote " << report << " and " << image << '\n';
        if (opts.strict && !po.plan.violations.empty()) {
            err << "overlap constraints violated on " << po.plan.violations.size() << " cells\n";
            return int{kConstraintError};
        }
        return int{kOk};
    });
}

int cmd_calibrate(const std::string& path, const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(path, err, [&] {
        const auto sc = load(path, opts);
        const auto po = sim::plan_cameras(sc, opts.exact);
        const auto cams = sim::deployed_cameras(sc, po);
        const auto cal = sim::calibrate_cameras(sc.world, cams, sc.sim.noise_sigma, sc.sim.seed, sc.sim.reference);
        const auto report = join_path(opts.out_dir, "calibration.csv");
        write_file(report, calibration_report(cal, sc.sim.seed));
        out << "calibrated " << cal.world_poses.size() << " cameras, cost " << format_g(cal.cost_before, 6)
            << " -> " << format_g(cal.cost_after, 6) << '\n'
            << "wrote " << report << '\n';
        return int{kOk};
    });
}

int cmd_simulate(const std::string& path, const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(path, err, [&] {
        const auto sc = load(path, opts);
        sim::SimOptions so;
        so.seed = sc.sim.seed;
        so.duration = opts.duration;
        so.exact = opts.exact;
        const auto res = sim::run_simulation(sc, so);
        write_file(join_path(opts.out_dir, "report.csv"), simulation_report(res.report));
        write_file(join_path(opts.out_dir, "localization.csv"), localization_report(res.report));
        write_file(join_path(opts.out_dir, "map.ppm"), render::render_map(res.final_map));
        write_file(join_path(opts.out_dir, "truth.ppm"), render::render_map(res.truth_map));
        std::string hex;
        for (const auto& line : res.capture)
            hex += line + '\n';
        write_file(join_path(opts.out_dir, "capture.hex"), hex);
        out << "simulated " << format_g(res.report.duration, 6) << " s, map accuracy "
            << format_g(res.report.map_accuracy, 6) << ", server revision " << res.report.server_revision << '\n'
            << "wrote report.csv, localization.csv, map.ppm, truth.ppm, capture.hex to " << opts.out_dir << '\n';
        return int{kOk};
    });
}

int cmd_render(const std::string& path, const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(path, err, [&] {
        const auto sc = load(path, opts);
        const auto po = sim::plan_cameras(sc, opts.exact);
        const auto cams = sim::deployed_cameras(sc, po);
        const auto image = join_path(opts.out_dir, "truth.ppm");
        const auto cover = join_path(opts.out_dir, "coverage.ppm");
        write_file(image, render::render_map(sim::ground_truth_map(sc.world, cams)));
        write_file(cover, render::render_coverage(sc.world, po.plan.per_cell_multiplicity));
        out << "wrote " << image << " and " << cover << '\n';
        return int{kOk};
    });
}

}  // namespace ubimap::cli
