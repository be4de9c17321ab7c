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

#ifndef UBIMAP_SIMULATION_HPP
#define UBIMAP_SIMULATION_HPP

#include "ubimap/calib.hpp"
#include "ubimap/coverage.hpp"
#include "ubimap/fusion.hpp"
#include "ubimap/netsim.hpp"
#include "ubimap/scenario.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ubimap::sim {

using world::CameraSpec;
using world::GridWorld;
using world::Scenario;

// Placement -----------------------------------------------------------------

struct PlanOutcome {
    coverage::CoverageProblem problem;
    coverage::PlacementPlan plan;
    bool exact = false;
};

/// With a plan section: candidates are the lattice (when lattice_step > 0)
/// or the scenario cameras, solved greedily or exactly. Without one: every
/// scenario camera is selected and only evaluated.
PlanOutcome plan_cameras(const Scenario& scenario, bool exact);

/// Cameras the simulation runs with.
std::vector<CameraSpec> deployed_cameras(const Scenario& scenario, const PlanOutcome& plan);

// Calibration ---------------------------------------------------------------

struct PoseError {
    double rotation = 0.0;     // rad
    double translation = 0.0;  // m
};

struct CalibrationOutcome {
    int reference = 0;
    calib::TransformGraph graph;
    calib::PoseMap initial;  // propagated, reference frame
    calib::RefineResult refined;
    double cost_before = 0.0;
    double cost_after = 0.0;
    std::vector<calib::EdgeDiscrepancy> discrepancy_before;
    std::vector<calib::EdgeDiscrepancy> discrepancy_after;
    /// Estimated camera poses in the world, anchored at the reference
    /// camera's known mounting.
    std::map<int, geom::RigidTransform> world_poses;
    std::map<int, PoseError> errors;
};

/// Simulated landmark observations, pairwise ICP over shared landmarks,
/// propagation from the reference (lowest id when unset) and refinement.
/// Throws calib::DisconnectedGraph.
CalibrationOutcome calibrate_cameras(const GridWorld& world, const std::vector<CameraSpec>& cameras, double sigma,
                                     std::uint64_t seed, std::optional<int> reference);

// End-to-end run ------------------------------------------------------------

struct SimOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> duration;
    bool exact = false;
};

struct LocalizationSample {
    double t = 0.0;
    int robot_id = 0;
    double error = 0.0;  // m
};

struct RobotSummary {
    int id = 0;
    double true_x = 0.0;
    double true_y = 0.0;
    std::optional<fusion::GaussianBelief> estimate;
    double final_error = 0.0;
    double max_error = 0.0;
    bool reached_goal = false;
};

struct ObstacleSummary {
    int id = 0;
    world::CellIndex cell;
    bool blind = false;
    std::optional<double> first_mapped;
    std::string mapped_by;  // "camera", "upload" or empty
};

struct ClientSummary {
    int robot_id = 0;
    std::uint32_t revision = 0;
    std::optional<std::uint32_t> last_applied_seq;
    std::uint64_t stale = 0;
    std::size_t acked = 0;
    bool matches_server = false;
    bool monotone = true;
};

struct RunReport {
    std::uint64_t seed = 0;
    double duration = 0.0;
    int frames = 0;
    std::vector<int> cameras;
    double coverage_ratio = 0.0;
    std::size_t covered_cells = 0;
    std::size_t matching_cells = 0;
    double map_accuracy = 0.0;
    CalibrationOutcome calibration;
    std::vector<LocalizationSample> localization;
    std::vector<RobotSummary> robots;
    std::vector<ObstacleSummary> obstacles;
    netsim::NetworkStats network;
    std::uint64_t stale = 0;
    std::uint64_t uploads_sent = 0;
    std::uint64_t uploads_merged = 0;
    std::uint64_t upload_duplicates = 0;
    std::vector<ClientSummary> clients;
    std::uint32_t server_revision = 0;
    std::uint32_t last_broadcast_revision = 0;
    std::vector<fusion::Fault> faults;
};

struct SimResult {
    RunReport report;
    fusion::GridMap final_map;
    fusion::GridMap truth_map;
    std::vector<std::string> capture;
};

/// Ground truth as the camera network would ideally map it: cells a camera
/// covers are Explored, Obstacle or Robot, visible walls are Wall,
/// everything else Unexplored.
fusion::GridMap ground_truth_map(const GridWorld& world, const std::vector<CameraSpec>& cameras);

/// Cells the map is scored on: covered cells plus visible walls.
std::vector<bool> scored_cells(const GridWorld& world, const std::vector<CameraSpec>& cameras);

/// Robot on-board sensing: cells whose centers lie within `range` of the
/// robot and are in line of sight. Other robots are not reported.
fusion::GridMap robot_local_map(const GridWorld& world, const world::RobotSpec& robot, double range);

/// Placement, calibration, then the fuse / filter / broadcast loop on a
/// virtual clock with 0.1 s camera frames.
SimResult run_simulation(const Scenario& scenario, const SimOptions& opts);

}  // namespace ubimap::sim

#endif  // UBIMAP_SIMULATION_HPP
