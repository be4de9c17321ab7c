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

#ifndef UBIMAP_SCENARIO_HPP
#define UBIMAP_SCENARIO_HPP

#include "ubimap/world.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ubimap::world {

/// Thrown for both syntax and semantic problems. `line` is 1-based, 0 when
/// the problem is not tied to a single line.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

struct SimParams {
    std::uint64_t seed = 1;
    double noise_sigma = 0.01;      // m, tag and landmark noise
    double net_latency_ms = 5.0;
    double net_jitter_ms = 0.0;
    double net_loss = 0.0;
    double broadcast_period_ms = 100.0;
    double upload_period_ms = 500.0;
    double sense_range = 1.5;       // m, robot on-board sensing radius
    double duration = 10.0;         // s
    std::optional<int> reference;   // camera anchoring the global frame

    friend bool operator==(const SimParams&, const SimParams&) = default;
};

struct PlanParams {
    int min_overlap = 0;
    int max_overlap = 1000;
    int budget = 1;
    /// Empty: every free cell is a target.
    CellSet targets;
    /// > 0 replaces the scenario cameras by a lattice of candidates.
    double lattice_step = 0.0;
    CameraSpec lattice_prototype;

    friend bool operator==(const PlanParams&, const PlanParams&) = default;
};

struct Scenario {
    GridWorld world;
    std::vector<CameraSpec> cameras;
    SimParams sim;
    std::optional<PlanParams> plan;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::string& path);
/// Output parses back to an identical Scenario.
std::string serialize_scenario(const Scenario& scenario);

}  // namespace ubimap::world

#endif  // UBIMAP_SCENARIO_HPP
