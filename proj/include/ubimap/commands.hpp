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

#ifndef UBIMAP_COMMANDS_HPP
#define UBIMAP_COMMANDS_HPP

#include "ubimap/simulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ubimap::cli {

enum ExitCode : int { kOk = 0, kParseError = 1, kConstraintError = 2, kCalibrationError = 3, kRuntimeError = 4 };

struct CommandOptions {
    std::optional<std::uint64_t> seed;
    bool exact = false;
    bool strict = false;
    std::optional<double> duration;
    std::string out_dir = ".";
};

/// Long-format CSV: one "section,key,field,value" row per datum.
class CsvReport {
public:
    void add(const std::string& section, const std::string& key, const std::string& field, const std::string& value);
    void add(const std::string& section, const std::string& key, const std::string& field, double value);
    std::string str() const;

private:
    std::string body_;
};

std::string plan_report(const sim::PlanOutcome& plan);
std::string calibration_report(const sim::CalibrationOutcome& cal, std::uint64_t seed);
std::string simulation_report(const sim::RunReport& rep);
/// "t,robot,error" rows, one per frame and tracked robot.
std::string localization_report(const sim::RunReport& rep);

/// Each command loads the scenario, writes its outputs under out_dir and
/// returns the process exit code. Diagnostics go to `err`.
int cmd_plan(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_calibrate(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_render(const std::string& scenario_path, const CommandOptions& opts, std::ostream& out, std::ostream& err);

void write_file(const std::string& path, const std::string& text);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace ubimap::cli

#endif  // UBIMAP_COMMANDS_HPP
