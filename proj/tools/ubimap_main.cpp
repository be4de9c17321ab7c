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

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

int main(int argc, char** argv)
{
    using namespace ubimap::cli;

    CLI::App app{"Desk-scale fixed-camera mapping testbed"};
    app.require_subcommand(1);

    std::string scenario;
    CommandOptions opts;
    std::uint64_t seed = 0;
    double duration = 0.0;

    using Command = int (*)(const std::string&, const CommandOptions&, std::ostream&, std::ostream&);
    const std::map<std::string, std::pair<std::string, Command>> commands = {
        {"plan", {"Choose camera placements and report coverage", cmd_plan}},
        {"calibrate", {"Estimate camera poses from shared landmarks", cmd_calibrate}},
        {"simulate", {"Run the fusion, localization and broadcast loop", cmd_simulate}},
        {"render", {"Render the ground-truth map and coverage", cmd_render}},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("scenario", scenario, "Scenario file")->required();
        sub->add_option("--seed", seed, "Override the scenario seed");
        sub->add_flag("--exact", opts.exact, "Use exhaustive placement instead of greedy");
        sub->add_flag("--strict", opts.strict, "Exit 2 when overlap constraints are violated");
        sub->add_option("--duration", duration, "Simulated seconds")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", opts.out_dir, "Output directory");
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kParseError;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed())
            continue;
        if (sub->count("--seed"))
            opts.seed = seed;
        if (sub->count("--duration"))
            opts.duration = duration;
        return commands.at(name).second(scenario, opts, std::cout, std::cerr);
    }
    return kParseError;
}
