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

#ifndef UBIMAP_COVERAGE_HPP
#define UBIMAP_COVERAGE_HPP

#include "ubimap/world.hpp"

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace ubimap::coverage {

using world::CameraSpec;
using world::CellIndex;
using world::CellSet;
using world::GridWorld;

struct CoverageProblem {
    GridWorld world;
    std::vector<CameraSpec> candidates;
    /// Cells to cover; empty means every free cell of the world.
    CellSet target_cells;
    int min_overlap = 0;
    int max_overlap = 1;
    int budget = 1;

    /// Throws std::invalid_argument when m <= k, k >= 1, budget >= 1 or a
    /// candidate's own invariants do not hold.
    void validate() const;
    /// target_cells, or all free cells when unset.
    CellSet targets() const;
};

struct Violation {
    CellIndex cell;
    int count = 0;
    friend bool operator==(const Violation&, const Violation&) = default;
};

struct PlacementPlan {
    /// Candidate ids, in selection order.
    std::vector<int> selected;
    CellSet covered;
    std::map<CellIndex, int> per_cell_multiplicity;
    double coverage_ratio = 0.0;
    std::vector<Violation> violations;
};

class ProblemTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Union of covered_cells over the selection.
CellSet total_coverage(std::span<const CameraSpec> selected, const GridWorld& world);

/// f(C, S): number of target cells covered at least once.
double objective(const PlacementPlan& plan, const CoverageProblem& problem);

/// One entry per target cell whose multiplicity is outside [m, k].
std::vector<Violation> check_overlap(const PlacementPlan& plan, const CoverageProblem& problem);

/// Builds the plan for the given candidate ids (covered set, multiplicities,
/// ratio and violations filled in).
PlacementPlan evaluate_selection(const CoverageProblem& problem, const std::vector<int>& selected_ids);

/// Marginal-gain greedy under the max-overlap cap, then a repair pass that
/// spends leftover budget on cells below the min-overlap. Residual
/// under-coverage is reported in `violations`.
PlacementPlan plan_greedy(const CoverageProblem& problem);

/// Best cap-feasible subset within budget; ties go to fewer cameras, then
/// the lexicographically smallest sorted id list. Throws ProblemTooLarge
/// when more than 2^20 subsets would be enumerated.
PlacementPlan plan_exhaustive(const CoverageProblem& problem);

/// Candidate cameras after id lookup; throws std::out_of_range on an
/// unknown id.
std::vector<CameraSpec> selected_cameras(const CoverageProblem& problem, const std::vector<int>& ids);

}  // namespace ubimap::coverage

#endif  // UBIMAP_COVERAGE_HPP
