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

#include "ubimap/coverage.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace ubimap::coverage {

namespace {

constexpr double kEnumerationCap = 1048576.0;  // 2^20

// Per-candidate coverage restricted to the target set.
struct CoverageIndex {
    CellSet targets;
    std::vector<std::vector<int>> hits;  // candidate -> target positions
    std::vector<int> order;              // candidate positions sorted by id

    explicit CoverageIndex(const CoverageProblem& p) : targets(p.targets())
    {
        std::vector<int> pos(p.world.cell_count(), -1);
        for (std::size_t t = 0; t < targets.size(); ++t)
            pos[p.world.linear(targets[t])] = static_cast<int>(t);
        hits.reserve(p.candidates.size());
        for (const auto& cam : p.candidates) {
            std::vector<int> h;
            for (const auto& c : world::covered_cells(cam, p.world))
                if (int t = pos[p.world.linear(c)]; t >= 0)
                    h.push_back(t);
            hits.push_back(std::move(h));
        }
        order.resize(p.candidates.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return p.candidates[a].id < p.candidates[b].id; });
    }
};

bool fits_cap(const std::vector<int>& hits, const std::vector<int>& mult, int cap)
{
    return std::all_of(hits.begin(), hits.end(), [&](int t) { return mult[t] + 1 <= cap; });
}

}  // namespace

void CoverageProblem::validate() const
{
    if (min_overlap < 0 || max_overlap < 1 || min_overlap > max_overlap)
        throw std::invalid_argument("CoverageProblem: need 0 <= m <= k and k >= 1");
    if (budget < 1)
        throw std::invalid_argument("CoverageProblem: budget must be at least 1");
    std::set<int> ids;
    for (const auto& c : candidates) {
        if (!c.valid())
            throw std::invalid_argument("CoverageProblem: candidate " + std::to_string(c.id) + " is invalid");
        if (!ids.insert(c.id).second)
            throw std::invalid_argument("CoverageProblem: duplicate candidate id " + std::to_string(c.id));
    }
    for (const auto& t : target_cells)
        if (!world.in_bounds(t))
            throw std::invalid_argument("CoverageProblem: target cell outside the world");
}

CellSet CoverageProblem::targets() const
{
    if (!target_cells.empty()) {
        CellSet t = target_cells;
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        return t;
    }
    CellSet all;
    for (std::size_t i = 0; i < world.cell_count(); ++i) {
        CellIndex c = world.from_linear(i);
        if (!world.is_wall(c))
            all.push_back(c);
    }
    return all;
}

CellSet total_coverage(std::span<const CameraSpec> selected, const GridWorld& world)
{
    std::set<CellIndex> u;
    for (const auto& cam : selected)
        for (const auto& c : world::covered_cells(cam, world))
            u.insert(c);
    return {u.begin(), u.end()};
}

double objective(const PlacementPlan& plan, const CoverageProblem& problem)
{
    double f = 0.0;
    for (const auto& s : problem.targets()) {
        auto it = plan.per_cell_multiplicity.find(s);
        int sum = it == plan.per_cell_multiplicity.end() ? 0 : it->second;
        f += std::min(1, sum);
    }
    return f;
}

std::vector<Violation> check_overlap(const PlacementPlan& plan, const CoverageProblem& problem)
{
    std::vector<Violation> out;
    for (const auto& s : problem.targets()) {
        auto it = plan.per_cell_multiplicity.find(s);
        int n = it == plan.per_cell_multiplicity.end() ? 0 : it->second;
        if (n < problem.min_overlap || n > problem.max_overlap)
            out.push_back({s, n});
    }
    return out;
}

std::vector<CameraSpec> selected_cameras(const CoverageProblem& problem, const std::vector<int>& ids)
{
    std::vector<CameraSpec> out;
    for (int id : ids) {
        auto it = std::find_if(problem.candidates.begin(), problem.candidates.end(),
                               [&](const CameraSpec& c) { return c.id == id; });
        if (it == problem.candidates.end())
            throw std::out_of_range("unknown candidate id " + std::to_string(id));
        out.push_back(*it);
    }
    return out;
}

PlacementPlan evaluate_selection(const CoverageProblem& problem, const std::vector<int>& selected_ids)
{
    PlacementPlan plan;
    plan.selected = selected_ids;
    auto cams = selected_cameras(problem, selected_ids);
    for (const auto& cam : cams)
        for (const auto& c : world::covered_cells(cam, problem.world))
            ++plan.per_cell_multiplicity[c];
    for (const auto& [c, n] : plan.per_cell_multiplicity)
        plan.covered.push_back(c);
    const CellSet targets = problem.targets();
    std::size_t hit = 0;
    for (const auto& t : targets)
        hit += plan.per_cell_multiplicity.count(t);
    plan.coverage_ratio = targets.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(targets.size());
    plan.violations = check_overlap(plan, problem);
    return plan;
}

PlacementPlan plan_greedy(const CoverageProblem& problem)
{
    problem.validate();
    if (problem.candidates.empty())
        throw std::invalid_argument("plan_greedy: no candidates");
    const CoverageIndex idx(problem);
    const int k = problem.max_overlap, m = problem.min_overlap;
    std::vector<int> mult(idx.targets.size(), 0);
    std::vector<bool> used(problem.candidates.size(), false);
    std::vector<int> chosen;
    std::size_t covered = 0;

    auto take = [&](int ci) {
        used[ci] = true;
        chosen.push_back(problem.candidates[ci].id);
        for (int t : idx.hits[ci])
            if (mult[t]++ == 0)
                ++covered;
    };

    // Phase 1: marginal coverage gain.
    while (static_cast<int>(chosen.size()) < problem.budget && covered < idx.targets.size()) {
        int best = -1;
        std::size_t best_gain = 0;
        for (int ci : idx.order) {
            if (used[ci] || !fits_cap(idx.hits[ci], mult, k))
                continue;
            std::size_t gain = std::count_if(idx.hits[ci].begin(), idx.hits[ci].end(),
                                             [&](int t) { return mult[t] == 0; });
            if (gain > best_gain) {
                best = ci;
                best_gain = gain;
            }
        }
        if (best < 0)
            break;
        take(best);
    }

    // Phase 2: spend what is left of the budget on cells below m.
    while (m > 0 && static_cast<int>(chosen.size()) < problem.budget) {
        int best = -1;
        std::size_t best_gain = 0;
        for (int ci : idx.order) {
            if (used[ci] || !fits_cap(idx.hits[ci], mult, k))
                continue;
            std::size_t gain = std::count_if(idx.hits[ci].begin(), idx.hits[ci].end(),
                                             [&](int t) { return mult[t] < m; });
            if (gain > best_gain) {
                best = ci;
                best_gain = gain;
            }
        }
        if (best < 0)
            break;
        take(best);
    }

    return evaluate_selection(problem, chosen);
}

PlacementPlan plan_exhaustive(const CoverageProblem& problem)
{
    problem.validate();
    const std::size_t n = problem.candidates.size();
    const std::size_t max_size = std::min<std::size_t>(n, static_cast<std::size_t>(problem.budget));
    double subsets = 0.0, binom = 1.0;
    for (std::size_t s = 0; s <= max_size; ++s) {
        subsets += binom;
        binom = binom * static_cast<double>(n - s) / static_cast<double>(s + 1);
    }
    if (subsets > kEnumerationCap)
        throw ProblemTooLarge("plan_exhaustive: " + std::to_string(n) + " candidates with budget " +
                              std::to_string(problem.budget) + " exceed the 2^20 subset cap");

    const CoverageIndex idx(problem);
    const int k = problem.max_overlap;
    std::vector<int> mult(idx.targets.size(), 0);
    std::vector<int> current;  // candidate ids, ascending (order is by id)
    std::vector<int> best_ids;
    std::size_t best_obj = 0;
    std::size_t covered = 0;

    auto better = [&](std::size_t obj) {
        if (obj != best_obj)
            return obj > best_obj;
        if (current.size() != best_ids.size())
            return current.size() < best_ids.size();
        return current < best_ids;
    };

    // Depth-first over id-sorted combinations. Multiplicities only grow, so
    // a candidate that breaks the cap prunes its whole subtree.
    auto dfs = [&](auto&& self, std::size_t from) -> void {
        if (better(covered)) {
            best_obj = covered;
            best_ids = current;
        }
        if (current.size() == max_size)
            return;
        for (std::size_t p = from; p < n; ++p) {
            int ci = idx.order[p];
            if (!fits_cap(idx.hits[ci], mult, k))
                continue;
            for (int t : idx.hits[ci])
                if (mult[t]++ == 0)
                    ++covered;
            current.push_back(problem.candidates[ci].id);
            self(self, p + 1);
            current.pop_back();
            for (int t : idx.hits[ci])
                if (--mult[t] == 0)
                    --covered;
        }
    };
    dfs(dfs, 0);

    return evaluate_selection(problem, best_ids);
}

}  // namespace ubimap::coverage
