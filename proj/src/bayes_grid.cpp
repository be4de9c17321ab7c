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

#include "ubimap/fusion.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ubimap::fusion {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double normal_cdf(double x, double mean, double sd)
{
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

// Position in bin-center units -> lower bin and the share of the upper
// one. Shares within 1e-9 of a center snap to it.
std::pair<int, double> between_centers(double c)
{
    double i0 = std::floor(c);
    double frac = c - i0;
    if (frac < 1e-9) {
        frac = 0.0;
    } else if (frac > 1.0 - 1e-9) {
        i0 += 1.0;
        frac = 0.0;
    }
    return {static_cast<int>(i0), frac};
}

struct Spread {
    int first = 0;
    std::vector<double> w;
};

// Mass of N(mean, var) falling in each of n bins [lo + b*step, lo + (b+1)*step).
Spread spread_linear(double mean, double var, double lo, double step, int n)
{
    Spread s;
    if (var <= 0.0) {
        const auto [i0, frac] = between_centers((mean - lo) / step - 0.5);
        for (int k = i0; k <= i0 + 1; ++k) {
            const double w = k == i0 ? 1.0 - frac : frac;
            if (k < 0 || k >= n || w == 0.0)
                continue;
            if (s.w.empty())
                s.first = k;
            s.w.resize(k - s.first + 1, 0.0);
            s.w[k - s.first] = w;
        }
        return s;
    }
    const double sd = std::sqrt(var);
    const int a = std::max(0, static_cast<int>(std::floor((mean - 8.0 * sd - lo) / step)));
    const int b = std::min(n - 1, static_cast<int>(std::floor((mean + 8.0 * sd - lo) / step)));
    if (a > b)
        return s;
    s.first = a;
    for (int k = a; k <= b; ++k)
        s.w.push_back(normal_cdf(lo + (k + 1) * step, mean, sd) - normal_cdf(lo + k * step, mean, sd));
    return s;
}

// Same over heading bins covering [-pi, pi), wrapping around.
std::vector<double> spread_heading(double mean, double var, int nh)
{
    std::vector<double> w(nh, 0.0);
    if (nh == 1) {
        w[0] = 1.0;
        return w;
    }
    const double step = kTwoPi / nh;
    const double m = wrap_angle(mean);
    if (var <= 0.0) {
        const auto [k0, frac] = between_centers((m + std::numbers::pi) / step - 0.5);
        w[((k0 % nh) + nh) % nh] += 1.0 - frac;
        w[(((k0 + 1) % nh) + nh) % nh] += frac;
        return w;
    }
    const double sd = std::sqrt(var);
    const int wraps = 1 + static_cast<int>(std::ceil(8.0 * sd / kTwoPi));
    for (int k = 0; k < nh; ++k) {
        const double lo = -std::numbers::pi + k * step;
        for (int r = -wraps; r <= wraps; ++r)
            w[k] += normal_cdf(lo + step + r * kTwoPi, m, sd) - normal_cdf(lo + r * kTwoPi, m, sd);
    }
    return w;
}

}  // namespace

GridBelief GridBelief::uniform(double origin_x, double origin_y, double resolution, int nx, int ny, int nh)
{
    if (nx < 1 || ny < 1 || nh < 1 || !(resolution > 0.0))
        throw std::invalid_argument("GridBelief: bad dimensions");
    GridBelief g;
    g.origin_x = origin_x;
    g.origin_y = origin_y;
    g.resolution = resolution;
    g.nx = nx;
    g.ny = ny;
    g.nh = nh;
    const std::size_t n = static_cast<std::size_t>(nx) * ny * nh;
    g.p.assign(n, 1.0 / static_cast<double>(n));
    return g;
}

Vector3 GridBelief::center(int i, int j, int k) const
{
    const double heading = nh == 1 ? 0.0 : -std::numbers::pi + (k + 0.5) * kTwoPi / nh;
    return {origin_x + (i + 0.5) * resolution, origin_y + (j + 0.5) * resolution, heading};
}

double GridBelief::total() const
{
    return std::accumulate(p.begin(), p.end(), 0.0);
}

GridBelief bayes_grid_step(const GridBelief& gb, const Vector3& u, const std::optional<Eigen::VectorXd>& z,
                           const MotionModel& mm, const ObservationModel& om, const GridMap* map)
{
    GridBelief out = gb;
    std::fill(out.p.begin(), out.p.end(), 0.0);
    const Matrix3& q = mm.process_noise;

    for (int k = 0; k < gb.nh; ++k)
        for (int j = 0; j < gb.ny; ++j)
            for (int i = 0; i < gb.nx; ++i) {
                const double mass = gb.at(i, j, k);
                if (mass == 0.0)
                    continue;
                const Vector3 m = mm.f(gb.center(i, j, k), u);
                const Spread sx = spread_linear(m.x(), q(0, 0), gb.origin_x, gb.resolution, gb.nx);
                const Spread sy = spread_linear(m.y(), q(1, 1), gb.origin_y, gb.resolution, gb.ny);
                if (sx.w.empty() || sy.w.empty())
                    continue;
                const std::vector<double> sh = spread_heading(m.z(), q(2, 2), gb.nh);
                for (int kk = 0; kk < gb.nh; ++kk) {
                    if (sh[kk] == 0.0)
                        continue;
                    for (std::size_t b = 0; b < sy.w.size(); ++b) {
                        const double wyh = mass * sh[kk] * sy.w[b];
                        for (std::size_t a = 0; a < sx.w.size(); ++a)
                            out.p[out.index(sx.first + static_cast<int>(a), sy.first + static_cast<int>(b), kk)] +=
                                wyh * sx.w[a];
                    }
                }
            }

    Eigen::MatrixXd r_inv;
    if (z)
        r_inv = om.measurement_noise.inverse();
    for (int k = 0; k < out.nh; ++k)
        for (int j = 0; j < out.ny; ++j)
            for (int i = 0; i < out.nx; ++i) {
                double& p = out.p[out.index(i, j, k)];
                if (p == 0.0)
                    continue;
                const Vector3 c = out.center(i, j, k);
                if (map) {
                    if (auto cell = map->cell_at(c.x(), c.y())) {
                        const CellState s = map->at(*cell);
                        if (s == CellState::Wall || s == CellState::Obstacle) {
                            p = 0.0;
                            continue;
                        }
                    }
                }
                if (z) {
                    const Eigen::VectorXd r = *z - om.h(c);
                    p *= std::exp(-0.5 * r.dot(r_inv * r));
                }
            }

    const double total = out.total();
    if (!(total > 0.0) || !std::isfinite(total))
        throw DegenerateLikelihood("bayes_grid_step: posterior has no mass");
    for (double& p : out.p)
        p /= total;
    out.eta = 1.0 / total;
    return out;
}

}  // namespace ubimap::fusion
