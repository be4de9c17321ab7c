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

#include "ubimap/sensim.hpp"

#include <algorithm>
#include <cmath>

namespace ubimap::sensim {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t time_key(double t)
{
    return static_cast<std::uint64_t>(std::llround(t * 1e6));
}

// Distinguishes landmark and tag streams that share the same ids.
constexpr std::uint64_t kLandmarkStream = 0x4c4d;
constexpr std::uint64_t kTagStream = 0x5447;

}  // namespace

std::mt19937_64 stream_rng(std::initializer_list<std::uint64_t> key)
{
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (std::uint64_t k : key)
        h = splitmix64(h ^ splitmix64(k));
    return std::mt19937_64(h);
}

bool landmark_visible(const CameraSpec& cam, const GridWorld& world, const Point3& p)
{
    const Point2 ground(p.x(), p.y());
    if (p.z() < 0.0 || p.z() >= cam.height)
        return false;
    if (!world::ground_footprint(cam).contains(ground))
        return false;
    return world.contains(ground) && world::line_of_sight(world, {cam.x, cam.y}, ground);
}

std::vector<LandmarkObservation> observe_landmarks(const CameraSpec& cam, const GridWorld& world, double sigma,
                                                   std::uint64_t seed)
{
    std::vector<LandmarkObservation> out;
    const auto world_to_camera = world::camera_world_pose(cam).inverse();
    for (const auto& lm : world.landmarks) {
        if (!landmark_visible(cam, world, lm.position))
            continue;
        LandmarkObservation obs;
        obs.camera_id = cam.id;
        obs.landmark_id = lm.id;
        obs.point = world_to_camera.apply(lm.position);
        if (sigma > 0.0) {
            auto rng = stream_rng({kLandmarkStream, seed, static_cast<std::uint64_t>(cam.id),
                                   static_cast<std::uint64_t>(lm.id)});
            std::normal_distribution<double> n(0.0, sigma);
            for (int a = 0; a < 3; ++a)
                obs.point[a] += n(rng);
        }
        out.push_back(obs);
    }
    return out;
}

std::vector<TagDetection> observe_tags(const CameraSpec& cam, const GridWorld& world, double sigma,
                                       std::uint64_t seed, double t)
{
    std::vector<TagDetection> out;
    const auto covered = world::covered_cells(cam, world);
    const auto fp = world::ground_footprint(cam);
    for (const auto& r : world.robots) {
        auto cell = world.cell_at({r.x, r.y});
        if (!cell || !std::binary_search(covered.begin(), covered.end(), *cell))
            continue;
        TagDetection d;
        d.camera_id = cam.id;
        d.tag_id = r.tag;
        d.timestamp = t;
        d.ground_position = fp.to_local({r.x, r.y});
        if (sigma > 0.0) {
            auto rng = stream_rng({kTagStream, seed, time_key(t), static_cast<std::uint64_t>(cam.id),
                                   static_cast<std::uint64_t>(r.tag)});
            std::normal_distribution<double> n(0.0, sigma);
            d.ground_position.x() += n(rng);
            d.ground_position.y() += n(rng);
        }
        out.push_back(d);
    }
    return out;
}

std::vector<ObstacleEvidence> observe_obstacles(const CameraSpec& cam, const GridWorld& world, double t)
{
    std::vector<ObstacleEvidence> out;
    const auto occ = world.occupancy();
    for (const auto& c : world::covered_cells(cam, world))
        out.push_back({cam.id, c, static_cast<bool>(occ[world.linear(c)]), false, t});
    for (const auto& c : world::visible_wall_cells(cam, world))
        out.push_back({cam.id, c, true, true, t});
    return out;
}

}  // namespace ubimap::sensim
