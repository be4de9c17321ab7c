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

#ifndef UBIMAP_SENSIM_HPP
#define UBIMAP_SENSIM_HPP

#include "ubimap/world.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ubimap::sensim {

using world::CameraSpec;
using world::CellIndex;
using world::GridWorld;
using world::Point2;
using world::Point3;

struct LandmarkObservation {
    int camera_id = 0;
    int landmark_id = 0;
    /// In the camera optical frame.
    Point3 point = Point3::Zero();
};

struct TagDetection {
    int camera_id = 0;
    int tag_id = 0;
    /// In the camera-local ground frame (lateral, forward).
    Point2 ground_position = Point2::Zero();
    double timestamp = 0.0;
};

struct ObstacleEvidence {
    int camera_id = 0;
    CellIndex cell;
    bool occupied = false;
    /// Static structure seen by the camera. Implies occupied.
    bool wall = false;
    double timestamp = 0.0;
};

/// Deterministic generator for one stream, keyed by a tuple of integers.
std::mt19937_64 stream_rng(std::initializer_list<std::uint64_t> key);

/// Viewing volume used for landmarks: ground projection inside the
/// footprint, below the camera, and in 2D line of sight.
bool landmark_visible(const CameraSpec& cam, const GridWorld& world, const Point3& p);

/// Landmarks in view, expressed in the camera frame, plus N(0, sigma^2 I)
/// noise drawn from stream (seed, camera_id, landmark_id).
std::vector<LandmarkObservation> observe_landmarks(const CameraSpec& cam, const GridWorld& world, double sigma,
                                                   std::uint64_t seed);

/// One detection per robot whose cell is covered by the camera.
std::vector<TagDetection> observe_tags(const CameraSpec& cam, const GridWorld& world, double sigma,
                                       std::uint64_t seed, double t);

/// Free/occupied evidence for every covered cell, plus wall evidence for
/// visible wall faces inside the footprint.
std::vector<ObstacleEvidence> observe_obstacles(const CameraSpec& cam, const GridWorld& world, double t = 0.0);

}  // namespace ubimap::sensim

#endif  // UBIMAP_SENSIM_HPP
