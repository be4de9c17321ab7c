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

#ifndef UBIMAP_NETSIM_HPP
#define UBIMAP_NETSIM_HPP

#include "ubimap/fusion.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ubimap::netsim {

using fusion::CellState;
using fusion::GridMap;

enum class Kind : std::uint8_t { Hello = 1, MapUpdate = 2, RobotPose = 3, SensorUpload = 4, Ack = 5 };

const char* to_string(Kind k);

struct Message {
    Kind kind = Kind::Hello;
    std::uint32_t seq = 0;
    std::uint16_t sender_id = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const Message&, const Message&) = default;
};

constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kMaxPayload = std::size_t{1} << 24;
constexpr std::uint8_t kVersion = 0x01;

class FrameError : public std::runtime_error {
public:
    enum class Reason { Malformed, Truncated };
    FrameError(Reason reason, std::size_t offset, const std::string& what);
    Reason reason() const { return reason_; }
    /// Byte offset of the offending field.
    std::size_t offset() const { return offset_; }

private:
    Reason reason_;
    std::size_t offset_;
};

class OversizePayload : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// "UBSM" | version | kind | seq u32 | sender u16 | payload_len u32 | payload.
/// Multi-byte fields are little-endian.
std::vector<std::uint8_t> encode(const Message& msg);
/// Decodes exactly one frame occupying all of `bytes`.
Message decode(std::span<const std::uint8_t> bytes);

// Payload codecs ------------------------------------------------------------

/// MAP_UPDATE payload is the map snapshot.
std::vector<std::uint8_t> encode_map_update(const GridMap& map);
GridMap decode_map_update(std::span<const std::uint8_t> payload, double cell_size);

/// ROBOT_POSE: robot_id u16 | x f64 | y f64 | heading f64 | sigma f64.
struct RobotPose {
    std::uint16_t robot_id = 0;
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double sigma = 0.0;
    friend bool operator==(const RobotPose&, const RobotPose&) = default;
};
std::vector<std::uint8_t> encode_robot_pose(const RobotPose& p);
RobotPose decode_robot_pose(std::span<const std::uint8_t> payload);

/// SENSOR_UPLOAD: col0 u16 | row0 u16 | width u16 | height u16 | one state
/// byte per cell, row-major. Unexplored cells carry no information.
struct Fragment {
    std::uint16_t col0 = 0;
    std::uint16_t row0 = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::vector<CellState> cells;
    friend bool operator==(const Fragment&, const Fragment&) = default;
};
std::vector<std::uint8_t> encode_fragment(const Fragment& f);
Fragment decode_fragment(std::span<const std::uint8_t> payload);
/// Embeds the fragment in an otherwise Unexplored map of the given shape.
/// Throws std::invalid_argument if it does not fit.
GridMap fragment_to_map(const Fragment& f, int width, int height, double cell_size);
/// Bounding box of the non-Unexplored cells of `local`.
Fragment map_to_fragment(const GridMap& local);

/// ACK: acknowledged seq u32.
std::vector<std::uint8_t> encode_ack(std::uint32_t seq);
std::uint32_t decode_ack(std::span<const std::uint8_t> payload);

// Simulated network ---------------------------------------------------------

struct NetworkParams {
    double latency_ms = 5.0;
    double jitter_ms = 0.0;  // latency is uniform in mean +/- jitter, clamped at 0
    double loss_probability = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Address of the map server; robots are addressed by robot id.
constexpr int kServerAddress = -1;

struct Delivery {
    double sent_at = 0.0;
    double deliver_at = 0.0;
    int destination = 0;
    std::vector<std::uint8_t> frame;
};

struct NetworkStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
};

/// Event queue with seeded per-message loss and latency. Each message's fate
/// depends only on (seed, sender, kind, seq, destination).
class SimNetwork {
public:
    explicit SimNetwork(NetworkParams params);

    void submit(double now, int destination, const Message& msg);
    /// Releases everything due at or before `now`, ordered by delivery time,
    /// then seq, then submission order.
    std::vector<Delivery> deliver_until(double now);
    bool idle() const { return pending_.empty(); }
    /// Delivery time of the earliest pending message.
    std::optional<double> next_delivery() const;

    const NetworkStats& stats() const { return stats_; }
    /// Every submitted frame as uppercase hex, in submission order.
    const std::vector<std::string>& capture() const { return capture_; }

private:
    struct Pending {
        Delivery d;
        std::uint32_t seq = 0;
        std::uint64_t order = 0;
    };
    NetworkParams params_;
    std::vector<Pending> pending_;
    std::uint64_t submitted_ = 0;
    NetworkStats stats_;
    std::vector<std::string> capture_;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

// Endpoints -----------------------------------------------------------------

class WrongDirection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ClientState {
    int robot_id = 0;
    std::optional<std::uint32_t> last_applied_seq;
    GridMap map;
    std::optional<std::uint32_t> last_pose_seq;
    std::map<int, RobotPose> poses;
    std::set<std::uint32_t> acked;
    std::uint64_t stale = 0;
    /// Seqs of applied MAP_UPDATEs, in application order.
    std::vector<std::uint32_t> applied;
};

/// MAP_UPDATE and ROBOT_POSE are applied only when newer than the last one
/// of their kind; stale ones are counted. Throws WrongDirection for
/// SENSOR_UPLOAD.
ClientState client_apply(ClientState cs, const Message& msg);

struct IngestResult {
    std::optional<Message> ack;
    std::optional<GridMap> merge;
    std::optional<std::string> fault;
    bool duplicate = false;
};

/// Server side of SENSOR_UPLOAD handling: dedups by (sender, seq), ACKs
/// every well-formed upload, drops malformed ones without an ACK.
class UploadIngest {
public:
    UploadIngest(int width, int height, double cell_size, std::uint16_t server_id = 0);
    IngestResult ingest(const Message& upload);

private:
    int width_;
    int height_;
    double cell_size_;
    std::uint16_t server_id_;
    std::uint32_t next_ack_seq_ = 0;
    std::set<std::pair<std::uint16_t, std::uint32_t>> seen_;
};

}  // namespace ubimap::netsim

#endif  // UBIMAP_NETSIM_HPP
