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

#include "ubimap/netsim.hpp"

#include "ubimap/sensim.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <random>
#include <tuple>

namespace ubimap::netsim {

namespace {

constexpr std::uint8_t kMagic[4] = {'U', 'B', 'S', 'M'};
constexpr std::uint64_t kNetworkStream = 0x4e4554;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v)
{
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b)
        out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint16_t get_u16(std::span<const std::uint8_t> in, std::size_t at)
{
    return static_cast<std::uint16_t>(in[at] | in[at + 1] << 8);
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at)
{
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
        v |= static_cast<std::uint32_t>(in[at + b]) << (8 * b);
    return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t at)
{
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(in[at + b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

bool valid_kind(std::uint8_t k)
{
    return k >= 1 && k <= 5;
}

}  // namespace

const char* to_string(Kind k)
{
    switch (k) {
    case Kind::Hello: return "HELLO";
    case Kind::MapUpdate: return "MAP_UPDATE";
    case Kind::RobotPose: return "ROBOT_POSE";
    case Kind::SensorUpload: return "SENSOR_UPLOAD";
    case Kind::Ack: return "ACK";
    }
    return "?";
}

FrameError::FrameError(Reason reason, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), reason_(reason), offset_(offset)
{
}

std::vector<std::uint8_t> encode(const Message& msg)
{
    if (msg.payload.size() > kMaxPayload)
        throw OversizePayload("encode: payload exceeds 2^24 bytes");
    if (!valid_kind(static_cast<std::uint8_t>(msg.kind)))
        throw std::invalid_argument("encode: unknown message kind");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(kHeaderSize + msg.payload.size());
    out.push_back(kVersion);
    out.push_back(static_cast<std::uint8_t>(msg.kind));
    put_u32(out, msg.seq);
    put_u16(out, msg.sender_id);
    put_u32(out, static_cast<std::uint32_t>(msg.payload.size()));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

Message decode(std::span<const std::uint8_t> bytes)
{
    using R = FrameError::Reason;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= bytes.size())
            throw FrameError(R::Truncated, i, "truncated magic");
        if (bytes[i] != kMagic[i])
            throw FrameError(R::Malformed, i, "bad magic");
    }
    if (bytes.size() < 5)
        throw FrameError(R::Truncated, 4, "truncated version");
    if (bytes[4] != kVersion)
        throw FrameError(R::Malformed, 4, "unsupported version");
    if (bytes.size() < 6)
        throw FrameError(R::Truncated, 5, "truncated kind");
    if (!valid_kind(bytes[5]))
        throw FrameError(R::Malformed, 5, "unknown kind");
    if (bytes.size() < kHeaderSize)
        throw FrameError(R::Truncated, bytes.size(), "truncated header");

    Message m;
    m.kind = static_cast<Kind>(bytes[5]);
    m.seq = get_u32(bytes, 6);
    m.sender_id = get_u16(bytes, 10);
    const std::uint32_t len = get_u32(bytes, 12);
    if (len > kMaxPayload)
        throw FrameError(R::Malformed, 12, "payload length exceeds limit");
    if (bytes.size() < kHeaderSize + len)
        throw FrameError(R::Truncated, 12, "declared payload length runs past the buffer");
    if (bytes.size() > kHeaderSize + len)
        throw FrameError(R::Malformed, kHeaderSize + len, "trailing bytes after payload");
    m.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
    return m;
}

std::vector<std::uint8_t> encode_map_update(const GridMap& map)
{
    return fusion::export_snapshot(map);
}

GridMap decode_map_update(std::span<const std::uint8_t> payload, double cell_size)
{
    try {
        return fusion::import_snapshot(payload, cell_size);
    } catch (const std::invalid_argument& e) {
        throw FrameError(FrameError::Reason::Malformed, kHeaderSize, e.what());
    }
}

std::vector<std::uint8_t> encode_robot_pose(const RobotPose& p)
{
    std::vector<std::uint8_t> out;
    put_u16(out, p.robot_id);
    put_f64(out, p.x);
    put_f64(out, p.y);
    put_f64(out, p.heading);
    put_f64(out, p.sigma);
    return out;
}

RobotPose decode_robot_pose(std::span<const std::uint8_t> payload)
{
    if (payload.size() != 34)
        throw FrameError(FrameError::Reason::Malformed, kHeaderSize, "ROBOT_POSE payload must be 34 bytes");
    return {get_u16(payload, 0), get_f64(payload, 2), get_f64(payload, 10), get_f64(payload, 18),
            get_f64(payload, 26)};
}

std::vector<std::uint8_t> encode_fragment(const Fragment& f)
{
    if (f.cells.size() != static_cast<std::size_t>(f.width) * f.height)
        throw std::invalid_argument("encode_fragment: cell count does not match width x height");
    std::vector<std::uint8_t> out;
    put_u16(out, f.col0);
    put_u16(out, f.row0);
    put_u16(out, f.width);
    put_u16(out, f.height);
    for (CellState s : f.cells)
        out.push_back(static_cast<std::uint8_t>(s));
    return out;
}

Fragment decode_fragment(std::span<const std::uint8_t> payload)
{
    using R = FrameError::Reason;
    if (payload.size() < 8)
        throw FrameError(R::Truncated, kHeaderSize, "fragment header truncated");
    Fragment f;
    f.col0 = get_u16(payload, 0);
    f.row0 = get_u16(payload, 2);
    f.width = get_u16(payload, 4);
    f.height = get_u16(payload, 6);
    const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
    if (payload.size() != 8 + n)
        throw FrameError(R::Malformed, kHeaderSize + 4, "fragment cell count does not match width x height");
    f.cells.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (payload[8 + i] >= fusion::kCellStateCount)
            throw FrameError(R::Malformed, kHeaderSize + 8 + i, "invalid cell state");
        f.cells.push_back(static_cast<CellState>(payload[8 + i]));
    }
    return f;
}

GridMap fragment_to_map(const Fragment& f, int width, int height, double cell_size)
{
    GridMap m(width, height, cell_size);
    if (f.width == 0 || f.height == 0)
        return m;
    if (f.col0 + f.width > width || f.row0 + f.height > height)
        throw std::invalid_argument("fragment extends beyond the map");
    for (int r = 0; r < f.height; ++r)
        for (int c = 0; c < f.width; ++c)
            m.set({f.col0 + c, f.row0 + r}, f.cells[static_cast<std::size_t>(r) * f.width + c]);
    return m;
}

Fragment map_to_fragment(const GridMap& local)
{
    int c0 = local.width(), r0 = local.height(), c1 = -1, r1 = -1;
    for (std::size_t i = 0; i < local.cells().size(); ++i) {
        if (local.cells()[i] == CellState::Unexplored)
            continue;
        const auto c = local.from_linear(i);
        c0 = std::min(c0, c.col);
        r0 = std::min(r0, c.row);
        c1 = std::max(c1, c.col);
        r1 = std::max(r1, c.row);
    }
    Fragment f;
    if (c1 < 0)
        return f;
    f.col0 = static_cast<std::uint16_t>(c0);
    f.row0 = static_cast<std::uint16_t>(r0);
    f.width = static_cast<std::uint16_t>(c1 - c0 + 1);
    f.height = static_cast<std::uint16_t>(r1 - r0 + 1);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            f.cells.push_back(local.at({c, r}));
    return f;
}

std::vector<std::uint8_t> encode_ack(std::uint32_t seq)
{
    std::vector<std::uint8_t> out;
    put_u32(out, seq);
    return out;
}

std::uint32_t decode_ack(std::span<const std::uint8_t> payload)
{
    if (payload.size() != 4)
        throw FrameError(FrameError::Reason::Malformed, kHeaderSize, "ACK payload must be 4 bytes");
    return get_u32(payload, 0);
}

// ---------------------------------------------------------------------------

void NetworkParams::validate() const
{
    if (!(latency_ms >= 0.0) || !(jitter_ms >= 0.0))
        throw std::invalid_argument("network latency and jitter must be >= 0");
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
        throw std::invalid_argument("loss probability must be in [0, 1]");
}

SimNetwork::SimNetwork(NetworkParams params) : params_(params)
{
    params_.validate();
}

void SimNetwork::submit(double now, int destination, const Message& msg)
{
    Delivery d;
    d.sent_at = now;
    d.destination = destination;
    d.frame = encode(msg);
    capture_.push_back(to_hex(d.frame));
    ++stats_.sent;
    ++submitted_;

    auto rng = sensim::stream_rng({kNetworkStream, params_.seed, msg.sender_id,
                                   static_cast<std::uint64_t>(msg.kind), msg.seq,
                                   static_cast<std::uint64_t>(static_cast<std::int64_t>(destination))});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double fate = unit(rng);
    const double jitter = unit(rng) * 2.0 - 1.0;
    if (params_.loss_probability > 0.0 && (params_.loss_probability >= 1.0 || fate < params_.loss_probability)) {
        ++stats_.dropped;
        return;
    }
    const double latency_ms = std::max(0.0, params_.latency_ms + jitter * params_.jitter_ms);
    d.deliver_at = now + latency_ms / 1000.0;
    pending_.push_back({std::move(d), msg.seq, submitted_});
}

std::optional<double> SimNetwork::next_delivery() const
{
    if (pending_.empty())
        return std::nullopt;
    double t = pending_.front().d.deliver_at;
    for (const auto& p : pending_)
        t = std::min(t, p.d.deliver_at);
    return t;
}

std::vector<Delivery> SimNetwork::deliver_until(double now)
{
    auto due = std::stable_partition(pending_.begin(), pending_.end(),
                                     [now](const Pending& p) { return p.d.deliver_at > now; });
    std::vector<Pending> ready(std::make_move_iterator(due), std::make_move_iterator(pending_.end()));
    pending_.erase(due, pending_.end());
    std::sort(ready.begin(), ready.end(), [](const Pending& a, const Pending& b) {
        return std::tie(a.d.deliver_at, a.seq, a.order) < std::tie(b.d.deliver_at, b.seq, b.order);
    });
    std::vector<Delivery> out;
    out.reserve(ready.size());
    for (auto& p : ready)
        out.push_back(std::move(p.d));
    stats_.delivered += out.size();
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(kDigits[b >> 4]);
        s.push_back(kDigits[b & 0xf]);
    }
    return s;
}

// ---------------------------------------------------------------------------

ClientState client_apply(ClientState cs, const Message& msg)
{
    switch (msg.kind) {
    case Kind::SensorUpload:
        throw WrongDirection("SENSOR_UPLOAD is client-to-server only");
    case Kind::MapUpdate:
        if (cs.last_applied_seq && msg.seq <= *cs.last_applied_seq) {
            ++cs.stale;
            return cs;
        }
        cs.map = decode_map_update(msg.payload, cs.map.cell_size());
        cs.last_applied_seq = msg.seq;
        cs.applied.push_back(msg.seq);
        return cs;
    case Kind::RobotPose: {
        if (cs.last_pose_seq && msg.seq <= *cs.last_pose_seq) {
            ++cs.stale;
            return cs;
        }
        const RobotPose p = decode_robot_pose(msg.payload);
        cs.poses[p.robot_id] = p;
        cs.last_pose_seq = msg.seq;
        return cs;
    }
    case Kind::Ack:
        cs.acked.insert(decode_ack(msg.payload));
        return cs;
    case Kind::Hello:
        return cs;
    }
    return cs;
}

UploadIngest::UploadIngest(int width, int height, double cell_size, std::uint16_t server_id)
    : width_(width), height_(height), cell_size_(cell_size), server_id_(server_id)
{
}

IngestResult UploadIngest::ingest(const Message& upload)
{
    IngestResult r;
    if (upload.kind != Kind::SensorUpload) {
        r.fault = std::string("unexpected ") + to_string(upload.kind) + " from robot " +
                  std::to_string(upload.sender_id);
        return r;
    }
    GridMap local;
    try {
        local = fragment_to_map(decode_fragment(upload.payload), width_, height_, cell_size_);
    } catch (const std::exception& e) {
        r.fault = "malformed upload from robot " + std::to_string(upload.sender_id) + ": " + e.what();
        return r;
    }
    r.ack = Message{Kind::Ack, next_ack_seq_++, server_id_, encode_ack(upload.seq)};
    if (!seen_.insert({upload.sender_id, upload.seq}).second) {
        r.duplicate = true;
        return r;
    }
    r.merge = std::move(local);
    return r;
}

}  // namespace ubimap::netsim
