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

#include "ubimap/scenario.hpp"
#include "ubimap/textio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ubimap::world {

ParseError::ParseError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line)
{
}

namespace {

std::string_view trim(std::string_view s)
{
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && is_space(s.front()))
        s.remove_prefix(1);
    while (!s.empty() && is_space(s.back()))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t'))
            ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t')
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(std::string_view text, int line, std::string_view key)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        throw ParseError(line, "expected a number for '" + std::string(key) + "', got '" + std::string(text) + "'");
    return v;
}

template <typename Int>
Int to_int(std::string_view text, int line, std::string_view key)
{
    Int v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError(line, "expected an integer for '" + std::string(key) + "', got '" + std::string(text) + "'");
    return v;
}

struct RowSpan {
    int row, col0, col1, line;
};

// "row <r> <c0>..<c1>"
RowSpan parse_row_span(const std::vector<std::string_view>& tok, int line)
{
    if (tok.size() != 3 || tok[0] != "row")
        throw ParseError(line, "expected 'row <r> <colstart>..<colend>'");
    auto dots = tok[2].find("..");
    if (dots == std::string_view::npos)
        throw ParseError(line, "expected a column range '<colstart>..<colend>'");
    RowSpan s{};
    s.row = to_int<int>(tok[1], line, "row");
    s.col0 = to_int<int>(tok[2].substr(0, dots), line, "colstart");
    s.col1 = to_int<int>(tok[2].substr(dots + 2), line, "colend");
    s.line = line;
    if (s.col0 > s.col1)
        throw ParseError(line, "column range is reversed");
    return s;
}

struct Block {
    std::string name;
    int line = 0;
    std::map<std::string, std::pair<std::string, int>> values;  // key -> (value, line)
    std::vector<RowSpan> rows;
    std::set<std::string> used;

    bool has(const std::string& k) const { return values.count(k) != 0; }

    const std::pair<std::string, int>& raw(const std::string& k)
    {
        auto it = values.find(k);
        if (it == values.end())
            throw ParseError(line, "section '" + name + "' is missing required key '" + k + "'");
        used.insert(k);
        return it->second;
    }
    double num(const std::string& k)
    {
        const auto& [v, l] = raw(k);
        return to_double(v, l, k);
    }
    double num_or(const std::string& k, double dflt) { return has(k) ? num(k) : dflt; }
    template <typename Int>
    Int integer(const std::string& k)
    {
        const auto& [v, l] = raw(k);
        return to_int<Int>(v, l, k);
    }
    template <typename Int>
    Int integer_or(const std::string& k, Int dflt)
    {
        return has(k) ? integer<Int>(k) : dflt;
    }
    void reject_unused() const
    {
        for (const auto& [k, v] : values)
            if (!used.count(k))
                throw ParseError(v.second, "unknown key '" + k + "' in section '" + name + "'");
    }
};

const std::set<std::string> kSections = {"world", "walls", "camera", "robot", "obstacle", "landmark", "sim", "plan"};
const std::set<std::string> kRowSections = {"walls", "plan"};

std::vector<Block> tokenize(std::string_view document)
{
    std::vector<Block> blocks;
    std::optional<Block> open;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= document.size()) {
        std::size_t nl = document.find('\n', pos);
        std::string_view line = document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? document.size() + 1 : nl + 1;
        ++line_no;

        for (char c : line)
            if (static_cast<unsigned char>(c) > 127)
                throw ParseError(line_no, "non-ASCII character");
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;

        auto tok = split_ws(line);
        if (tok[0] == "section") {
            if (open)
                throw ParseError(line_no, "section '" + open->name + "' opened at line " +
                                              std::to_string(open->line) + " is not closed");
            if (tok.size() != 2)
                throw ParseError(line_no, "expected 'section <name>'");
            std::string name(tok[1]);
            if (!kSections.count(name))
                throw ParseError(line_no, "unknown section '" + name + "'");
            open = Block{};
            open->name = name;
            open->line = line_no;
            continue;
        }
        if (tok[0] == "end") {
            if (!open)
                throw ParseError(line_no, "'end' without an open section");
            if (tok.size() != 1)
                throw ParseError(line_no, "unexpected text after 'end'");
            blocks.push_back(std::move(*open));
            open.reset();
            continue;
        }
        if (!open)
            throw ParseError(line_no, "content outside of a section");
        if (tok[0] == "row" && kRowSections.count(open->name)) {
            open->rows.push_back(parse_row_span(tok, line_no));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(line_no, "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty() || split_ws(key).size() != 1 || split_ws(value).size() != 1)
            throw ParseError(line_no, "expected 'key = value'");
        if (open->values.count(key))
            throw ParseError(line_no, "duplicate key '" + key + "'");
        open->values.emplace(key, std::make_pair(value, line_no));
    }
    if (open)
        throw ParseError(line_no, "section '" + open->name + "' opened at line " + std::to_string(open->line) +
                                      " is not closed");
    return blocks;
}

CameraSpec camera_from(Block& b, const std::string& prefix)
{
    CameraSpec c;
    c.height = b.num(prefix + "h");
    c.hfov = geom::deg_to_rad(b.num(prefix + "hfov_deg"));
    c.vfov = geom::deg_to_rad(b.num(prefix + "vfov_deg"));
    c.max_range = b.num(prefix + "range");
    return c;
}

// Degrees text whose conversion gives back exactly `rad`.
std::string degrees_text(double rad)
{
    double deg = geom::rad_to_deg(rad);
    if (geom::deg_to_rad(deg) == rad)
        return format_shortest(deg);
    double down = deg, up = deg;
    for (int i = 0; i < 8; ++i) {
        down = std::nextafter(down, -INFINITY);
        up = std::nextafter(up, INFINITY);
        if (geom::deg_to_rad(down) == rad)
            return format_shortest(down);
        if (geom::deg_to_rad(up) == rad)
            return format_shortest(up);
    }
    return format_shortest(deg);
}

void check_free_point(const GridWorld& w, const Point2& p, int line, const std::string& what)
{
    auto cell = w.cell_at(p);
    if (!cell)
        throw ParseError(line, what + " lies outside the world bounds");
    if (w.is_wall(*cell))
        throw ParseError(line, what + " lies on a wall cell");
}

}  // namespace

Scenario parse_scenario(std::string_view document)
{
    auto blocks = tokenize(document);

    Scenario sc;
    auto world_it = std::find_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.name == "world"; });
    if (world_it == blocks.end())
        throw ParseError(0, "missing 'world' section");
    if (std::count_if(blocks.begin(), blocks.end(), [](const Block& b) { return b.name == "world"; }) > 1)
        throw ParseError(world_it->line, "more than one 'world' section");
    {
        Block& b = *world_it;
        double cs = b.num("cell_size");
        int w = b.integer<int>("width");
        int h = b.integer<int>("height");
        b.reject_unused();
        if (!(cs > 0.0) || w <= 0 || h <= 0)
            throw ParseError(b.line, "world cell_size, width and height must be positive");
        sc.world = GridWorld(cs, w, h);
    }
    GridWorld& w = sc.world;

    // Walls before entities so entity placement can be validated.
    for (Block& b : blocks) {
        if (b.name != "walls")
            continue;
        b.reject_unused();
        for (const auto& span : b.rows) {
            if (span.row < 0 || span.row >= w.height() || span.col0 < 0 || span.col1 >= w.width())
                throw ParseError(span.line, "wall span outside the world");
            for (int c = span.col0; c <= span.col1; ++c)
                w.set_terrain({c, span.row}, Terrain::Wall);
        }
    }

    std::set<int> camera_ids, robot_ids, robot_tags, obstacle_ids, landmark_ids;
    bool seen_sim = false;
    for (Block& b : blocks) {
        if (b.name == "camera") {
            CameraSpec c = camera_from(b, "");
            c.id = b.integer<int>("id");
            c.x = b.num("x");
            c.y = b.num("y");
            c.yaw = geom::deg_to_rad(b.num("yaw_deg"));
            b.reject_unused();
            if (!camera_ids.insert(c.id).second)
                throw ParseError(b.line, "duplicate camera id " + std::to_string(c.id));
            if (!c.valid())
                throw ParseError(b.line, "camera " + std::to_string(c.id) +
                                             " needs h > 0, 0 < fov < 180 degrees and range > 0");
            check_free_point(w, {c.x, c.y}, b.line, "camera " + std::to_string(c.id));
            sc.cameras.push_back(c);
        } else if (b.name == "robot") {
            RobotSpec r;
            r.id = b.integer<int>("id");
            r.x = b.num("x");
            r.y = b.num("y");
            r.tag = b.integer<int>("tag");
            r.heading = geom::deg_to_rad(b.num_or("heading_deg", 0.0));
            if (b.has("goal_x") || b.has("goal_y"))
                r.goal = Point2(b.num("goal_x"), b.num("goal_y"));
            r.speed = b.num_or("speed", 0.0);
            b.reject_unused();
            if (!robot_ids.insert(r.id).second)
                throw ParseError(b.line, "duplicate robot id " + std::to_string(r.id));
            if (!robot_tags.insert(r.tag).second)
                throw ParseError(b.line, "duplicate robot tag " + std::to_string(r.tag));
            if (r.speed < 0.0)
                throw ParseError(b.line, "robot speed must be non-negative");
            check_free_point(w, {r.x, r.y}, b.line, "robot " + std::to_string(r.id));
            if (r.goal)
                check_free_point(w, *r.goal, b.line, "goal of robot " + std::to_string(r.id));
            w.robots.push_back(r);
        } else if (b.name == "obstacle") {
            ObstacleSpec o;
            o.id = b.integer<int>("id");
            Point2 p(b.num("x"), b.num("y"));
            b.reject_unused();
            if (!obstacle_ids.insert(o.id).second)
                throw ParseError(b.line, "duplicate obstacle id " + std::to_string(o.id));
            check_free_point(w, p, b.line, "obstacle " + std::to_string(o.id));
            o.cell = *w.cell_at(p);
            w.obstacles.push_back(o);
        } else if (b.name == "landmark") {
            Landmark l;
            l.id = b.integer<int>("id");
            l.position = Point3(b.num("x"), b.num("y"), b.num("z"));
            b.reject_unused();
            if (!landmark_ids.insert(l.id).second)
                throw ParseError(b.line, "duplicate landmark id " + std::to_string(l.id));
            if (!w.contains({l.position.x(), l.position.y()}) || l.position.z() < 0.0)
                throw ParseError(b.line, "landmark " + std::to_string(l.id) + " lies outside the world bounds");
            w.landmarks.push_back(l);
        } else if (b.name == "sim") {
            if (seen_sim)
                throw ParseError(b.line, "more than one 'sim' section");
            seen_sim = true;
            SimParams& s = sc.sim;
            s.seed = b.integer_or<std::uint64_t>("seed", s.seed);
            s.noise_sigma = b.num_or("noise_sigma", s.noise_sigma);
            s.net_latency_ms = b.num_or("net_latency_ms", s.net_latency_ms);
            s.net_jitter_ms = b.num_or("net_jitter_ms", s.net_jitter_ms);
            s.net_loss = b.num_or("net_loss", s.net_loss);
            s.broadcast_period_ms = b.num_or("broadcast_period_ms", s.broadcast_period_ms);
            s.upload_period_ms = b.num_or("upload_period_ms", s.upload_period_ms);
            s.sense_range = b.num_or("sense_range", s.sense_range);
            s.duration = b.num_or("duration", s.duration);
            if (b.has("reference"))
                s.reference = b.integer<int>("reference");
            b.reject_unused();
            if (s.noise_sigma < 0.0 || s.net_latency_ms < 0.0 || s.net_jitter_ms < 0.0 || s.sense_range < 0.0 ||
                s.duration < 0.0)
                throw ParseError(b.line, "sim parameters must be non-negative");
            if (s.net_loss < 0.0 || s.net_loss > 1.0)
                throw ParseError(b.line, "net_loss must lie in [0, 1]");
            if (!(s.broadcast_period_ms > 0.0) || !(s.upload_period_ms > 0.0))
                throw ParseError(b.line, "periods must be positive");
        } else if (b.name == "plan") {
            if (sc.plan)
                throw ParseError(b.line, "more than one 'plan' section");
            PlanParams p;
            p.min_overlap = b.integer_or<int>("min_overlap", p.min_overlap);
            p.max_overlap = b.integer_or<int>("max_overlap", p.max_overlap);
            p.budget = b.integer_or<int>("budget", p.budget);
            p.lattice_step = b.num_or("lattice_step", 0.0);
            if (p.lattice_step > 0.0) {
                p.lattice_prototype = camera_from(b, "lattice_");
                if (!p.lattice_prototype.valid())
                    throw ParseError(b.line, "lattice camera needs h > 0, 0 < fov < 180 degrees and range > 0");
            }
            b.reject_unused();
            if (p.min_overlap < 0 || p.max_overlap < 1 || p.min_overlap > p.max_overlap || p.budget < 1)
                throw ParseError(b.line, "plan needs 0 <= min_overlap <= max_overlap, max_overlap >= 1, budget >= 1");
            std::set<CellIndex> targets;
            for (const auto& span : b.rows) {
                if (span.row < 0 || span.row >= w.height() || span.col0 < 0 || span.col1 >= w.width())
                    throw ParseError(span.line, "target span outside the world");
                for (int c = span.col0; c <= span.col1; ++c)
                    targets.insert({c, span.row});
            }
            p.targets.assign(targets.begin(), targets.end());
            sc.plan = p;
        }
    }
    if (sc.sim.reference && !camera_ids.count(*sc.sim.reference))
        throw ParseError(0, "reference camera " + std::to_string(*sc.sim.reference) + " does not exist");
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError(0, "cannot read scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& sc)
{
    std::ostringstream o;
    const GridWorld& w = sc.world;
    auto num = [](double v) { return format_shortest(v); };

    o << "section world\n"
      << "  cell_size = " << num(w.cell_size()) << "\n"
      << "  width = " << w.width() << "\n"
      << "  height = " << w.height() << "\n"
      << "end\n";

    bool any_wall = false;
    std::ostringstream walls;
    for (int r = 0; r < w.height(); ++r) {
        int c = 0;
        while (c < w.width()) {
            if (!w.is_wall({c, r})) {
                ++c;
                continue;
            }
            int start = c;
            while (c < w.width() && w.is_wall({c, r}))
                ++c;
            walls << "  row " << r << " " << start << ".." << (c - 1) << "\n";
            any_wall = true;
        }
    }
    if (any_wall)
        o << "section walls\n" << walls.str() << "end\n";

    for (const auto& c : sc.cameras) {
        o << "section camera\n"
          << "  id = " << c.id << "\n"
          << "  x = " << num(c.x) << "\n"
          << "  y = " << num(c.y) << "\n"
          << "  h = " << num(c.height) << "\n"
          << "  yaw_deg = " << degrees_text(c.yaw) << "\n"
          << "  hfov_deg = " << degrees_text(c.hfov) << "\n"
          << "  vfov_deg = " << degrees_text(c.vfov) << "\n"
          << "  range = " << num(c.max_range) << "\n"
          << "end\n";
    }
    for (const auto& r : w.robots) {
        o << "section robot\n"
          << "  id = " << r.id << "\n"
          << "  x = " << num(r.x) << "\n"
          << "  y = " << num(r.y) << "\n"
          << "  tag = " << r.tag << "\n";
        if (r.heading != 0.0)
            o << "  heading_deg = " << degrees_text(r.heading) << "\n";
        if (r.goal)
            o << "  goal_x = " << num(r.goal->x()) << "\n"
              << "  goal_y = " << num(r.goal->y()) << "\n";
        if (r.speed != 0.0)
            o << "  speed = " << num(r.speed) << "\n";
        o << "end\n";
    }
    for (const auto& ob : w.obstacles) {
        Point2 p = w.cell_center(ob.cell);
        o << "section obstacle\n"
          << "  id = " << ob.id << "\n"
          << "  x = " << num(p.x()) << "\n"
          << "  y = " << num(p.y()) << "\n"
          << "end\n";
    }
    for (const auto& l : w.landmarks) {
        o << "section landmark\n"
          << "  id = " << l.id << "\n"
          << "  x = " << num(l.position.x()) << "\n"
          << "  y = " << num(l.position.y()) << "\n"
          << "  z = " << num(l.position.z()) << "\n"
          << "end\n";
    }

    const SimParams& s = sc.sim;
    o << "section sim\n"
      << "  seed = " << s.seed << "\n"
      << "  noise_sigma = " << num(s.noise_sigma) << "\n"
      << "  net_latency_ms = " << num(s.net_latency_ms) << "\n"
      << "  net_jitter_ms = " << num(s.net_jitter_ms) << "\n"
      << "  net_loss = " << num(s.net_loss) << "\n"
      << "  broadcast_period_ms = " << num(s.broadcast_period_ms) << "\n"
      << "  upload_period_ms = " << num(s.upload_period_ms) << "\n"
      << "  sense_range = " << num(s.sense_range) << "\n"
      << "  duration = " << num(s.duration) << "\n";
    if (s.reference)
        o << "  reference = " << *s.reference << "\n";
    o << "end\n";

    if (sc.plan) {
        const PlanParams& p = *sc.plan;
        o << "section plan\n"
          << "  min_overlap = " << p.min_overlap << "\n"
          << "  max_overlap = " << p.max_overlap << "\n"
          << "  budget = " << p.budget << "\n";
        if (p.lattice_step > 0.0) {
            const CameraSpec& c = p.lattice_prototype;
            o << "  lattice_step = " << num(p.lattice_step) << "\n"
              << "  lattice_h = " << num(c.height) << "\n"
              << "  lattice_hfov_deg = " << degrees_text(c.hfov) << "\n"
              << "  lattice_vfov_deg = " << degrees_text(c.vfov) << "\n"
              << "  lattice_range = " << num(c.max_range) << "\n";
        }
        for (const auto& t : p.targets)
            o << "  row " << t.row << " " << t.col << ".." << t.col << "\n";
        o << "end\n";
    }
    return o.str();
}

}  // namespace ubimap::world
