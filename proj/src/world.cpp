#include "uivnav/world.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "uivnav/common.hpp"
#include "uivnav/image.hpp"
#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

RobotPose canonical_pose(RobotPose p)
{
  p.yaw = normalize_deg(p.yaw);
  p.pitch = std::clamp(p.pitch, -30.0, 30.0);
  return p;
}

namespace
{

int grid_extent(double length, double cell)
{
  // Tolerate representation error in length / cell before rounding up.
  return static_cast<int>(std::ceil(length / cell - 1e-9));
}

}  // namespace

WorldMap::WorldMap(
  double width_m, double height_m, double cell_size,
  std::vector<float> heights, std::vector<std::uint8_t> ooi,
  std::string ooi_kind, RobotPose spawn, double obstacle_threshold)
: width_m_(width_m), height_m_(height_m), cell_size_(cell_size),
  obstacle_threshold_(obstacle_threshold), cols_(0), rows_(0),
  heights_(std::move(heights)), ooi_(std::move(ooi)),
  ooi_kind_(std::move(ooi_kind)), spawn_(spawn)
{
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
    throw ParameterError("world: cell_size must be positive");
  }
  if (!(width_m_ > 0.0) || !(height_m_ > 0.0) ||
    !std::isfinite(width_m_) || !std::isfinite(height_m_))
  {
    throw ParameterError("world: width_m and height_m must be positive");
  }
  if (!(obstacle_threshold_ > 0.0)) {
    throw ParameterError("world: obstacle_threshold must be positive");
  }
  cols_ = grid_extent(width_m_, cell_size_);
  rows_ = grid_extent(height_m_, cell_size_);
  const std::size_t n = static_cast<std::size_t>(cols_) * rows_;
  if (heights_.size() != n) {
    throw DimensionError("world: height_grid size does not match ceil(width/cell) x ceil(height/cell)");
  }
  if (ooi_.size() != n) {
    throw DimensionError("world: ooi_grid size does not match height_grid");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const float h = heights_[i];
    if (!std::isfinite(h) || h < 0.0f) {
      throw ParameterError("world: height_grid has a negative or non-finite entry");
    }
    if (ooi_[i] > 1) {
      throw ParameterError("world: ooi_grid entries must be 0 or 1");
    }
    if (ooi_[i] && obstacle_flat(i)) {
      throw ParameterError("world: ooi flag set on an obstacle cell");
    }
  }
  spawn_ = canonical_pose(spawn_);
  if (!bounds().contains(spawn_.x, spawn_.y)) {
    throw ParameterError("world: spawn_pose outside bounds");
  }
}

CellIndex WorldMap::cell_of(double x, double y) const
{
  auto c = try_cell_of(x, y);
  if (!c) {
    throw OutOfBoundsError("query outside world bounds");
  }
  return *c;
}

std::optional<CellIndex> WorldMap::try_cell_of(double x, double y) const
{
  if (!bounds().contains(x, y)) {
    return std::nullopt;
  }
  const int col = std::min(static_cast<int>(x / cell_size_), cols_ - 1);
  const int row = std::min(static_cast<int>(y / cell_size_), rows_ - 1);
  return CellIndex{col, row};
}

std::size_t WorldMap::ooi_count() const
{
  return static_cast<std::size_t>(std::count(ooi_.begin(), ooi_.end(), std::uint8_t{1}));
}

std::size_t WorldMap::obstacle_count() const
{
  std::size_t n = 0;
  for (std::size_t i = 0; i < heights_.size(); ++i) {
    n += obstacle_flat(i) ? 1 : 0;
  }
  return n;
}

std::string WorldMap::digest() const
{
  std::uint64_t h = fnv1a(heights_.data(), heights_.size() * sizeof(float));
  h = fnv1a(ooi_.data(), ooi_.size(), h);
  const double dims[4] = {width_m_, height_m_, cell_size_, obstacle_threshold_};
  h = fnv1a(dims, sizeof(dims), h);
  return hex64(h);
}

bool WorldMap::operator==(const WorldMap & o) const
{
  return width_m_ == o.width_m_ && height_m_ == o.height_m_ &&
         cell_size_ == o.cell_size_ && obstacle_threshold_ == o.obstacle_threshold_ &&
         heights_ == o.heights_ && ooi_ == o.ooi_ && ooi_kind_ == o.ooi_kind_ &&
         spawn_ == o.spawn_;
}

CellQuery query_cell(const WorldMap & map, double x, double y)
{
  const CellIndex c = map.cell_of(x, y);
  return {map.height_at(c.col, c.row), map.ooi_at(c.col, c.row)};
}

// ---------------------------------------------------------------------------
// Scenarios

namespace
{

struct NamedScenario
{
  ScenarioId id;
  std::string_view name;
};

constexpr std::array<NamedScenario, 5> kScenarioNames{{
  {ScenarioId::GridWorld, "gridworld"},
  {ScenarioId::EShape, "eshape"},
  {ScenarioId::DisconnectedPaths, "disconnected_paths"},
  {ScenarioId::BranchingCorridor, "branching_corridor"},
  {ScenarioId::RockReef, "rock_reef"},
}};

}  // namespace

std::string_view scenario_name(ScenarioId id)
{
  for (const auto & s : kScenarioNames) {
    if (s.id == id) {
      return s.name;
    }
  }
  return "unknown";
}

std::optional<ScenarioId> parse_scenario(std::string_view name)
{
  std::string key;
  for (char c : name) {
    if (c == '-') {
      c = '_';
    }
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (const auto & s : kScenarioNames) {
    if (s.name == key) {
      return s.id;
    }
  }
  if (key == "grid_world") {return ScenarioId::GridWorld;}
  if (key == "e_shape") {return ScenarioId::EShape;}
  if (key == "disconnected") {return ScenarioId::DisconnectedPaths;}
  if (key == "branching") {return ScenarioId::BranchingCorridor;}
  if (key == "rockreef" || key == "rock") {return ScenarioId::RockReef;}
  return std::nullopt;
}

std::vector<ScenarioId> oyster_scenarios()
{
  return {ScenarioId::GridWorld, ScenarioId::EShape, ScenarioId::DisconnectedPaths,
    ScenarioId::BranchingCorridor};
}

void ScenarioParams::validate() const
{
  auto check = [](bool ok, const char * field, const char * range) {
      if (!ok) {
        throw ParameterError(std::string("scenario: ") + field + " must be in " + range);
      }
    };
  check(width_m >= 80.0 && width_m <= 480.0, "width_m", "[80, 480]");
  check(height_m >= 60.0 && height_m <= 480.0, "height_m", "[60, 480]");
  check(cell_size >= 0.05 && cell_size <= 1.0, "cell_size", "[0.05, 1]");
  check(band_width >= 2.0 && band_width <= 15.0, "band_width", "[2, 15]");
  check(wide_width >= 4.0 && wide_width <= 20.0, "wide_width", "[4, 20]");
  check(narrow_width >= 1.0 && narrow_width <= 6.0, "narrow_width", "[1, 6]");
  check(narrow_width < wide_width, "narrow_width", "(0, wide_width)");
  check(gap >= 4.0 && gap <= 60.0, "gap", "[4, 60]");
  check(obstacle_count >= 2 && obstacle_count <= 10, "obstacle_count", "[2, 10]");
  check(obstacle_radius >= 1.0 && obstacle_radius <= 5.0, "obstacle_radius", "[1, 5]");
  check(
    obstacle_height >= obstacle_threshold && obstacle_height <= 15.0,
    "obstacle_height", "[obstacle_threshold, 15]");
  check(warp_amplitude >= 0.0 && warp_amplitude <= 2.0, "warp_amplitude", "[0, 2]");
  check(spawn_altitude >= 3.0 && spawn_altitude <= 12.0, "spawn_altitude", "[3, 12]");
  check(obstacle_threshold > 0.0, "obstacle_threshold", "(0, inf)");
}

namespace
{

struct Rect
{
  double x0, y0, x1, y1;
  bool contains(double x, double y) const {return x >= x0 && x < x1 && y >= y0 && y < y1;}
};

/// Layout on the nominal 160 x 120 canvas. Coordinates are stretched to the
/// requested map size; band widths stay absolute.
class Layout
{
public:
  Layout(const ScenarioParams & p)
  : sx_(p.width_m / 160.0), sy_(p.height_m / 120.0) {}

  // Horizontal band centered on nominal y from nominal x0 to x1.
  void hband(double y, double x0, double x1, double w)
  {
    rects_.push_back({x0 * sx_, y * sy_ - w / 2, x1 * sx_, y * sy_ + w / 2});
  }
  void vband(double x, double y0, double y1, double w)
  {
    rects_.push_back({x * sx_ - w / 2, y0 * sy_, x * sx_ + w / 2, y1 * sy_});
  }
  // Horizontal band whose ends are given in meters instead of nominal units.
  void hband_abs(double y, double x0_m, double x1_m, double w)
  {
    rects_.push_back({x0_m, y * sy_ - w / 2, x1_m, y * sy_ + w / 2});
  }

  bool contains(double x, double y) const
  {
    return std::any_of(
      rects_.begin(), rects_.end(), [&](const Rect & r) {return r.contains(x, y);});
  }

  double sx() const {return sx_;}
  double sy() const {return sy_;}

private:
  double sx_;
  double sy_;
  std::vector<Rect> rects_;
};

struct SpawnSpec
{
  double x, y, yaw;
};

SpawnSpec build_layout(ScenarioId id, const ScenarioParams & p, Rng & rng, Layout & L)
{
  const double bw = p.band_width;
  const double ww = p.wide_width;
  const double nw = p.narrow_width;
  // Small seeded shifts of lattice lines; the topology is fixed per scenario.
  auto jitter = [&rng](double amp) {return rng.uniform(-amp, amp);};

  switch (id) {
    case ScenarioId::GridWorld: {
      const double yb = 30 + jitter(3);
      const double yt = 90 + jitter(3);
      const double ym = 60 + jitter(3);
      const double xl = 30 + jitter(3);
      const double xm = 80 + jitter(3);
      const double xr = 130 + jitter(3);
      L.hband(yb, 25, 135, bw);
      L.hband(yt, 25, 135, bw);
      L.vband(xl, yb, yt, bw);
      L.vband(xm, yb, yt, bw);
      L.vband(xr, yb, yt, bw);
      // Dangling branches off the interior bars.
      L.hband(ym, xm, xm + 30, bw);
      L.hband(ym - 12, xl, xl + 22, bw);
      return {12.0, yb, 0.0};
    }
    case ScenarioId::EShape: {
      const double xc = 35 + jitter(2);
      const double ybot = 25 + jitter(2);
      const double ytop = 95 + jitter(2);
      const double ymid = 60 + jitter(3);
      L.vband(xc, ybot - ww / 2 / L.sy(), ytop + ww / 2 / L.sy(), ww);
      L.hband(ybot, xc, 130, ww);
      L.hband(ytop, xc, 130, ww);
      // Narrow middle bar starts inside the C's spine so the two touch.
      L.hband(ymid, xc, 110, nw);
      return {145.0, ybot, 180.0};
    }
    case ScenarioId::DisconnectedPaths: {
      const double cx = 80 + jitter(3);
      const double yb = 29 + jitter(2);
      const double yt = 91 + jitter(2);
      const double xa = 29 + jitter(2);
      const double xb = 131 + jitter(2);
      const double half_gap_m = p.gap / 2.0;
      // Group A: a U opening to the right; group B mirrors it.
      L.vband(xa, yb, yt, bw);
      L.hband_abs(yb, xa * L.sx() - bw / 2, cx * L.sx() - half_gap_m, bw);
      L.hband_abs(yt, xa * L.sx() - bw / 2, cx * L.sx() - half_gap_m, bw);
      L.vband(xb, yb, yt, bw);
      L.hband_abs(yb, cx * L.sx() + half_gap_m, xb * L.sx() + bw / 2, bw);
      L.hband_abs(yt, cx * L.sx() + half_gap_m, xb * L.sx() + bw / 2, bw);
      return {12.0, yb, 0.0};
    }
    case ScenarioId::BranchingCorridor: {
      const double ys = 60 + jitter(3);
      L.hband(ys, 15, 145, bw);
      // Wide branches rise from the top of the spine, narrow ones hang below.
      L.vband(45 + jitter(3), ys, 105, ww);
      L.vband(105 + jitter(3), ys, 105, ww);
      L.vband(75 + jitter(3), 15, ys, nw);
      L.vband(133 + jitter(2), 15, ys, nw);
      return {5.0, ys, 0.0};
    }
    case ScenarioId::RockReef: {
      const double xc = 35 + jitter(2);
      const double ybot = 25 + jitter(2);
      const double ytop = 95 + jitter(2);
      L.vband(xc, ybot - ww / 2 / L.sy(), ytop + ww / 2 / L.sy(), ww);
      L.hband(ybot, xc, 130, ww);
      L.hband(ytop, xc, 130, ww);
      return {145.0, ybot, 180.0};
    }
  }
  throw ParameterError("scenario: unknown scenario id");
}

}  // namespace

WorldMap generate_scenario(const ScenarioSpec & spec)
{
  const ScenarioParams & p = spec.params;
  p.validate();
  if (scenario_name(spec.id) == "unknown") {
    throw ParameterError("scenario: unknown scenario id");
  }

  Rng layout_rng(derive_seed(spec.seed, 1));
  Rng terrain_rng(derive_seed(spec.seed, 2));
  Rng obstacle_rng(derive_seed(spec.seed, 3));

  Layout layout(p);
  const SpawnSpec spawn = build_layout(spec.id, p, layout_rng, layout);

  const int cols = grid_extent(p.width_m, p.cell_size);
  const int rows = grid_extent(p.height_m, p.cell_size);
  const std::size_t n = static_cast<std::size_t>(cols) * rows;
  std::vector<float> heights(n);
  std::vector<std::uint8_t> ooi(n, 0);

  // Smooth near-identity warp (Lipschitz < 1) so patch edges wobble without
  // changing the patch topology.
  const double k = 2.0 * std::numbers::pi / 25.0;
  const double phase_x = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double phase_y = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double floor_a = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double floor_b = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double rock_a = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double rock_b = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double A = p.warp_amplitude;
  const bool rocks = spec.id == ScenarioId::RockReef;

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double x = (c + 0.5) * p.cell_size;
      const double y = (r + 0.5) * p.cell_size;
      const double wx = x + A * std::sin(k * y + phase_x);
      const double wy = y + A * std::sin(k * x + phase_y);
      const bool is_ooi = layout.contains(wx, wy);
      double h = 0.25 + 0.12 * std::sin(2.0 * std::numbers::pi * x / 31.0 + floor_a) +
        0.12 * std::sin(2.0 * std::numbers::pi * y / 23.0 + floor_b);
      if (is_ooi) {
        if (rocks) {
          const double bump = 0.5 + 0.5 * std::sin(x * 1.3 + rock_a) * std::sin(y * 1.1 + rock_b);
          h += 0.4 + 0.8 * bump;
        } else {
          h += 0.15;
        }
      }
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      heights[i] = static_cast<float>(std::max(0.0, h));
      ooi[i] = is_ooi ? 1 : 0;
    }
  }

  const double spawn_x = spawn.x * layout.sx();
  const double spawn_y = spawn.y * layout.sy();

  // Obstacles: raised discs on sand, close enough to the reef to matter but
  // clear of OOI, the spawn point and each other.
  struct Disc
  {
    double x, y, r;
  };
  std::vector<Disc> discs;
  const double margin = 15.0;
  int attempts = 0;
  while (static_cast<int>(discs.size()) < p.obstacle_count) {
    if (++attempts > 20000) {
      throw ParameterError("scenario: could not place obstacles; map too crowded");
    }
    const double r = p.obstacle_radius * obstacle_rng.uniform(0.8, 1.2);
    const double x = obstacle_rng.uniform(margin, p.width_m - margin);
    const double y = obstacle_rng.uniform(margin, p.height_m - margin);
    if (std::hypot(x - spawn_x, y - spawn_y) < 20.0) {
      continue;
    }
    bool clash = false;
    for (const auto & d : discs) {
      if (std::hypot(x - d.x, y - d.y) < d.r + r + 10.0) {
        clash = true;
        break;
      }
    }
    if (clash) {
      continue;
    }
    // Nearest OOI must lie within [r + 3, r + 12] meters.
    const double near = r + 3.0;
    const double far = r + 12.0;
    const int span = static_cast<int>(std::ceil(far / p.cell_size));
    const int cc = static_cast<int>(x / p.cell_size);
    const int rc = static_cast<int>(y / p.cell_size);
    double nearest = std::numeric_limits<double>::infinity();
    for (int dr = -span; dr <= span; ++dr) {
      for (int dc = -span; dc <= span; ++dc) {
        const int c2 = cc + dc;
        const int r2 = rc + dr;
        if (c2 < 0 || r2 < 0 || c2 >= cols || r2 >= rows) {
          continue;
        }
        if (ooi[static_cast<std::size_t>(r2) * cols + c2]) {
          const double d = std::hypot(
            (c2 + 0.5) * p.cell_size - x, (r2 + 0.5) * p.cell_size - y);
          nearest = std::min(nearest, d);
        }
      }
    }
    if (nearest < near || nearest > far) {
      continue;
    }
    discs.push_back({x, y, r});
  }

  for (const auto & d : discs) {
    const double top = p.obstacle_height + obstacle_rng.uniform(0.0, 1.0);
    const int c0 = std::max(0, static_cast<int>((d.x - d.r) / p.cell_size) - 1);
    const int c1 = std::min(cols - 1, static_cast<int>((d.x + d.r) / p.cell_size) + 1);
    const int r0 = std::max(0, static_cast<int>((d.y - d.r) / p.cell_size) - 1);
    const int r1 = std::min(rows - 1, static_cast<int>((d.y + d.r) / p.cell_size) + 1);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double cx = (c + 0.5) * p.cell_size;
        const double cy = (r + 0.5) * p.cell_size;
        if (std::hypot(cx - d.x, cy - d.y) <= d.r) {
          const std::size_t i = static_cast<std::size_t>(r) * cols + c;
          heights[i] = static_cast<float>(top);
          ooi[i] = 0;
        }
      }
    }
  }

  RobotPose spawn_pose{spawn_x, spawn_y, p.spawn_altitude, spawn.yaw, 0.0};
  return WorldMap(
    p.width_m, p.height_m, p.cell_size, std::move(heights), std::move(ooi),
    rocks ? "rock" : "oyster", spawn_pose, p.obstacle_threshold);
}

// ---------------------------------------------------------------------------
// Persistence

namespace
{

constexpr int kWorldMajorVersion = 1;
constexpr const char * kWorldVersion = "1.0";

std::string encode_heights(const std::vector<float> & h)
{
  std::vector<std::uint8_t> bytes(h.size() * 4);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(h[i]);
    bytes[4 * i + 0] = static_cast<std::uint8_t>(bits);
    bytes[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
    bytes[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
    bytes[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
  }
  return base64_encode(bytes);
}

std::string encode_bits(const std::vector<std::uint8_t> & flags)
{
  std::vector<std::uint8_t> bytes((flags.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i]) {
      bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
  }
  return base64_encode(bytes);
}

json pose_to_json(const RobotPose & p)
{
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}, {"pitch", p.pitch}};
}

RobotPose pose_from_json(const json & j, const std::string & ctx)
{
  JsonFields f(j, ctx);
  RobotPose p;
  p.x = f.require<double>("x");
  p.y = f.require<double>("y");
  p.z = f.require<double>("z");
  p.yaw = f.require<double>("yaw");
  p.pitch = f.require<double>("pitch");
  f.finish();
  return p;
}

}  // namespace

json world_to_json(const WorldMap & map)
{
  json j;
  j["version"] = kWorldVersion;
  j["width_m"] = map.width_m();
  j["height_m"] = map.height_m();
  j["cell_size"] = map.cell_size();
  j["obstacle_threshold"] = map.obstacle_threshold();
  j["ooi_kind"] = map.ooi_kind();
  j["spawn_pose"] = pose_to_json(map.spawn_pose());
  j["height_grid"] = encode_heights(map.heights());
  j["ooi_grid"] = encode_bits(map.ooi());
  return j;
}

WorldMap world_from_json(const json & doc)
{
  JsonFields f(doc, "world");
  const auto version = f.require<std::string>("version");
  const auto dot = version.find('.');
  int major = -1;
  try {
    major = std::stoi(version.substr(0, dot));
  } catch (const std::exception &) {
    throw ParseError("world: field 'version' is not of the form MAJOR.MINOR");
  }
  if (major != kWorldMajorVersion) {
    throw ParseError("world: unsupported major version in field 'version': " + version);
  }
  const double width = f.require<double>("width_m");
  const double height = f.require<double>("height_m");
  const double cell = f.require<double>("cell_size");
  double threshold = kDefaultObstacleThreshold;
  f.optional("obstacle_threshold", threshold);
  const auto kind = f.require<std::string>("ooi_kind");
  const RobotPose spawn = pose_from_json(f.sub("spawn_pose"), "world.spawn_pose");
  const auto h_text = f.require<std::string>("height_grid");
  const auto o_text = f.require<std::string>("ooi_grid");
  if (f.has("provenance")) {
    f.sub("provenance");  // informational; written by the CLI
  }
  f.finish();

  if (!(cell > 0.0) || !(width > 0.0) || !(height > 0.0)) {
    throw ParseError("world: width_m, height_m and cell_size must be positive");
  }
  const std::size_t n = static_cast<std::size_t>(grid_extent(width, cell)) *
    static_cast<std::size_t>(grid_extent(height, cell));

  std::vector<std::uint8_t> hb;
  try {
    hb = base64_decode(h_text);
  } catch (const ParseError & e) {
    throw ParseError(std::string("world: field 'height_grid': ") + e.what());
  }
  if (hb.size() != n * 4) {
    throw ParseError("world: field 'height_grid' has the wrong length");
  }
  std::vector<float> heights(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = hb[4 * i] | (hb[4 * i + 1] << 8) | (hb[4 * i + 2] << 16) |
      (static_cast<std::uint32_t>(hb[4 * i + 3]) << 24);
    heights[i] = std::bit_cast<float>(bits);
  }

  std::vector<std::uint8_t> ob;
  try {
    ob = base64_decode(o_text);
  } catch (const ParseError & e) {
    throw ParseError(std::string("world: field 'ooi_grid': ") + e.what());
  }
  if (ob.size() != (n + 7) / 8) {
    throw ParseError("world: field 'ooi_grid' has the wrong length");
  }
  std::vector<std::uint8_t> ooi(n);
  for (std::size_t i = 0; i < n; ++i) {
    ooi[i] = (ob[i / 8] >> (i % 8)) & 1u;
  }

  try {
    return WorldMap(width, height, cell, std::move(heights), std::move(ooi), kind, spawn, threshold);
  } catch (const ParseError &) {
    throw;
  } catch (const Error & e) {
    throw ParseError(e.what());
  }
}

void save_world(const WorldMap & map, const std::string & path)
{
  write_file(path, world_to_json(map).dump() + "\n");
}

WorldMap load_world(const std::string & path)
{
  const std::string text = read_file_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ParseError(std::string("world: malformed JSON: ") + e.what());
  }
  return world_from_json(doc);
}

json to_json(const ScenarioParams & p)
{
  return {
    {"width_m", p.width_m}, {"height_m", p.height_m}, {"cell_size", p.cell_size},
    {"band_width", p.band_width}, {"wide_width", p.wide_width},
    {"narrow_width", p.narrow_width}, {"gap", p.gap},
    {"obstacle_count", p.obstacle_count}, {"obstacle_radius", p.obstacle_radius},
    {"obstacle_height", p.obstacle_height}, {"warp_amplitude", p.warp_amplitude},
    {"spawn_altitude", p.spawn_altitude}, {"obstacle_threshold", p.obstacle_threshold},
  };
}

ScenarioParams scenario_params_from_json(const json & j, ScenarioParams p)
{
  JsonFields f(j, "world");
  f.optional("width_m", p.width_m);
  f.optional("height_m", p.height_m);
  f.optional("cell_size", p.cell_size);
  f.optional("band_width", p.band_width);
  f.optional("wide_width", p.wide_width);
  f.optional("narrow_width", p.narrow_width);
  f.optional("gap", p.gap);
  f.optional("obstacle_count", p.obstacle_count);
  f.optional("obstacle_radius", p.obstacle_radius);
  f.optional("obstacle_height", p.obstacle_height);
  f.optional("warp_amplitude", p.warp_amplitude);
  f.optional("spawn_altitude", p.spawn_altitude);
  f.optional("obstacle_threshold", p.obstacle_threshold);
  f.finish();
  return p;
}

}  // namespace uivnav
