#include "uivnav/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

std::string segment_source_name(SegmentSource s)
{
  switch (s) {
    case SegmentSource::Bridge: return "bridge";
    case SegmentSource::Lane: return "lane";
    case SegmentSource::Transit: return "transit";
  }
  return "transit";
}

SegmentSource parse_segment_source(const std::string & s)
{
  if (s == "bridge") {
    return SegmentSource::Bridge;
  }
  if (s == "lane") {
    return SegmentSource::Lane;
  }
  if (s == "transit") {
    return SegmentSource::Transit;
  }
  throw ParseError("path: unknown segment source '" + s + "'");
}

double PlannedPath::length() const
{
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += std::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
  }
  return total;
}

std::string path_to_jsonl(const PlannedPath & path)
{
  std::ostringstream out;
  for (const auto & p : path.points) {
    json line = {{"x", p.x}, {"y", p.y}, {"z", path.altitude},
      {"source", segment_source_name(p.source)}};
    out << line.dump() << '\n';
  }
  return out.str();
}

PlannedPath path_from_jsonl(const std::string & text)
{
  PlannedPath path;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &) {
      throw ParseError("path line " + std::to_string(n) + ": malformed JSON");
    }
    JsonFields f(j, "path line " + std::to_string(n));
    Waypoint w;
    w.x = f.require<double>("x");
    w.y = f.require<double>("y");
    const double z = f.require<double>("z");
    w.source = parse_segment_source(f.require<std::string>("source"));
    f.finish();
    if (path.points.empty()) {
      path.altitude = z;
    } else if (z != path.altitude) {
      throw ParseError("path line " + std::to_string(n) + ": altitude differs from the first line");
    }
    path.points.push_back(w);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Grid helpers

BlockedGrid blocked_grid(const WorldMap & map, double clearance)
{
  if (!(clearance >= 0.0)) {
    throw ParameterError("planner: clearance must be >= 0");
  }
  BlockedGrid g;
  g.cols = map.cols();
  g.rows = map.rows();
  g.cell_size = map.cell_size();
  g.blocked.assign(map.cell_count(), 0);
  const double c = map.cell_size();
  const int k = static_cast<int>(std::ceil(clearance / c));
  std::vector<std::pair<int, int>> offsets;
  for (int dr = -k; dr <= k; ++dr) {
    for (int dc = -k; dc <= k; ++dc) {
      const double dx = std::max(0.0, std::abs(dc) * c - c / 2);
      const double dy = std::max(0.0, std::abs(dr) * c - c / 2);
      if (std::hypot(dx, dy) <= clearance) {
        offsets.emplace_back(dc, dr);
      }
    }
  }
  for (std::size_t i = 0; i < map.cell_count(); ++i) {
    if (!map.obstacle_flat(i)) {
      continue;
    }
    const CellIndex ci = map.unflat(i);
    for (const auto & [dc, dr] : offsets) {
      if (g.in_grid(ci.col + dc, ci.row + dr)) {
        g.blocked[static_cast<std::size_t>(ci.row + dr) * g.cols + ci.col + dc] = 1;
      }
    }
  }
  return g;
}

namespace
{

bool point_free(const BlockedGrid & g, double x, double y)
{
  if (!(x >= 0.0 && y >= 0.0)) {
    return false;
  }
  const int c = static_cast<int>(x / g.cell_size);
  const int r = static_cast<int>(y / g.cell_size);
  return g.free(c, r);
}

std::pair<int, int> cell_at(const BlockedGrid & g, double x, double y)
{
  return {std::clamp(static_cast<int>(x / g.cell_size), 0, g.cols - 1),
    std::clamp(static_cast<int>(y / g.cell_size), 0, g.rows - 1)};
}

std::pair<double, double> center_of(const BlockedGrid & g, int c, int r)
{
  return {(c + 0.5) * g.cell_size, (r + 0.5) * g.cell_size};
}

// 4-connected component labels of the free cells (0 = blocked).
std::vector<int> free_components(const BlockedGrid & g)
{
  std::vector<int> label(g.blocked.size(), 0);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < label.size(); ++s) {
    if (g.blocked[s] || label[s]) {
      continue;
    }
    label[s] = ++next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int c = static_cast<int>(i % g.cols);
      const int r = static_cast<int>(i / g.cols);
      const int nb[4][2] = {{c - 1, r}, {c + 1, r}, {c, r - 1}, {c, r + 1}};
      for (const auto & n : nb) {
        if (!g.free(n[0], n[1])) {
          continue;
        }
        const std::size_t j = static_cast<std::size_t>(n[1]) * g.cols + n[0];
        if (!label[j]) {
          label[j] = next;
          stack.push_back(j);
        }
      }
    }
  }
  return label;
}

// Appends p unless it repeats the last point.
void push_point(PlannedPath & path, double x, double y, SegmentSource src)
{
  if (!path.points.empty() && path.points.back().x == x && path.points.back().y == y) {
    return;
  }
  path.points.push_back({x, y, src});
}

// Shortcuts a cell-center chain with line-of-sight checks.
std::vector<std::pair<double, double>> string_pull(
  const BlockedGrid & g, const std::vector<std::pair<double, double>> & pts)
{
  if (pts.size() <= 2) {
    return pts;
  }
  std::vector<std::pair<double, double>> out{pts.front()};
  std::size_t anchor = 0;
  while (anchor + 1 < pts.size()) {
    std::size_t best = anchor + 1;
    for (std::size_t j = anchor + 2; j < pts.size(); ++j) {
      if (segment_free(g, pts[anchor].first, pts[anchor].second, pts[j].first, pts[j].second)) {
        best = j;
      }
    }
    out.push_back(pts[best]);
    anchor = best;
  }
  return out;
}

// Appends a transit from the path's last point to (x, y); throws when no
// obstacle-free route exists.
void append_transit(PlannedPath & path, const BlockedGrid & g, double x, double y)
{
  const Waypoint from = path.points.back();
  if (segment_free(g, from.x, from.y, x, y)) {
    push_point(path, x, y, SegmentSource::Transit);
    return;
  }
  const auto cells = grid_path(g, cell_at(g, from.x, from.y), cell_at(g, x, y));
  if (cells.empty()) {
    throw PlanningError(
      "planner: no obstacle-free route from (" + std::to_string(from.x) + ", " +
      std::to_string(from.y) + ") to (" + std::to_string(x) + ", " + std::to_string(y) + ")");
  }
  std::vector<std::pair<double, double>> pts{{from.x, from.y}};
  for (std::size_t i = 1; i + 1 < cells.size(); ++i) {
    pts.push_back(center_of(g, cells[i].first, cells[i].second));
  }
  pts.emplace_back(x, y);
  const auto pulled = string_pull(g, pts);
  for (std::size_t i = 1; i < pulled.size(); ++i) {
    push_point(path, pulled[i].first, pulled[i].second, SegmentSource::Transit);
  }
}

}  // namespace

bool segment_free(const BlockedGrid & g, double x0, double y0, double x1, double y1)
{
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int n = std::max(1, static_cast<int>(std::ceil(len / (g.cell_size / 4))));
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    if (!point_free(g, x0 + t * (x1 - x0), y0 + t * (y1 - y0))) {
      return false;
    }
  }
  return true;
}

std::vector<std::pair<int, int>> grid_path(
  const BlockedGrid & g, std::pair<int, int> start, std::pair<int, int> goal)
{
  if (!g.free(start.first, start.second) || !g.free(goal.first, goal.second)) {
    return {};
  }
  const std::size_t n = g.blocked.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  auto idx = [&g](int c, int r) {return static_cast<std::size_t>(r) * g.cols + c;};
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = idx(start.first, start.second);
  const std::size_t t = idx(goal.first, goal.second);
  dist[s] = 0.0;
  open.push({0.0, s});
  constexpr double kDiag = std::numbers::sqrt2;
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) {
      continue;
    }
    if (i == t) {
      break;
    }
    const int c = static_cast<int>(i % g.cols);
    const int r = static_cast<int>(i / g.cols);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if ((dc == 0 && dr == 0) || !g.free(c + dc, r + dr)) {
          continue;
        }
        if (dc != 0 && dr != 0 && (!g.free(c + dc, r) || !g.free(c, r + dr))) {
          continue;  // no corner cutting
        }
        const std::size_t j = idx(c + dc, r + dr);
        const double nd = d + ((dc != 0 && dr != 0) ? kDiag : 1.0);
        if (nd < dist[j]) {
          dist[j] = nd;
          parent[j] = static_cast<std::int64_t>(i);
          open.push({nd, j});
        }
      }
    }
  }
  if (!std::isfinite(dist[t])) {
    return {};
  }
  std::vector<std::pair<int, int>> out;
  for (std::int64_t i = static_cast<std::int64_t>(t); i >= 0; i = parent[i]) {
    out.emplace_back(static_cast<int>(i % g.cols), static_cast<int>(i / g.cols));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Brownian Bridge

void BridgeConfig::validate() const
{
  if (total_steps < 1) {
    throw ParameterError("bridge: total_steps must be >= 1");
  }
  if (waypoint_count < 1) {
    throw ParameterError("bridge: waypoint_count must be >= 1");
  }
  if (!(sigma >= 0.0)) {
    throw ParameterError("bridge: sigma must be >= 0");
  }
  if (!(clearance >= 0.0)) {
    throw ParameterError("bridge: clearance must be >= 0");
  }
  if (!(altitude > 0.0)) {
    throw ParameterError("bridge: altitude must be positive");
  }
}

json to_json(const BridgeConfig & c)
{
  return {{"total_steps", c.total_steps}, {"waypoint_count", c.waypoint_count},
    {"sigma", c.sigma}, {"clearance", c.clearance}, {"altitude", c.altitude}};
}

BridgeConfig bridge_config_from_json(const json & j, BridgeConfig c)
{
  JsonFields f(j, "planner.bridge");
  f.optional("total_steps", c.total_steps);
  f.optional("waypoint_count", c.waypoint_count);
  f.optional("sigma", c.sigma);
  f.optional("clearance", c.clearance);
  f.optional("altitude", c.altitude);
  f.finish();
  c.validate();
  return c;
}

std::vector<std::pair<double, double>> sample_bridge(
  double ax, double ay, double bx, double by, int T, double sigma, Rng & rng)
{
  if (T < 1) {
    throw ParameterError("sample_bridge: T must be >= 1");
  }
  std::vector<double> wx(T + 1, 0.0), wy(T + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    wx[t] = wx[t - 1] + rng.normal();
    wy[t] = wy[t - 1] + rng.normal();
  }
  std::vector<std::pair<double, double>> out(T + 1);
  for (int t = 0; t <= T; ++t) {
    const double s = static_cast<double>(t) / T;
    out[t] = {ax + s * (bx - ax) + sigma * (wx[t] - s * wx[T]),
      ay + s * (by - ay) + sigma * (wy[t] - s * wy[T])};
  }
  out.front() = {ax, ay};
  out.back() = {bx, by};
  return out;
}

PlannedPath brownian_bridge_walk(
  const WorldMap & map, double start_x, double start_y, const BridgeConfig & config,
  std::uint64_t seed)
{
  config.validate();
  const BlockedGrid g = blocked_grid(map, config.clearance);
  const auto labels = free_components(g);
  const auto [sc, sr] = cell_at(g, start_x, start_y);
  const int start_label = labels[static_cast<std::size_t>(sr) * g.cols + sc];
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && (start_label == 0 || labels[i] == start_label)) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) {
    throw PlanningError("bridge: no free cell to sample endpoints from");
  }

  Rng rng(seed);
  PlannedPath path;
  path.altitude = config.altitude;
  path.points.push_back({start_x, start_y, SegmentSource::Bridge});
  const double w = map.width_m();
  const double h = map.height_m();
  const double eps = 1e-9 * std::max(w, h);
  auto valid = [&](double px, double py, double qx, double qy) {
      return point_free(g, qx, qy) && segment_free(g, px, py, qx, qy);
    };
  auto reflect = [&](double px, double py, double & qx, double & qy) {
      if (qx < 0.0 || qx >= w || qy < 0.0 || qy >= h) {
        if (qx < 0.0) {qx = -qx;}
        if (qx >= w) {qx = std::max(0.0, 2 * w - qx - eps);}
        if (qy < 0.0) {qy = -qy;}
        if (qy >= h) {qy = std::max(0.0, 2 * h - qy - eps);}
      } else {
        qx = 2 * px - qx;  // bounce the step back off the obstacle
        qy = 2 * py - qy;
      }
    };

  const int n = config.waypoint_count;
  for (int k = 0; k < n; ++k) {
    const int T = std::max(1, config.total_steps / n + (k < config.total_steps % n ? 1 : 0));
    const std::size_t cell = candidates[rng.below(candidates.size())];
    const auto [bx, by] = center_of(g, static_cast<int>(cell % g.cols),
      static_cast<int>(cell / g.cols));
    const double ax = path.points.back().x;
    const double ay = path.points.back().y;

    std::vector<double> wx(T + 1, 0.0), wy(T + 1, 0.0);
    auto regenerate = [&](int from) {
        for (int t = from; t <= T; ++t) {
          wx[t] = wx[t - 1] + rng.normal();
          wy[t] = wy[t - 1] + rng.normal();
        }
      };
    regenerate(1);
    auto bridge = [&](int t) {
        const double s = static_cast<double>(t) / T;
        return std::pair<double, double>{
          ax + s * (bx - ax) + config.sigma * (wx[t] - s * wx[T]),
          ay + s * (by - ay) + config.sigma * (wy[t] - s * wy[T])};
      };

    for (int t = 1; t < T; ++t) {
      const double px = path.points.back().x;
      const double py = path.points.back().y;
      auto [qx, qy] = bridge(t);
      bool ok = valid(px, py, qx, qy);
      if (!ok) {
        reflect(px, py, qx, qy);
        ok = valid(px, py, qx, qy);
      }
      for (int tries = 0; !ok && tries < 100; ++tries) {
        regenerate(t);
        std::tie(qx, qy) = bridge(t);
        ok = valid(px, py, qx, qy);
      }
      if (ok) {
        push_point(path, qx, qy, SegmentSource::Bridge);
      }
    }
    append_transit(path, g, bx, by);
    path.points.back().source = SegmentSource::Bridge;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Boustrophedon cell decomposition

std::size_t BcdCell::cell_count() const
{
  std::size_t n = 0;
  for (const auto & s : slices) {
    n += static_cast<std::size_t>(s.row_hi - s.row_lo + 1);
  }
  return n;
}

std::vector<BcdCell> bcd_decompose(const BlockedGrid & g)
{
  struct Interval
  {
    int lo, hi;
    std::size_t cell;
  };
  std::vector<BcdCell> cells;
  std::vector<Interval> prev;
  for (int c = 0; c < g.cols; ++c) {
    std::vector<Interval> cur;
    for (int r = 0; r < g.rows; ) {
      if (g.at(c, r)) {
        ++r;
        continue;
      }
      int e = r;
      while (e + 1 < g.rows && !g.at(c, e + 1)) {
        ++e;
      }
      cur.push_back({r, e, 0});
      r = e + 1;
    }
    auto overlaps = [](const Interval & a, const Interval & b) {
        return a.lo <= b.hi && b.lo <= a.hi;
      };
    for (auto & iv : cur) {
      int n_prev = 0;
      const Interval * match = nullptr;
      for (const auto & p : prev) {
        if (overlaps(iv, p)) {
          ++n_prev;
          match = &p;
        }
      }
      bool extend = false;
      if (n_prev == 1) {
        int n_cur = 0;
        for (const auto & other : cur) {
          n_cur += overlaps(other, *match);
        }
        extend = n_cur == 1;
      }
      if (extend) {
        iv.cell = match->cell;
      } else {
        iv.cell = cells.size();
        cells.emplace_back();
      }
      cells[iv.cell].slices.push_back({c, iv.lo, iv.hi});
    }
    prev = std::move(cur);
  }
  return cells;
}

std::vector<BcdCell> bcd_decompose(const WorldMap & map)
{
  return bcd_decompose(blocked_grid(map, 0.0));
}

PlannedPath lawnmower(
  const BcdCell & cell, double cell_size, double lane_spacing, bool from_right, bool start_top,
  double altitude)
{
  if (!(lane_spacing > 0.0)) {
    throw ParameterError("lawnmower: lane_spacing must be positive");
  }
  if (cell.slices.empty()) {
    throw ParameterError("lawnmower: empty cell");
  }
  const int c0 = cell.first_col();
  const int c1 = cell.last_col();
  const double width = (c1 - c0) * cell_size;
  const int lanes = static_cast<int>(std::floor(width / lane_spacing + 1e-9)) + 1;
  // Any slack narrower than one spacing is split evenly between the two edges.
  const double inset = (width - (lanes - 1) * lane_spacing) / 2;
  auto slice_of = [&](int col) -> const CellSlice & {return cell.slices[col - c0];};
  auto x_of = [&](int col) {return (col + 0.5) * cell_size;};
  auto y_lo = [&](int col) {return (slice_of(col).row_lo + 0.5) * cell_size;};
  auto y_hi = [&](int col) {return (slice_of(col).row_hi + 0.5) * cell_size;};

  std::vector<int> cols;
  for (int i = 0; i < lanes; ++i) {
    const double off = inset + i * lane_spacing;
    int col = c0 + static_cast<int>(std::lround(off / cell_size));
    col = std::clamp(col, c0, c1);
    if (cols.empty() || cols.back() != col) {
      cols.push_back(col);
    }
  }
  if (from_right) {
    for (int & col : cols) {
      col = c0 + c1 - col;
    }
  }

  PlannedPath path;
  path.altitude = altitude;
  bool up = !start_top;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const int col = cols[i];
    if (i > 0) {
      // Walk the boundary we are on from the previous lane to this one,
      // stepping around every change in the boundary row.
      const int prev_col = cols[i - 1];
      const bool top = !up;  // the previous lane ended at the top when this one goes down
      const int dir = col > prev_col ? 1 : -1;
      for (int c = prev_col + dir; c != col + dir; c += dir) {
        const double y_prev = top ? y_hi(c - dir) : y_lo(c - dir);
        const double y_here = top ? y_hi(c) : y_lo(c);
        if (y_prev != y_here) {
          const double y_cross = top ? std::min(y_prev, y_here) : std::max(y_prev, y_here);
          push_point(path, x_of(c - dir), y_cross, SegmentSource::Lane);
          push_point(path, x_of(c), y_cross, SegmentSource::Lane);
        }
      }
    }
    const double a = up ? y_lo(col) : y_hi(col);
    const double b = up ? y_hi(col) : y_lo(col);
    push_point(path, x_of(col), a, SegmentSource::Lane);
    push_point(path, x_of(col), b, SegmentSource::Lane);
    up = !up;
  }
  return path;
}

void BcdConfig::validate() const
{
  if (!(lane_spacing >= 0.0)) {
    throw ParameterError("bcd: lane_spacing must be >= 0 (0 selects the footprint width)");
  }
  if (!(clearance >= 0.0)) {
    throw ParameterError("bcd: clearance must be >= 0");
  }
  if (!(altitude > 0.0)) {
    throw ParameterError("bcd: altitude must be positive");
  }
}

json to_json(const BcdConfig & c)
{
  return {{"lane_spacing", c.lane_spacing}, {"clearance", c.clearance},
    {"altitude", c.altitude}};
}

BcdConfig bcd_config_from_json(const json & j, BcdConfig c)
{
  JsonFields f(j, "planner.bcd");
  f.optional("lane_spacing", c.lane_spacing);
  f.optional("clearance", c.clearance);
  f.optional("altitude", c.altitude);
  f.finish();
  c.validate();
  return c;
}

double footprint_width(const CameraModel & cam, double altitude)
{
  const double depression = deg2rad(-cam.boresight_tilt);
  if (!(depression > 0.0) || !(altitude > 0.0)) {
    return 0.0;
  }
  const double s = altitude / std::sin(depression);
  if (s >= cam.max_range) {
    return 0.0;
  }
  const double range_limit = std::sqrt((cam.max_range / s) * (cam.max_range / s) - 1.0);
  return 2.0 * s * std::min(std::tan(deg2rad(cam.hfov / 2)), range_limit);
}

double default_lane_spacing(const CameraModel & cam, double altitude)
{
  const double w = footprint_width(cam, altitude);
  if (!(w > 0.0)) {
    throw PlanningError("bcd: camera sees no ground at the survey altitude");
  }
  return w;
}

PlannedPath bcd_plan(
  const WorldMap & map, double start_x, double start_y, const BcdConfig & config,
  const CameraModel & cam)
{
  config.validate();
  const double spacing = config.lane_spacing > 0.0 ?
    config.lane_spacing : default_lane_spacing(cam, config.altitude);
  const BlockedGrid g = blocked_grid(map, config.clearance);
  const auto cells = bcd_decompose(g);
  if (cells.empty()) {
    throw PlanningError("bcd: no free space");
  }
  const auto labels = free_components(g);
  const auto [sc, sr] = cell_at(g, start_x, start_y);
  const int start_label = labels[static_cast<std::size_t>(sr) * g.cols + sc];
  if (start_label == 0) {
    throw PlanningError("bcd: start position is inside an obstacle or its clearance");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto & s = cells[i].slices.front();
    if (labels[static_cast<std::size_t>(s.row_lo) * g.cols + s.col] != start_label) {
      throw PlanningError(
        "bcd: cell " + std::to_string(i) + " (columns " + std::to_string(cells[i].first_col()) +
        ".." + std::to_string(cells[i].last_col()) + ") is unreachable from the start");
    }
  }

  PlannedPath path;
  path.altitude = config.altitude;
  path.points.push_back({start_x, start_y, SegmentSource::Transit});
  std::vector<bool> done(cells.size(), false);
  for (std::size_t visited = 0; visited < cells.size(); ++visited) {
    const double cx = path.points.back().x;
    const double cy = path.points.back().y;
    double best_d = std::numeric_limits<double>::infinity();
    PlannedPath best_mow;
    std::size_t best = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (done[i]) {
        continue;
      }
      for (int variant = 0; variant < 4; ++variant) {
        PlannedPath mow = lawnmower(
          cells[i], g.cell_size, spacing, variant & 1, variant & 2, config.altitude);
        const double d = std::hypot(mow.points.front().x - cx, mow.points.front().y - cy);
        if (d < best_d) {
          best_d = d;
          best = i;
          best_mow = std::move(mow);
        }
      }
    }
    done[best] = true;
    append_transit(path, g, best_mow.points.front().x, best_mow.points.front().y);
    for (const auto & p : best_mow.points) {
      push_point(path, p.x, p.y, p.source);
    }
  }
  return path;
}

}  // namespace uivnav
