#ifndef UIVNAV__BASELINES_HPP_
#define UIVNAV__BASELINES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/common.hpp"
#include "uivnav/sensor.hpp"
#include "uivnav/world.hpp"

namespace uivnav
{

enum class SegmentSource
{
  Bridge,
  Lane,
  Transit,
};

std::string segment_source_name(SegmentSource s);
SegmentSource parse_segment_source(const std::string & s);

/// `source` tags the segment that ends at this waypoint; the first waypoint
/// carries the tag of the segment leaving it.
struct Waypoint
{
  double x = 0.0;
  double y = 0.0;
  SegmentSource source = SegmentSource::Transit;

  bool operator==(const Waypoint &) const = default;
};

struct PlannedPath
{
  double altitude = 7.0;
  std::vector<Waypoint> points;

  double length() const;
  bool operator==(const PlannedPath &) const = default;
};

/// One JSON object per line: {"x", "y", "z", "source"}.
std::string path_to_jsonl(const PlannedPath & path);
PlannedPath path_from_jsonl(const std::string & text);

/// Cells a planner must avoid: obstacles dilated by `clearance` meters
/// (cells whose center lies within clearance of an obstacle cell's square).
struct BlockedGrid
{
  int cols = 0;
  int rows = 0;
  double cell_size = 1.0;
  std::vector<std::uint8_t> blocked;

  bool in_grid(int c, int r) const {return c >= 0 && r >= 0 && c < cols && r < rows;}
  bool at(int c, int r) const {return blocked[static_cast<std::size_t>(r) * cols + c] != 0;}
  bool free(int c, int r) const {return in_grid(c, r) && !at(c, r);}
};

BlockedGrid blocked_grid(const WorldMap & map, double clearance = 0.0);
/// True when the segment stays on free cells (sampled at quarter-cell spacing).
bool segment_free(const BlockedGrid & grid, double x0, double y0, double x1, double y1);

// ---------------------------------------------------------------------------
// Brownian Bridge

struct BridgeConfig
{
  int total_steps = 400;
  int waypoint_count = 10;
  double sigma = 0.5;      // meters per sqrt(step)
  double clearance = 0.8;  // obstacle standoff, meters
  double altitude = 7.0;

  void validate() const;
};

nlohmann::json to_json(const BridgeConfig & c);
BridgeConfig bridge_config_from_json(const nlohmann::json & j, BridgeConfig base = {});

/// Piecewise bridge starting at `start` (x, y): waypoint_count endpoints drawn
/// uniformly over free cells, bridged in turn; total_steps is split evenly
/// over the bridges. Throws PlanningError when no free cell exists.
PlannedPath brownian_bridge_walk(
  const WorldMap & map, double start_x, double start_y, const BridgeConfig & config,
  std::uint64_t seed);

/// Unconstrained 2-D bridge from a to b over T steps (T + 1 points).
std::vector<std::pair<double, double>> sample_bridge(
  double ax, double ay, double bx, double by, int T, double sigma, Rng & rng);

// ---------------------------------------------------------------------------
// Boustrophedon cell decomposition

struct CellSlice
{
  int col = 0;
  int row_lo = 0;  // inclusive
  int row_hi = 0;  // inclusive
};

/// A sweep cell: contiguous columns, one free interval per column.
struct BcdCell
{
  std::vector<CellSlice> slices;

  int first_col() const {return slices.front().col;}
  int last_col() const {return slices.back().col;}
  std::size_t cell_count() const;
};

/// Vertical sweep (left to right). A new cell starts whenever an interval is
/// not in one-to-one overlap with an interval of the previous column.
std::vector<BcdCell> bcd_decompose(const BlockedGrid & grid);
std::vector<BcdCell> bcd_decompose(const WorldMap & map);

/// Serpentine vertical lanes. Lane count is floor(w / s) + 1 with w measured
/// between the centers of the cell's first and last columns; lanes sit at
/// first_col + i * s. `from_right` sweeps right to left, `start_top` starts
/// the first lane at its top end.
PlannedPath lawnmower(
  const BcdCell & cell, double cell_size, double lane_spacing, bool from_right = false,
  bool start_top = false, double altitude = 7.0);

struct BcdConfig
{
  double lane_spacing = 0.0;  // meters; 0 = footprint-derived default
  double clearance = 0.8;
  double altitude = 7.0;

  void validate() const;
};

nlohmann::json to_json(const BcdConfig & c);
BcdConfig bcd_config_from_json(const nlohmann::json & j, BcdConfig base = {});

/// Ground width covered by the camera's center row when flying level at
/// `altitude` over a floor at height 0, capped by the camera's max range.
double footprint_width(const CameraModel & cam, double altitude);
double default_lane_spacing(const CameraModel & cam, double altitude);

/// 8-connected uniform-cost search; diagonal moves need both side cells free.
/// Returns cell centers from start to goal; empty when unreachable.
std::vector<std::pair<int, int>> grid_path(
  const BlockedGrid & grid, std::pair<int, int> start, std::pair<int, int> goal);

/// Greedy nearest-entry cell ordering, lawnmower inside each cell, UCS transits.
PlannedPath bcd_plan(
  const WorldMap & map, double start_x, double start_y, const BcdConfig & config,
  const CameraModel & cam);

}  // namespace uivnav

#endif  // UIVNAV__BASELINES_HPP_
