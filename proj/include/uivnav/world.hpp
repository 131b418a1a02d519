#ifndef UIVNAV__WORLD_HPP_
#define UIVNAV__WORLD_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace uivnav
{

/// Robot state. Yaw is positive clockwise viewed from above, with yaw 0
/// pointing along +x; pitch is positive nose-up. Angles in degrees.
struct RobotPose
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;
  double pitch = 0.0;

  bool operator==(const RobotPose &) const = default;
};

/// Returns the pose with yaw wrapped to (-180, 180] and pitch clamped to [-30, 30].
RobotPose canonical_pose(RobotPose p);

struct CellIndex
{
  int col = 0;
  int row = 0;
  bool operator==(const CellIndex &) const = default;
};

struct Bounds
{
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  /// Half-open containment [min, max).
  bool contains(double x, double y) const
  {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
};

inline constexpr double kDefaultObstacleThreshold = 5.0;

/// 2.5-D seafloor: one terrain height and one OOI flag per cell. Cell (col, row)
/// covers [col*c, (col+1)*c) x [row*c, (row+1)*c); row 0 is at y = 0.
/// Immutable once constructed; the constructor enforces all invariants.
class WorldMap
{
public:
  WorldMap(
    double width_m, double height_m, double cell_size,
    std::vector<float> heights, std::vector<std::uint8_t> ooi,
    std::string ooi_kind, RobotPose spawn,
    double obstacle_threshold = kDefaultObstacleThreshold);

  double width_m() const {return width_m_;}
  double height_m() const {return height_m_;}
  double cell_size() const {return cell_size_;}
  double obstacle_threshold() const {return obstacle_threshold_;}
  int cols() const {return cols_;}
  int rows() const {return rows_;}
  std::size_t cell_count() const {return heights_.size();}
  Bounds bounds() const {return {0.0, 0.0, width_m_, height_m_};}
  const std::string & ooi_kind() const {return ooi_kind_;}
  const RobotPose & spawn_pose() const {return spawn_;}
  const std::vector<float> & heights() const {return heights_;}
  const std::vector<std::uint8_t> & ooi() const {return ooi_;}

  std::size_t flat(int col, int row) const
  {
    return static_cast<std::size_t>(row) * cols_ + col;
  }
  CellIndex unflat(std::size_t i) const
  {
    return {static_cast<int>(i % cols_), static_cast<int>(i / cols_)};
  }
  bool in_grid(int col, int row) const
  {
    return col >= 0 && row >= 0 && col < cols_ && row < rows_;
  }
  float height_at(int col, int row) const {return heights_[flat(col, row)];}
  bool ooi_at(int col, int row) const {return ooi_[flat(col, row)] != 0;}
  bool obstacle_at(int col, int row) const
  {
    return heights_[flat(col, row)] >= obstacle_threshold_;
  }
  bool obstacle_flat(std::size_t i) const {return heights_[i] >= obstacle_threshold_;}

  /// Containing cell of a point inside bounds; throws OutOfBoundsError otherwise.
  CellIndex cell_of(double x, double y) const;
  /// Same as cell_of but returns nullopt instead of throwing.
  std::optional<CellIndex> try_cell_of(double x, double y) const;
  std::pair<double, double> cell_center(int col, int row) const
  {
    return {(col + 0.5) * cell_size_, (row + 0.5) * cell_size_};
  }

  std::size_t ooi_count() const;
  std::size_t obstacle_count() const;
  /// Stable digest of the grids and geometry; episode logs carry it.
  std::string digest() const;

  bool operator==(const WorldMap & o) const;

private:
  double width_m_;
  double height_m_;
  double cell_size_;
  double obstacle_threshold_;
  int cols_;
  int rows_;
  std::vector<float> heights_;
  std::vector<std::uint8_t> ooi_;
  std::string ooi_kind_;
  RobotPose spawn_;
};

struct CellQuery
{
  double height = 0.0;
  bool is_ooi = false;
};

CellQuery query_cell(const WorldMap & map, double x, double y);

enum class ScenarioId
{
  GridWorld,
  EShape,
  DisconnectedPaths,
  BranchingCorridor,
  RockReef,
};

std::string_view scenario_name(ScenarioId id);
/// Parses names such as "gridworld", "eshape", "disconnected_paths".
std::optional<ScenarioId> parse_scenario(std::string_view name);
/// The four oyster layouts, in their canonical order.
std::vector<ScenarioId> oyster_scenarios();

/// Scenario size parameters. Geometry is laid out on a nominal 160 m x 120 m
/// canvas and stretched to (width_m, height_m); patch widths are absolute.
struct ScenarioParams
{
  double width_m = 160.0;
  double height_m = 120.0;
  double cell_size = 0.25;
  double band_width = 6.0;       // lattice and corridor spines
  double wide_width = 10.0;      // wide patches
  double narrow_width = 3.0;     // narrow patches
  double gap = 24.0;             // sand gap between DisconnectedPaths groups
  int obstacle_count = 3;
  double obstacle_radius = 2.5;
  double obstacle_height = 6.5;
  double warp_amplitude = 1.0;   // smooth boundary wobble, meters
  double spawn_altitude = 7.0;
  double obstacle_threshold = kDefaultObstacleThreshold;

  /// Throws ParameterError naming the first out-of-range field.
  void validate() const;
};

struct ScenarioSpec
{
  ScenarioId id = ScenarioId::GridWorld;
  std::uint64_t seed = 0;
  ScenarioParams params{};
};

WorldMap generate_scenario(const ScenarioSpec & spec);

nlohmann::json world_to_json(const WorldMap & map);
WorldMap world_from_json(const nlohmann::json & doc);
void save_world(const WorldMap & map, const std::string & path);
WorldMap load_world(const std::string & path);

nlohmann::json to_json(const ScenarioParams & p);
/// Unknown keys are rejected.
ScenarioParams scenario_params_from_json(const nlohmann::json & j, ScenarioParams base = {});

}  // namespace uivnav

#endif  // UIVNAV__WORLD_HPP_
