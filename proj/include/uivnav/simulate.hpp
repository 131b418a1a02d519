#ifndef UIVNAV__SIMULATE_HPP_
#define UIVNAV__SIMULATE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "uivnav/baselines.hpp"
#include "uivnav/dataset.hpp"
#include "uivnav/ir.hpp"
#include "uivnav/network.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/sensor.hpp"
#include "uivnav/world.hpp"

namespace uivnav
{

struct SimParams
{
  double speed = 1.0;          // m/s
  double control_dt = 2.0;     // s (0.5 Hz)
  double z_min = 3.0;
  double z_max = 12.0;
  double collision_radius = 0.3;
  int max_steps = 400;
  double distance_budget = 0.0;  // meters; 0 disables the budget
  double exec_noise_deg = 0.0;   // std of yaw noise added after each step

  double step_length() const {return speed * control_dt;}
  void validate() const;
};

nlohmann::json to_json(const SimParams & p);
SimParams sim_params_from_json(const nlohmann::json & j, SimParams base = {});

/// Applies the decoded yaw/pitch change, then moves v*dt along the new heading.
/// z is clamped to [z_min, z_max]; a clamp drops only the vertical component.
RobotPose step_dynamics(const RobotPose & pose, const ActionClass & action, const SimParams & p);

/// True iff some cell within collision_radius (horizontally, measured to the
/// cell square) has terrain at or above z - collision_radius.
bool check_collision(const WorldMap & map, const RobotPose & pose, const SimParams & p);

/// Sees the raw planes; stands in for the human labeler.
class FrameController
{
public:
  virtual ~FrameController() = default;
  virtual ActionClass act(const Image & seg, const Image & depth) = 0;
};

/// Sees only the downsampled composite.
class SegDepthController
{
public:
  virtual ~SegDepthController() = default;
  virtual int input_size() const = 0;
  virtual ActionClass act(const SegDepthImage & ids) = 0;
};

/// Chooses the next pose directly (planned-path playback); nullopt ends the run.
class PoseController
{
public:
  virtual ~PoseController() = default;
  virtual RobotPose start_pose() const = 0;
  virtual std::optional<RobotPose> next_pose(const RobotPose & pose, const SimParams & p) = 0;
};

using ControllerRef = std::variant<FrameController *, SegDepthController *, PoseController *>;

class ExpertController : public FrameController
{
public:
  explicit ExpertController(ExpertConfig config) : config_(config) {}
  ActionClass act(const Image & seg, const Image & depth) override;

private:
  ExpertConfig config_;
};

class LearnedController : public SegDepthController
{
public:
  LearnedController(const PolicyModel & model, double delta_yaw, double delta_pitch)
  : model_(model), delta_yaw_(delta_yaw), delta_pitch_(delta_pitch) {}
  int input_size() const override {return model_.arch().input_size;}
  ActionClass act(const SegDepthImage & ids) override;

private:
  const PolicyModel & model_;
  double delta_yaw_;
  double delta_pitch_;
};

/// Walks the polyline v*dt of arc length per step. Positions stay on the
/// polyline; the camera faces the point one more step ahead.
class PathFollower : public PoseController
{
public:
  explicit PathFollower(PlannedPath path);
  RobotPose start_pose() const override;
  std::optional<RobotPose> next_pose(const RobotPose & pose, const SimParams & p) override;
  const PlannedPath & path() const {return path_;}

private:
  std::pair<double, double> point_at(double s) const;
  double yaw_toward(double s_from, double ahead) const;

  PlannedPath path_;
  std::vector<double> cum_;  // arc length at each waypoint
  double s_ = 0.0;
};

enum class EpisodeStatus
{
  BudgetExhausted,
  OutOfBounds,
  Collision,
  PathComplete,
  ControllerError,
};

std::string status_name(EpisodeStatus s);
EpisodeStatus parse_status(const std::string & s);

struct StepRecord
{
  int step = 0;
  RobotPose pose;                     // pose the frame was taken from
  std::optional<ActionClass> action;  // absent for path playback
  bool over_ooi = false;              // nadir of `pose` is on an OOI cell
  std::size_t newly_seen_cells = 0;
  std::size_t newly_seen_ooi = 0;
  double cumulative_distance = 0.0;   // after this step's move

  bool operator==(const StepRecord & o) const;
};

struct EpisodeLog
{
  std::string method;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string world_digest;
  std::vector<StepRecord> steps;
  EpisodeStatus status = EpisodeStatus::BudgetExhausted;
  RobotPose final_pose;
  std::string message;

  bool operator==(const EpisodeLog &) const = default;
};

struct EpisodeOptions
{
  std::string method;
  std::string scenario;
  std::optional<RobotPose> start;  // default: map spawn (frame/segdepth controllers)
  std::string frame_dump_dir;      // when set, PNG triplets per step
};

/// Everything run_episode observed, beyond the log itself.
struct EpisodeResult
{
  EpisodeLog log;
  std::vector<std::uint32_t> seen_cells;  // sorted union of all footprints
};

/// Sense -> compose -> act -> move until max_steps, the distance budget, a
/// bounds violation, a collision or the end of a planned path. The violating
/// step of a failed run is not recorded. Controller exceptions end the run
/// with status controller_error and the message kept.
EpisodeResult run_episode(
  const WorldMap & map, const Sensor & sensor, ControllerRef controller, const SimParams & params,
  std::uint64_t seed, const EpisodeOptions & options = {});

struct LabelingOptions
{
  int count = 500;
  int input_size = 64;
  std::string scenario_id;
  /// Episodes after the first start from a random free pose with this
  /// altitude range and a random heading.
  double z_lo = 5.0;
  double z_hi = 9.0;
};

/// Bulk expert labeling: runs expert episodes and keeps one sample per step
/// (downsampled composite plus the expert's classes). The first episode
/// starts at the spawn pose; each time an episode ends (bounds, collision or
/// max_steps) a new one starts from a seeded random pose.
std::vector<LabeledSample> collect_expert_samples(
  const WorldMap & map, const Sensor & sensor, const ExpertConfig & expert,
  const SimParams & params, std::uint64_t seed, const LabelingOptions & options);

/// JSONL: a header line (tool version, config hash, seed, method, scenario,
/// world digest, config), one line per step, and an end line.
std::string episode_to_jsonl(
  const EpisodeLog & log, const nlohmann::json & config = nlohmann::json::object());
EpisodeLog episode_from_jsonl(const std::string & text);

}  // namespace uivnav

#endif  // UIVNAV__SIMULATE_HPP_
