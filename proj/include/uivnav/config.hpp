#ifndef UIVNAV__CONFIG_HPP_
#define UIVNAV__CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/actuation.hpp"
#include "uivnav/baselines.hpp"
#include "uivnav/network.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/sensor.hpp"
#include "uivnav/simulate.hpp"
#include "uivnav/world.hpp"

namespace uivnav
{

struct EvalConfig
{
  int seeds = 10;
  std::uint64_t seed_base = 0;
  double distance_budget = 400.0;
  int parallel = 1;

  void validate() const;
};

/// Every tunable in one document:
/// {world, camera, sim, expert, trainer, planner: {bridge, bcd}, actuation, eval}.
struct RunConfig
{
  ScenarioParams world;
  CameraModel camera;
  SimParams sim;
  ExpertConfig expert;
  TrainerConfig trainer;
  BridgeConfig bridge;
  BcdConfig bcd;
  ActuationParams actuation;
  EvalConfig eval;

  /// Expert copy of the camera range, kept in sync.
  ExpertConfig expert_resolved() const;
  void validate() const;
};

nlohmann::json to_json(const RunConfig & c);
/// Missing sections and keys keep their defaults; unknown keys are errors.
RunConfig run_config_from_json(const nlohmann::json & j);
RunConfig load_run_config(const std::string & path);

/// Applies "section.key=value" (e.g. "sim.speed=0.5", "planner.bcd.clearance=1").
/// The value is parsed as JSON when it can be, otherwise taken as a string.
/// The key must already exist.
void apply_override(RunConfig & c, const std::string & assignment);
RunConfig resolve_config(const std::string & path, const std::vector<std::string> & overrides);

}  // namespace uivnav

#endif  // UIVNAV__CONFIG_HPP_
