#ifndef UIVNAV__EVAL_HPP_
#define UIVNAV__EVAL_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uivnav/baselines.hpp"
#include "uivnav/network.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/sensor.hpp"
#include "uivnav/simulate.hpp"
#include "uivnav/world.hpp"

namespace uivnav
{

struct MetricsSummary
{
  std::string method;
  std::string scenario;
  std::uint64_t seed = 0;
  double distance_budget = 0.0;
  double distance_traveled = 0.0;
  double distance_over_ooi = 0.0;
  double pct_ooi_seen = 0.0;  // fraction in [0, 1]
  double efficiency_per_m = 0.0;
  std::string status;
  std::size_t steps = 0;

  bool operator==(const MetricsSummary &) const = default;
};

/// Recomputes every metric from the logged poses: nadir OOI checks from the
/// map and the footprint union by re-rendering each step. Throws ParseError
/// when the log was recorded on a different world.
MetricsSummary compute_metrics(
  const WorldMap & map, const EpisodeLog & log, const CameraModel & cam,
  double distance_budget = 0.0);

/// Same numbers from a live run, using the footprint union it already holds.
MetricsSummary metrics_from_result(
  const WorldMap & map, const EpisodeResult & result, double distance_budget = 0.0);

enum class MethodKind
{
  Expert,
  Learned,
  BrownianBridge,
  Bcd,
};

/// "expert", "learned", "bb" and "bcd" (also "brownian_bridge").
std::optional<MethodKind> parse_method(const std::string & name);
std::string method_name(MethodKind kind);

/// Everything needed to run one episode of any method.
struct MethodSetup
{
  CameraModel camera;
  SimParams sim;
  ExpertConfig expert;  // max_range is taken from camera
  BridgeConfig bridge;
  BcdConfig bcd;
  const PolicyModel * model = nullptr;
};

/// Sets the budget and raises max_steps far enough that the budget, not the
/// step cap, ends the run. A zero budget leaves `sim` unchanged.
SimParams budgeted(SimParams sim, double distance_budget);

/// Plans (bb, bcd) or builds the controller (expert, learned) and runs it
/// from the map spawn. Planning failures propagate as PlanningError; a
/// missing model is a ParameterError. The bridge walk draws from
/// derive_seed(seed, 0xb5).
EpisodeResult run_method(
  const WorldMap & map, const Sensor & sensor, MethodKind kind, const MethodSetup & setup,
  std::uint64_t seed, const EpisodeOptions & options);

struct CompareConfig
{
  std::vector<std::string> methods;
  std::vector<ScenarioId> scenarios;
  int seeds = 10;
  std::uint64_t seed_base = 0;
  double distance_budget = 400.0;
  int parallel = 1;
  ScenarioParams scenario_params;
  CameraModel camera;
  SimParams sim;
  ExpertConfig expert;
  BridgeConfig bridge;
  BcdConfig bcd;
  const PolicyModel * model = nullptr;  // required for "learned"
  bool keep_trajectories = true;        // first seed of each scenario
};

struct AggregateRow
{
  std::string method;
  std::string scenario;  // "all" for the per-method roll-up
  std::size_t episodes = 0;
  std::size_t incomplete = 0;  // episodes that ended in an abort
  double mean_distance = 0.0, std_distance = 0.0;
  double mean_over_ooi = 0.0, std_over_ooi = 0.0;
  double mean_pct = 0.0, std_pct = 0.0;
  double mean_efficiency = 0.0, std_efficiency = 0.0;
};

struct Trajectory
{
  std::string method;
  std::string scenario;
  std::vector<std::pair<double, double>> points;
};

struct CompareTable
{
  std::vector<MetricsSummary> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<Trajectory> trajectories;
  std::map<std::string, std::shared_ptr<const WorldMap>> worlds;  // backdrop per scenario
  nlohmann::json config = nlohmann::json::object();
};

/// Runs every (method, scenario, seed) at the same distance budget. Worlds
/// come from generate_scenario(scenario, seed). Rows are ordered by scenario,
/// seed, then method regardless of `parallel`. Aborted episodes are kept as
/// rows and counted in `incomplete`.
CompareTable compare(const CompareConfig & config);

/// Mean/std per (method, scenario) and per method over all scenarios.
/// Independent of row order.
std::vector<AggregateRow> aggregate(const std::vector<MetricsSummary> & rows);
const AggregateRow * find_aggregate(
  const std::vector<AggregateRow> & rows, const std::string & method, const std::string & scenario);

/// CSV: method,scenario,seed,distance_m,distance_over_ooi_m,pct_ooi_seen,efficiency_per_m,status
std::string metrics_to_csv(const std::vector<MetricsSummary> & rows);
std::vector<MetricsSummary> metrics_from_csv(const std::string & text);
nlohmann::json to_json(const MetricsSummary & m);
nlohmann::json to_json(const AggregateRow & a);
std::string summary_text(const CompareTable & table);

/// Raster of the map (sand, OOI, obstacles) scaled by `scale`, with each
/// polyline drawn on top in its own color.
Image trajectory_overlay(
  const WorldMap & map, const std::vector<Trajectory> & trajectories, int scale = 1);

/// Writes compare.csv, compare.json, summary.txt and overlay_<scenario>.png
/// for every scenario that has a backdrop world and trajectories.
void emit_report(const CompareTable & table, const std::string & dir, int scale = 1);

}  // namespace uivnav

#endif  // UIVNAV__EVAL_HPP_
