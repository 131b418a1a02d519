#include "uivnav/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include "uivnav/common.hpp"
#include "uivnav/image.hpp"

namespace uivnav
{

using nlohmann::json;

namespace
{

double efficiency(double pct, double distance)
{
  return distance > 0.0 ? pct / distance : 0.0;
}

bool is_abort(const std::string & status)
{
  return status != status_name(EpisodeStatus::BudgetExhausted) &&
         status != status_name(EpisodeStatus::PathComplete);
}

MetricsSummary base_summary(const EpisodeLog & log, double budget)
{
  MetricsSummary m;
  m.method = log.method;
  m.scenario = log.scenario;
  m.seed = log.seed;
  m.distance_budget = budget;
  m.status = status_name(log.status);
  m.steps = log.steps.size();
  if (!log.steps.empty()) {
    m.distance_traveled = log.steps.back().cumulative_distance;
  }
  return m;
}

double over_ooi_distance(const WorldMap & map, const EpisodeLog & log)
{
  double total = 0.0;
  double prev = 0.0;
  for (const auto & r : log.steps) {
    const double len = r.cumulative_distance - prev;
    prev = r.cumulative_distance;
    const auto c = map.try_cell_of(r.pose.x, r.pose.y);
    if (c && map.ooi_at(c->col, c->row)) {
      total += len;
    }
  }
  return total;
}

double seen_fraction(const WorldMap & map, const std::vector<std::uint32_t> & cells)
{
  const std::size_t total = map.ooi_count();
  if (total == 0) {
    return 0.0;
  }
  std::size_t seen = 0;
  for (std::uint32_t c : cells) {
    seen += map.ooi()[c] != 0;
  }
  return static_cast<double>(seen) / static_cast<double>(total);
}

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

MetricsSummary compute_metrics(
  const WorldMap & map, const EpisodeLog & log, const CameraModel & cam, double budget)
{
  if (!log.world_digest.empty() && log.world_digest != map.digest()) {
    throw ParseError("compute_metrics: log was recorded on a different world");
  }
  MetricsSummary m = base_summary(log, budget);
  m.distance_over_ooi = over_ooi_distance(map, log);
  const Sensor sensor(map, cam);
  std::vector<std::uint8_t> seen(map.cell_count(), 0);
  for (const auto & r : log.steps) {
    if (!map.bounds().contains(r.pose.x, r.pose.y)) {
      throw ParseError("compute_metrics: logged pose outside the world");
    }
    for (std::uint32_t c : sensor.render_full(r.pose).pixel_cells) {
      if (c != kNoCell) {
        seen[c] = 1;
      }
    }
  }
  std::vector<std::uint32_t> cells;
  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) {
      cells.push_back(i);
    }
  }
  m.pct_ooi_seen = seen_fraction(map, cells);
  m.efficiency_per_m = efficiency(m.pct_ooi_seen, m.distance_traveled);
  return m;
}

MetricsSummary metrics_from_result(const WorldMap & map, const EpisodeResult & result, double budget)
{
  MetricsSummary m = base_summary(result.log, budget);
  m.distance_over_ooi = over_ooi_distance(map, result.log);
  m.pct_ooi_seen = seen_fraction(map, result.seen_cells);
  m.efficiency_per_m = efficiency(m.pct_ooi_seen, m.distance_traveled);
  return m;
}

std::optional<MethodKind> parse_method(const std::string & name)
{
  if (name == "expert") {
    return MethodKind::Expert;
  }
  if (name == "learned") {
    return MethodKind::Learned;
  }
  if (name == "bb" || name == "brownian_bridge") {
    return MethodKind::BrownianBridge;
  }
  if (name == "bcd") {
    return MethodKind::Bcd;
  }
  return std::nullopt;
}

std::string method_name(MethodKind kind)
{
  switch (kind) {
    case MethodKind::Expert: return "expert";
    case MethodKind::Learned: return "learned";
    case MethodKind::BrownianBridge: return "bb";
    case MethodKind::Bcd: return "bcd";
  }
  return "expert";
}

// ---------------------------------------------------------------------------
// Harness

SimParams budgeted(SimParams sim, double distance_budget)
{
  if (distance_budget > 0.0) {
    sim.distance_budget = distance_budget;
    // Path followers can fall short of v*dt per step at corners.
    sim.max_steps = 4 * static_cast<int>(std::ceil(distance_budget / sim.step_length())) + 1;
  }
  return sim;
}

EpisodeResult run_method(
  const WorldMap & map, const Sensor & sensor, MethodKind kind, const MethodSetup & setup,
  std::uint64_t seed, const EpisodeOptions & options)
{
  ExpertConfig expert = setup.expert;
  expert.max_range = setup.camera.max_range;
  const RobotPose spawn = map.spawn_pose();
  switch (kind) {
    case MethodKind::Expert: {
        ExpertController c(expert);
        return run_episode(map, sensor, ControllerRef(&c), setup.sim, seed, options);
      }
    case MethodKind::Learned: {
        if (setup.model == nullptr) {
          throw ParameterError("method 'learned' needs a model");
        }
        LearnedController c(*setup.model, expert.delta_yaw, expert.delta_pitch);
        return run_episode(map, sensor, ControllerRef(&c), setup.sim, seed, options);
      }
    case MethodKind::BrownianBridge: {
        PathFollower c(brownian_bridge_walk(
            map, spawn.x, spawn.y, setup.bridge, derive_seed(seed, 0xb5)));
        return run_episode(map, sensor, ControllerRef(&c), setup.sim, seed, options);
      }
    case MethodKind::Bcd: {
        PathFollower c(bcd_plan(map, spawn.x, spawn.y, setup.bcd, setup.camera));
        return run_episode(map, sensor, ControllerRef(&c), setup.sim, seed, options);
      }
  }
  throw ParameterError("unknown method");
}

namespace
{

struct JobOutput
{
  std::vector<MetricsSummary> rows;
  std::vector<Trajectory> trajectories;
  std::shared_ptr<const WorldMap> world;
};

struct MethodEntry
{
  std::string label;
  MethodKind kind;
};

JobOutput run_job(
  const CompareConfig & cfg, const std::vector<MethodEntry> & methods, ScenarioId id,
  std::uint64_t seed, bool keep)
{
  JobOutput out;
  auto world = std::make_shared<const WorldMap>(
    generate_scenario({id, seed, cfg.scenario_params}));
  const WorldMap & map = *world;
  const Sensor sensor(map, cfg.camera);
  const std::string scenario{scenario_name(id)};
  const MethodSetup setup{cfg.camera, budgeted(cfg.sim, cfg.distance_budget), cfg.expert,
    cfg.bridge, cfg.bcd, cfg.model};

  for (const auto & m : methods) {
    EpisodeOptions opts;
    opts.method = m.label;
    opts.scenario = scenario;
    EpisodeResult result;
    std::string failure;
    try {
      result = run_method(map, sensor, m.kind, setup, seed, opts);
    } catch (const PlanningError & e) {
      failure = e.what();
    }
    MetricsSummary row;
    if (failure.empty()) {
      row = metrics_from_result(map, result, cfg.distance_budget);
    } else {
      row.method = m.label;
      row.scenario = scenario;
      row.seed = seed;
      row.distance_budget = cfg.distance_budget;
      row.status = "planning_error";
    }
    out.rows.push_back(row);
    if (keep && failure.empty()) {
      Trajectory t{m.label, scenario, {}};
      for (const auto & r : result.log.steps) {
        t.points.emplace_back(r.pose.x, r.pose.y);
      }
      t.points.emplace_back(result.log.final_pose.x, result.log.final_pose.y);
      out.trajectories.push_back(std::move(t));
    }
  }
  if (keep) {
    out.world = world;
  }
  return out;
}

}  // namespace

CompareTable compare(const CompareConfig & cfg)
{
  if (cfg.methods.empty() || cfg.scenarios.empty() || cfg.seeds < 1) {
    throw ParameterError("compare: need at least one method, scenario and seed");
  }
  if (!(cfg.distance_budget >= 0.0)) {
    throw ParameterError("compare: distance_budget must be >= 0");
  }
  cfg.camera.validate();
  cfg.sim.validate();
  cfg.expert.validate();
  cfg.bridge.validate();
  cfg.bcd.validate();
  cfg.scenario_params.validate();

  std::vector<MethodEntry> methods;
  for (const auto & name : cfg.methods) {
    const auto kind = parse_method(name);
    if (!kind) {
      throw ParameterError("compare: unknown method '" + name + "'");
    }
    if (*kind == MethodKind::Learned && cfg.model == nullptr) {
      throw ParameterError("compare: method 'learned' needs a model");
    }
    // Repeated entries get a numeric suffix so their rows stay distinguishable.
    std::string label = name;
    int n = 1;
    while (std::any_of(methods.begin(), methods.end(),
      [&](const MethodEntry & e) {return e.label == label;}))
    {
      label = name + "_" + std::to_string(++n);
    }
    methods.push_back({label, *kind});
  }

  struct Job
  {
    ScenarioId id;
    std::uint64_t seed;
    bool keep;
  };
  std::vector<Job> jobs;
  for (ScenarioId id : cfg.scenarios) {
    for (int s = 0; s < cfg.seeds; ++s) {
      jobs.push_back({id, cfg.seed_base + static_cast<std::uint64_t>(s),
          cfg.keep_trajectories && s == 0});
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          outputs[i] = run_job(cfg, methods, jobs[i].id, jobs[i].seed, jobs[i].keep);
        } catch (const std::exception & e) {
          errors[i] = e.what();
        }
      }
    };
  const int threads = std::clamp(cfg.parallel, 1, static_cast<int>(jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto & t : pool) {
      t.join();
    }
  }
  for (const auto & e : errors) {
    if (!e.empty()) {
      throw ParameterError("compare: " + e);
    }
  }

  CompareTable table;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto & o = outputs[i];
    table.rows.insert(table.rows.end(), o.rows.begin(), o.rows.end());
    table.trajectories.insert(table.trajectories.end(), o.trajectories.begin(), o.trajectories.end());
    if (o.world) {
      table.worlds[std::string(scenario_name(jobs[i].id))] = o.world;
    }
  }
  table.aggregates = aggregate(table.rows);
  std::vector<std::string> scenario_names;
  for (ScenarioId id : cfg.scenarios) {
    scenario_names.emplace_back(scenario_name(id));
  }
  table.config = {
    {"methods", cfg.methods}, {"scenarios", scenario_names}, {"seeds", cfg.seeds},
    {"seed_base", cfg.seed_base}, {"distance_budget", cfg.distance_budget},
    {"camera", to_json(cfg.camera)}, {"sim", to_json(cfg.sim)},
    {"expert", to_json(cfg.expert)}, {"bridge", to_json(cfg.bridge)},
    {"bcd", to_json(cfg.bcd)}, {"scenario_params", to_json(cfg.scenario_params)},
  };
  return table;
}

namespace
{

// Sorting before summing makes the result independent of row order.
std::pair<double, double> mean_std(std::vector<double> v)
{
  if (v.empty()) {
    return {0.0, 0.0};
  }
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) {
    sum += x;
  }
  const double mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) {
    return {mean, 0.0};
  }
  std::vector<double> sq;
  for (double x : v) {
    sq.push_back((x - mean) * (x - mean));
  }
  std::sort(sq.begin(), sq.end());
  double ss = 0.0;
  for (double x : sq) {
    ss += x;
  }
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

AggregateRow aggregate_group(
  const std::string & method, const std::string & scenario,
  const std::vector<const MetricsSummary *> & rows)
{
  AggregateRow a;
  a.method = method;
  a.scenario = scenario;
  a.episodes = rows.size();
  std::vector<double> d, o, p, e;
  for (const auto * r : rows) {
    a.incomplete += is_abort(r->status);
    d.push_back(r->distance_traveled);
    o.push_back(r->distance_over_ooi);
    p.push_back(r->pct_ooi_seen);
    e.push_back(r->efficiency_per_m);
  }
  std::tie(a.mean_distance, a.std_distance) = mean_std(d);
  std::tie(a.mean_over_ooi, a.std_over_ooi) = mean_std(o);
  std::tie(a.mean_pct, a.std_pct) = mean_std(p);
  std::tie(a.mean_efficiency, a.std_efficiency) = mean_std(e);
  return a;
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<MetricsSummary> & rows)
{
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsSummary *>> groups;
  std::map<std::string, std::vector<const MetricsSummary *>> per_method;
  for (const auto & r : rows) {
    groups[{r.method, r.scenario}].push_back(&r);
    per_method[r.method].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto & [key, members] : groups) {
    out.push_back(aggregate_group(key.first, key.second, members));
  }
  for (const auto & [method, members] : per_method) {
    out.push_back(aggregate_group(method, "all", members));
  }
  return out;
}

const AggregateRow * find_aggregate(
  const std::vector<AggregateRow> & rows, const std::string & method, const std::string & scenario)
{
  for (const auto & r : rows) {
    if (r.method == method && r.scenario == scenario) {
      return &r;
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Reports

static const char * kCsvHeader =
  "method,scenario,seed,distance_m,distance_over_ooi_m,pct_ooi_seen,efficiency_per_m,status";

std::string metrics_to_csv(const std::vector<MetricsSummary> & rows)
{
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto & r : rows) {
    out << r.method << ',' << r.scenario << ',' << r.seed << ',' << fmt(r.distance_traveled) <<
      ',' << fmt(r.distance_over_ooi) << ',' << fmt(r.pct_ooi_seen) << ',' <<
      fmt(r.efficiency_per_m) << ',' << r.status << '\n';
  }
  return out.str();
}

std::vector<MetricsSummary> metrics_from_csv(const std::string & text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError("metrics csv: missing or unexpected header");
  }
  std::vector<MetricsSummary> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      f.push_back(cell);
    }
    if (f.size() != 8) {
      throw ParseError("metrics csv line " + std::to_string(n) + ": expected 8 fields");
    }
    MetricsSummary m;
    try {
      m.method = f[0];
      m.scenario = f[1];
      m.seed = std::stoull(f[2]);
      m.distance_traveled = std::stod(f[3]);
      m.distance_over_ooi = std::stod(f[4]);
      m.pct_ooi_seen = std::stod(f[5]);
      m.efficiency_per_m = std::stod(f[6]);
      m.status = f[7];
    } catch (const std::logic_error &) {
      throw ParseError("metrics csv line " + std::to_string(n) + ": bad number");
    }
    rows.push_back(m);
  }
  return rows;
}

json to_json(const MetricsSummary & m)
{
  return {
    {"method", m.method}, {"scenario", m.scenario}, {"seed", m.seed},
    {"distance_budget", m.distance_budget}, {"distance_m", m.distance_traveled},
    {"distance_over_ooi_m", m.distance_over_ooi}, {"pct_ooi_seen", m.pct_ooi_seen},
    {"efficiency_per_m", m.efficiency_per_m}, {"status", m.status}, {"steps", m.steps},
  };
}

json to_json(const AggregateRow & a)
{
  return {
    {"method", a.method}, {"scenario", a.scenario}, {"episodes", a.episodes},
    {"incomplete", a.incomplete},
    {"distance_m", {{"mean", a.mean_distance}, {"std", a.std_distance}}},
    {"distance_over_ooi_m", {{"mean", a.mean_over_ooi}, {"std", a.std_over_ooi}}},
    {"pct_ooi_seen", {{"mean", a.mean_pct}, {"std", a.std_pct}}},
    {"efficiency_per_m", {{"mean", a.mean_efficiency}, {"std", a.std_efficiency}}},
  };
}

std::string summary_text(const CompareTable & table)
{
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %-20s %4s %5s %16s %16s %14s %16s\n", "method",
    "scenario", "n", "abort", "distance_m", "over_ooi_m", "pct_seen", "eff_per_km");
  out << buf;
  for (const auto & a : table.aggregates) {
    std::snprintf(buf, sizeof(buf),
      "%-10s %-20s %4zu %5zu %7.1f +- %5.1f %7.1f +- %5.1f %5.1f%% +- %4.1f %7.3f +- %5.3f%s\n",
      a.method.c_str(), a.scenario.c_str(), a.episodes, a.incomplete, a.mean_distance,
      a.std_distance, a.mean_over_ooi, a.std_over_ooi, 100 * a.mean_pct, 100 * a.std_pct,
      1000 * a.mean_efficiency, 1000 * a.std_efficiency, a.incomplete ? "  (incomplete)" : "");
    out << buf;
  }
  return out.str();
}

Image trajectory_overlay(const WorldMap & map, const std::vector<Trajectory> & trajs, int scale)
{
  if (scale < 1 || scale > 16) {
    throw ParameterError("overlay: scale must be in [1, 16]");
  }
  const int W = map.cols() * scale;
  const int H = map.rows() * scale;
  Image img(W, H, 3);
  auto paint = [&](int x, int y, std::array<std::uint8_t, 3> c) {
      if (x < 0 || y < 0 || x >= W || y >= H) {
        return;
      }
      for (int k = 0; k < 3; ++k) {
        img.at(x, y, k) = c[k];
      }
    };
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      std::array<std::uint8_t, 3> color{214, 200, 160};
      if (map.obstacle_at(c, r)) {
        color = {45, 45, 50};
      } else if (map.ooi_at(c, r)) {
        color = {125, 95, 60};
      }
      // North up: grid row 0 is the bottom image row.
      for (int dy = 0; dy < scale; ++dy) {
        for (int dx = 0; dx < scale; ++dx) {
          paint(c * scale + dx, (map.rows() - 1 - r) * scale + dy, color);
        }
      }
    }
  }
  auto method_color = [](const std::string & m) -> std::array<std::uint8_t, 3> {
      if (m.rfind("expert", 0) == 0) {return {220, 30, 30};}
      if (m.rfind("learned", 0) == 0) {return {200, 0, 200};}
      if (m.rfind("bb", 0) == 0) {return {30, 70, 230};}
      if (m.rfind("bcd", 0) == 0) {return {10, 150, 40};}
      return {250, 250, 250};
    };
  const double px_per_m = scale / map.cell_size();
  for (const auto & t : trajs) {
    const auto color = method_color(t.method);
    for (std::size_t i = 1; i < t.points.size(); ++i) {
      const auto [x0, y0] = t.points[i - 1];
      const auto [x1, y1] = t.points[i];
      const double len_px = std::hypot(x1 - x0, y1 - y0) * px_per_m;
      const int n = std::max(1, static_cast<int>(std::ceil(len_px * 2)));
      for (int k = 0; k <= n; ++k) {
        const double s = static_cast<double>(k) / n;
        const double x = (x0 + s * (x1 - x0)) * px_per_m;
        const double y = H - (y0 + s * (y1 - y0)) * px_per_m;
        paint(static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)), color);
      }
    }
  }
  return img;
}

void emit_report(const CompareTable & table, const std::string & dir, int scale)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("report: cannot create " + dir + ": " + ec.message());
  }
  const std::string base = dir + "/";
  write_file(base + "compare.csv", metrics_to_csv(table.rows));
  json rows = json::array();
  for (const auto & r : table.rows) {
    rows.push_back(to_json(r));
  }
  json aggs = json::array();
  for (const auto & a : table.aggregates) {
    aggs.push_back(to_json(a));
  }
  const std::string config_text = table.config.dump();
  json doc = {
    {"tool_version", kToolVersion}, {"config_hash", hex64(fnv1a(config_text))},
    {"config", table.config}, {"rows", rows}, {"aggregates", aggs},
  };
  write_file(base + "compare.json", doc.dump(2) + "\n");
  write_file(base + "summary.txt", summary_text(table));
  for (const auto & [scenario, world] : table.worlds) {
    std::vector<Trajectory> mine;
    for (const auto & t : table.trajectories) {
      if (t.scenario == scenario) {
        mine.push_back(t);
      }
    }
    if (world && !mine.empty()) {
      write_file(base + "overlay_" + scenario + ".png",
        encode_png(trajectory_overlay(*world, mine, scale)));
    }
  }
}

}  // namespace uivnav
