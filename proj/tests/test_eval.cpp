#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "uivnav/eval.hpp"

using namespace uivnav;

namespace
{

// Left half OOI, right half sand.
WorldMap half_ooi_map(double w, double h)
{
  const double cell = 0.25;
  const int cols = static_cast<int>(std::ceil(w / cell));
  const int rows = static_cast<int>(std::ceil(h / cell));
  std::vector<std::uint8_t> o(cols * rows, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols / 2; ++c) {
      o[r * cols + c] = 1;
    }
  }
  return WorldMap(w, h, cell, std::vector<float>(cols * rows, 0.0f), o, "oyster",
    {1, 1, 7, 0, 0});
}

CameraModel small_camera()
{
  CameraModel cam;
  cam.image_w = 64;
  cam.image_h = 64;
  return cam;
}

MetricsSummary row(std::string method, std::string scenario, std::uint64_t seed, double d,
  double pct, std::string status = "budget_exhausted")
{
  MetricsSummary m;
  m.method = std::move(method);
  m.scenario = std::move(scenario);
  m.seed = seed;
  m.distance_traveled = d;
  m.distance_over_ooi = d / 2;
  m.pct_ooi_seen = pct;
  m.efficiency_per_m = d > 0 ? pct / d : 0.0;
  m.status = std::move(status);
  return m;
}

}  // namespace

TEST_CASE("straight line over OOI counts every meter") {
  const WorldMap m = half_ooi_map(60, 40);
  const Sensor sensor(m, small_camera());
  PlannedPath plan;
  plan.points = {{2, 20, SegmentSource::Lane}, {12, 20, SegmentSource::Lane}};
  PathFollower f(plan);
  const EpisodeResult r = run_episode(m, sensor, &f, SimParams{}, 0);
  const MetricsSummary s = metrics_from_result(m, r);
  CHECK(s.distance_traveled == doctest::Approx(10.0));
  CHECK(s.distance_over_ooi == doctest::Approx(10.0));
  CHECK(s.pct_ooi_seen > 0.0);
  CHECK(s.efficiency_per_m == doctest::Approx(s.pct_ooi_seen / 10.0));

  // Same line over sand.
  PlannedPath sand;
  sand.points = {{40, 20, SegmentSource::Lane}, {50, 20, SegmentSource::Lane}};
  PathFollower g(sand);
  const MetricsSummary t = metrics_from_result(m, run_episode(m, sensor, &g, SimParams{}, 0));
  CHECK(t.distance_over_ooi == 0.0);
}

TEST_CASE("zero-step episode has zero metrics") {
  const WorldMap m = half_ooi_map(20, 20);
  const Sensor sensor(m, small_camera());
  ExpertController e{ExpertConfig{}};
  SimParams p;
  p.max_steps = 0;
  const MetricsSummary s = metrics_from_result(m, run_episode(m, sensor, &e, p, 0));
  CHECK(s.distance_traveled == 0.0);
  CHECK(s.pct_ooi_seen == 0.0);
  CHECK(s.efficiency_per_m == 0.0);
  CHECK(s.steps == 0u);
}

TEST_CASE("recomputed metrics match the live run") {
  const WorldMap m = generate_scenario({ScenarioId::GridWorld, 1, {}});
  const CameraModel cam = small_camera();
  const Sensor sensor(m, cam);
  ExpertController e{ExpertConfig{}};
  SimParams p;
  p.max_steps = 30;
  const EpisodeResult r = run_episode(m, sensor, &e, p, 0);
  const MetricsSummary live = metrics_from_result(m, r, 60.0);
  const EpisodeLog back = episode_from_jsonl(episode_to_jsonl(r.log));
  CHECK(compute_metrics(m, back, cam, 60.0) == live);

  const WorldMap other = generate_scenario({ScenarioId::GridWorld, 2, {}});
  CHECK_THROWS_AS(compute_metrics(other, back, cam), ParseError);
}

TEST_CASE("method names") {
  CHECK(parse_method("expert") == MethodKind::Expert);
  CHECK(parse_method("bb") == MethodKind::BrownianBridge);
  CHECK(parse_method("brownian_bridge") == MethodKind::BrownianBridge);
  CHECK(parse_method("bcd") == MethodKind::Bcd);
  CHECK(parse_method("learned") == MethodKind::Learned);
  CHECK_FALSE(parse_method("dqn").has_value());
  CHECK(method_name(MethodKind::BrownianBridge) == "bb");
}

TEST_CASE("aggregate is mean and sample std, independent of order") {
  std::vector<MetricsSummary> rows = {row("a", "s1", 0, 10, 0.1), row("a", "s1", 1, 20, 0.3),
    row("a", "s2", 0, 30, 0.5, "collision"), row("b", "s1", 0, 5, 0.2)};
  const auto agg = aggregate(rows);
  const AggregateRow * a1 = find_aggregate(agg, "a", "s1");
  REQUIRE(a1 != nullptr);
  CHECK(a1->episodes == 2u);
  CHECK(a1->mean_distance == doctest::Approx(15.0));
  CHECK(a1->std_distance == doctest::Approx(std::sqrt(50.0)));
  CHECK(a1->mean_pct == doctest::Approx(0.2));
  const AggregateRow * all = find_aggregate(agg, "a", "all");
  REQUIRE(all != nullptr);
  CHECK(all->episodes == 3u);
  CHECK(all->incomplete == 1u);
  CHECK(find_aggregate(agg, "b", "s2") == nullptr);

  std::reverse(rows.begin(), rows.end());
  std::swap(rows[0], rows[2]);
  const auto agg2 = aggregate(rows);
  REQUIRE(agg2.size() == agg.size());
  for (std::size_t i = 0; i < agg.size(); ++i) {
    CHECK(agg2[i].method == agg[i].method);
    CHECK(agg2[i].scenario == agg[i].scenario);
    CHECK(agg2[i].mean_pct == agg[i].mean_pct);
    CHECK(agg2[i].std_efficiency == agg[i].std_efficiency);
  }
}

TEST_CASE("csv round trip") {
  std::vector<MetricsSummary> rows = {row("expert", "gridworld", 3, 123.456789, 1.0 / 3.0),
    row("bb", "eshape", 4, 0.0, 0.0, "out_of_bounds")};
  const std::string csv = metrics_to_csv(rows);
  const auto back = metrics_from_csv(csv);
  REQUIRE(back.size() == 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].method == rows[i].method);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].distance_traveled == rows[i].distance_traveled);
    CHECK(back[i].pct_ooi_seen == rows[i].pct_ooi_seen);
    CHECK(back[i].efficiency_per_m == rows[i].efficiency_per_m);
    CHECK(back[i].status == rows[i].status);
  }
  CHECK(metrics_to_csv(back) == csv);

  const std::string empty = metrics_to_csv({});
  CHECK(empty ==
    "method,scenario,seed,distance_m,distance_over_ooi_m,pct_ooi_seen,efficiency_per_m,status\n");
  CHECK(metrics_from_csv(empty).empty());
  CHECK_THROWS(metrics_from_csv("wrong,header\n"));
}

TEST_CASE("compare: identical methods give identical aggregates, fair budget") {
  CompareConfig c;
  c.methods = {"expert", "expert", "bcd"};
  c.scenarios = {ScenarioId::GridWorld};
  c.seeds = 2;
  c.distance_budget = 40.0;
  c.camera = small_camera();
  const CompareTable t = compare(c);
  REQUIRE(t.rows.size() == 6u);
  const AggregateRow * a = find_aggregate(t.aggregates, "expert", "gridworld");
  const AggregateRow * b = find_aggregate(t.aggregates, "expert_2", "gridworld");
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  CHECK(a->mean_pct == b->mean_pct);
  CHECK(a->mean_distance == b->mean_distance);
  for (const auto & r : t.rows) {
    CHECK(r.distance_budget == 40.0);
    if (r.status == "budget_exhausted") {
      CHECK(r.distance_traveled <= 40.0 + 1e-9);
      CHECK(r.distance_traveled >= 40.0 - c.sim.step_length());
    }
  }
  // Scenario, seed, then method.
  CHECK(t.rows[0].seed == 0u);
  CHECK(t.rows[2].method == "bcd");
  CHECK(t.rows[3].seed == 1u);

  CompareConfig p = c;
  p.parallel = 3;
  const CompareTable tp = compare(p);
  CHECK(tp.rows == t.rows);
}

TEST_CASE("compare rejects bad input") {
  CompareConfig c;
  c.methods = {"dqn"};
  c.scenarios = {ScenarioId::GridWorld};
  c.seeds = 1;
  CHECK_THROWS_AS(compare(c), ParameterError);
  c.methods = {"learned"};
  CHECK_THROWS_AS(compare(c), ParameterError);
  c.methods = {"expert"};
  c.seeds = 0;
  CHECK_THROWS_AS(compare(c), ParameterError);
}

TEST_CASE("budgeted raises the step cap") {
  SimParams p;
  const SimParams b = budgeted(p, 400.0);
  CHECK(b.distance_budget == 400.0);
  CHECK(b.max_steps >= 200);
  CHECK(budgeted(p, 0.0).max_steps == p.max_steps);
}

TEST_CASE("overlay dims and colors") {
  const WorldMap m = half_ooi_map(20, 10);
  Trajectory t{"expert", "x", {{1, 1}, {15, 8}}};
  const Image img = trajectory_overlay(m, {t}, 2);
  CHECK(img.width == m.cols() * 2);
  CHECK(img.height == m.rows() * 2);
  CHECK(img.channels == 3);
  // North up: the bottom-right pixel is the sand cell at row 0.
  const int x = img.width - 1;
  const int y = img.height - 1;
  CHECK(img.at(x, y, 0) == 214);
  CHECK(img.at(x, y, 1) == 200);
  CHECK(img.at(x, y, 2) == 160);
  CHECK_THROWS(trajectory_overlay(m, {t}, 0));
}
