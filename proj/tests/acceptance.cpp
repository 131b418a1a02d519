// Acceptance checks A1..A9. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "uivnav/actuation.hpp"
#include "uivnav/baselines.hpp"
#include "uivnav/common.hpp"
#include "uivnav/eval.hpp"
#include "uivnav/ir.hpp"
#include "uivnav/network.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/simulate.hpp"

using namespace uivnav;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char * f, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ClassDistribution random_simplex(Rng & rng)
{
  ClassDistribution p{};
  double s = 0.0;
  for (auto & v : p) {
    v = rng.uniform(0.01, 1.0);
    s += v;
  }
  for (auto & v : p) {
    v /= s;
  }
  return p;
}

// ---------------------------------------------------------------------------

Outcome a1()
{
  const auto t0 = std::chrono::steady_clock::now();
  const ColormapLut published =
    lut_from_csv(read_file_text(UIVNAV_SOURCE_DIR "/data/segdepth_lut.csv"));
  if (published != colormap_lut()) {
    return {false, "LUT differs from data/segdepth_lut.csv"};
  }
  Rng rng(1);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    Image seg(64, 48, 1), depth(64, 48, 1);
    const double density = rng.uniform();
    for (std::size_t i = 0; i < seg.data.size(); ++i) {
      seg.data[i] = rng.uniform() < density ? 1 : 0;
      depth.data[i] = static_cast<std::uint8_t>(rng.below(256));
    }
    const SegDepthImage ids = compose_segdepth(seg, depth);
    for (std::size_t i = 0; i < seg.data.size(); ++i) {
      const std::uint8_t * px = &ids.image.data[i * 3];
      const bool gray = px[0] == px[1] && px[1] == px[2];
      if (seg.data[i]) {
        const Rgb want = colormap(depth.data[i]);
        violations += gray || px[0] != want[0] || px[1] != want[1] || px[2] != want[2];
      } else {
        violations += !gray || px[0] != depth.data[i];
      }
    }
    const SegDepthPlanes back = decompose_segdepth(ids);
    violations += !(back.seg == seg) + !(back.depth == depth);
  }
  const double dt = seconds_since(t0);
  return {violations == 0 && dt < 10.0,
    fmt("1000 frames, %zu violations, LUT bit-exact, %.2f s", violations, dt)};
}

Outcome a2()
{
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto t = i % 2 ? smooth_label(static_cast<int>(rng.below(7))) : random_simplex(rng);
    const auto t_other = random_simplex(rng);
    const auto p_other = random_simplex(rng);
    const double lambda = rng.uniform();
    std::array<double, kNumClasses> z{};
    for (auto & v : z) {
      v = rng.uniform(-3, 3);
    }
    // Library loss through the softmax; the other head is held fixed.
    auto f = [&](const std::array<double, kNumClasses> & zz) {
        return loss(softmax(zz), p_other, t, t_other, lambda);
      };
    const auto g = loss_grad_logits(softmax(z), t, lambda);
    for (int k = 0; k < kNumClasses; ++k) {
      auto a = z, b = z;
      a[k] += h;
      b[k] -= h;
      const double fd = (f(a) - f(b)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(1e-8, std::abs(fd) + std::abs(g[k])));
    }
  }

  double lambda_spread = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto p = random_simplex(rng);
    const auto t = random_simplex(rng);
    const auto g0 = loss_grad_pred(p, t, 0.0);
    for (double lambda : {0.1, 1.0}) {
      const auto g = loss_grad_pred(p, t, lambda);
      for (int k = 0; k < kNumClasses; ++k) {
        lambda_spread = std::max(lambda_spread, std::abs(g[k] - g0[k]));
      }
    }
  }

  bool identity_ok = true;
  for (int i = 0; i < 100; ++i) {
    const auto ty = i % 2 ? smooth_label(i % 7) : random_simplex(rng);
    const auto tp = random_simplex(rng);
    const double lambda = rng.uniform();
    const LossTerms lt = loss_terms(ty, tp, ty, tp, lambda);
    const double want = lambda * (entropy(ty) + entropy(tp));
    identity_ok &= lt.kl == 0.0 && std::abs(lt.total - want) <= 1e-12 * std::max(1.0, want);
  }
  const double dt = seconds_since(t0);
  return {worst < 1e-4 && lambda_spread <= 1e-12 && identity_ok && dt < 5.0,
    fmt("FD max rel err %.2e, lambda spread %.1e, KL(t||t)=0 %s, %.2f s", worst, lambda_spread,
    identity_ok ? "yes" : "no", dt)};
}

Outcome a3()
{
  const double table[7] = {15, 10, 5, 0, -5, -10, -15};
  bool decode_ok = true;
  for (int c = 0; c < 7; ++c) {
    ActionClass a;
    a.c_yaw = c;
    a.c_pitch = c;
    decode_ok &= decode_action(c, 5.0) == table[c] && a.yaw_change() == table[c] &&
      a.pitch_change() == table[c];
  }
  const ActuationParams p;
  bool neutral_ok = true;
  for (Dof d : {Dof::Surge, Dof::Heave, Dof::Yaw, Dof::Pitch}) {
    neutral_ok &= velocity_to_pwm(0.0, d, p) == 1500;
  }
  bool clamp_ok = true, mono_ok = true;
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ActuationParams q;
    for (auto & k : q.gain) {
      k = rng.uniform(1.0, 200.0);
    }
    for (Dof d : {Dof::Surge, Dof::Heave, Dof::Yaw, Dof::Pitch}) {
      int prev = q.pwm_min;
      for (int i = -2000; i <= 2000; ++i) {
        const int v = velocity_to_pwm(i * 0.01, d, q);
        clamp_ok &= v >= q.pwm_min && v <= q.pwm_max;
        mono_ok &= v >= prev;
        prev = v;
      }
      clamp_ok &= velocity_to_pwm(1e6, d, q) == q.pwm_max && velocity_to_pwm(-1e6, d, q) == q.pwm_min;
    }
  }
  return {decode_ok && neutral_ok && clamp_ok && mono_ok,
    fmt("decode %s, neutral %s, clamp %s, monotone %s", decode_ok ? "ok" : "bad",
    neutral_ok ? "ok" : "bad", clamp_ok ? "ok" : "bad", mono_ok ? "ok" : "bad")};
}

// 2000 GridWorld frames: 1500 from four worlds for training, 500 from a fifth
// world held out.
Outcome a4()
{
  const auto t0 = std::chrono::steady_clock::now();
  const CameraModel cam;
  SimParams sim;
  sim.max_steps = 200;
  std::vector<LabeledSample> train, held;
  for (int w = 0; w < 5; ++w) {
    const WorldMap m = generate_scenario({ScenarioId::GridWorld, static_cast<std::uint64_t>(100 + w), {}});
    const Sensor sensor(m, cam);
    LabelingOptions o;
    o.count = w < 4 ? 375 : 500;
    o.scenario_id = "gridworld";
    auto v = collect_expert_samples(m, sensor, ExpertConfig{}, sim, w, o);
    auto & dst = w < 4 ? train : held;
    dst.insert(dst.end(), v.begin(), v.end());
  }
  const TrainResult r = train_bc(train, held, TrainerConfig{});
  const TrainMetrics & v = *r.validation;
  const double dt = seconds_since(t0);
  const bool ok = v.yaw_exact >= 0.6 && v.pitch_exact >= 0.6 && v.yaw_within1 >= 0.9 &&
    v.pitch_within1 >= 0.9 && dt < 600.0;
  return {ok, fmt("held-out yaw %.3f exact / %.3f within 1, pitch %.3f / %.3f, %.0f s",
    v.yaw_exact, v.yaw_within1, v.pitch_exact, v.pitch_within1, dt)};
}

Outcome a5()
{
  const auto t0 = std::chrono::steady_clock::now();
  CompareConfig c;
  c.methods = {"expert", "bb", "bcd"};
  c.scenarios = oyster_scenarios();
  c.seeds = 10;
  c.distance_budget = 400.0;
  const CompareTable t = compare(c);
  const AggregateRow * e = find_aggregate(t.aggregates, "expert", "all");
  const AggregateRow * b = find_aggregate(t.aggregates, "bb", "all");
  const AggregateRow * d = find_aggregate(t.aggregates, "bcd", "all");
  const double dt = seconds_since(t0);
  if (!e || !b || !d || b->mean_pct <= 0.0) {
    return {false, "missing aggregates"};
  }
  const double ratio = e->mean_pct / b->mean_pct;
  const bool ok = ratio >= 1.2 && e->mean_efficiency >= d->mean_efficiency && dt < 900.0;
  return {ok, fmt("pct expert %.3f vs bb %.3f (x%.2f); eff/m expert %.5f vs bcd %.5f; "
    "expert incomplete %zu/%zu; %.0f s",
    e->mean_pct, b->mean_pct, ratio, e->mean_efficiency, d->mean_efficiency, e->incomplete,
    e->episodes, dt)};
}

bool partition_ok(const BlockedGrid & g, const std::vector<BcdCell> & cells)
{
  std::vector<int> hits(g.blocked.size(), 0);
  for (const auto & cell : cells) {
    for (std::size_t i = 0; i < cell.slices.size(); ++i) {
      const auto & s = cell.slices[i];
      if (i > 0 && s.col != cell.slices[i - 1].col + 1) {
        return false;
      }
      for (int r = s.row_lo; r <= s.row_hi; ++r) {
        ++hits[static_cast<std::size_t>(r) * g.cols + s.col];
      }
    }
  }
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (hits[i] != (g.blocked[i] ? 0 : 1)) {
      return false;
    }
  }
  return true;
}

Outcome a6()
{
  const CameraModel cam;
  const BcdConfig bc;
  double worst = 1.0;
  bool parts = true;
  for (ScenarioId id : {ScenarioId::GridWorld, ScenarioId::EShape, ScenarioId::DisconnectedPaths,
      ScenarioId::BranchingCorridor, ScenarioId::RockReef})
  {
    const WorldMap m = generate_scenario({id, 0, {}});
    const Sensor sensor(m, cam);
    PathFollower f(bcd_plan(m, m.spawn_pose().x, m.spawn_pose().y, bc, cam));
    SimParams sim;
    sim.max_steps = 100000;
    const MetricsSummary s = metrics_from_result(m, run_episode(m, sensor, &f, sim, 0));
    worst = std::min(worst, s.pct_ooi_seen);
    const BlockedGrid g = blocked_grid(m, bc.clearance);
    parts &= partition_ok(g, bcd_decompose(g));
  }
  BlockedGrid g;
  g.cols = 12;
  g.rows = 12;
  g.blocked.assign(144, 0);
  for (int c = 5; c <= 6; ++c) {
    for (int r = 5; r <= 6; ++r) {
      g.blocked[r * 12 + c] = 1;
    }
  }
  const auto cells = bcd_decompose(g);
  parts &= partition_ok(g, cells);
  return {worst >= 0.95 && parts && cells.size() == 4,
    fmt("min OOI seen %.4f over 5 scenarios, partition %s, centered obstacle -> %zu cells", worst,
    parts ? "ok" : "bad", cells.size())};
}

Outcome a7()
{
  Rng rng(7);
  const int T = 100;
  const double sigma = 0.5;
  bool pinned = true;
  double sx = 0, sxx = 0, sy = 0, syy = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double ax = rng.uniform(-5, 5), ay = rng.uniform(-5, 5);
    const double bx = rng.uniform(-5, 5), by = rng.uniform(-5, 5);
    const auto pts = sample_bridge(ax, ay, bx, by, T, sigma, rng);
    pinned &= pts.front() == std::pair{ax, ay} && pts.back() == std::pair{bx, by};
    const double x = pts[T / 2].first - (ax + bx) / 2;
    const double y = pts[T / 2].second - (ay + by) / 2;
    sx += x;
    sxx += x * x;
    sy += y;
    syy += y * y;
  }
  const double want = sigma * sigma * T / 4;
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double err = std::max(std::abs(vx - want), std::abs(vy - want)) / want;
  return {pinned && err < 0.1,
    fmt("endpoints pinned %s, midpoint var x %.3f y %.3f vs %.3f (max rel err %.3f)",
    pinned ? "yes" : "no", vx, vy, want, err)};
}

Outcome a8()
{
  const auto t0 = std::chrono::steady_clock::now();
  const CameraModel cam;
  SimParams sim;
  sim.max_steps = 200;
  std::vector<LabeledSample> data;
  int w = 0;
  for (ScenarioId id : oyster_scenarios()) {
    const WorldMap m = generate_scenario({id, static_cast<std::uint64_t>(200 + w), {}});
    const Sensor sensor(m, cam);
    LabelingOptions o;
    o.count = 500;
    o.scenario_id = std::string(scenario_name(id));
    auto v = collect_expert_samples(m, sensor, ExpertConfig{}, sim, w++, o);
    data.insert(data.end(), v.begin(), v.end());
  }
  const TrainResult r = train_bc(data, {}, TrainerConfig{});
  const ExpertConfig ex;

  // (a) Same grids, different ooi_kind: the policy only sees I_DS, so the
  // streams and therefore the actions must match bit for bit.
  const WorldMap reef = generate_scenario({ScenarioId::RockReef, 0, {}});
  const WorldMap relabeled(reef.width_m(), reef.height_m(), reef.cell_size(), reef.heights(),
    reef.ooi(), reef.ooi_kind() == "oyster" ? "rock" : "oyster", reef.spawn_pose(),
    reef.obstacle_threshold());
  const Sensor s1(reef, cam), s2(relabeled, cam);
  LearnedController c1(r.model, ex.delta_yaw, ex.delta_pitch);
  LearnedController c2(r.model, ex.delta_yaw, ex.delta_pitch);
  const SimParams run = budgeted(SimParams{}, 400.0);
  const EpisodeResult e1 = run_episode(reef, s1, &c1, run, 0);
  const EpisodeResult e2 = run_episode(relabeled, s2, &c2, run, 0);
  const bool same = !e1.log.steps.empty() && e1.log.steps == e2.log.steps &&
    reef.ooi_kind() != relabeled.ooi_kind();

  // (b) No retraining on RockReef.
  CompareConfig c;
  c.methods = {"learned", "bb"};
  c.scenarios = {ScenarioId::RockReef};
  c.seeds = 10;
  c.distance_budget = 400.0;
  c.model = &r.model;
  const CompareTable t = compare(c);
  const AggregateRow * l = find_aggregate(t.aggregates, "learned", "rock_reef");
  const AggregateRow * b = find_aggregate(t.aggregates, "bb", "rock_reef");
  if (!l || !b || b->mean_pct <= 0.0) {
    return {false, "missing aggregates"};
  }
  const double ratio = l->mean_pct / b->mean_pct;
  return {same && ratio >= 1.2,
    fmt("actions identical across ooi_kind %s (%zu steps); rock_reef pct learned %.3f vs bb %.3f "
    "(x%.2f); %.0f s", same ? "yes" : "no", e1.log.steps.size(), l->mean_pct, b->mean_pct, ratio,
    seconds_since(t0))};
}

int run_cli(const fs::path & dir, const std::string & args)
{
  const std::string cmd = std::string(UIVNAV_CLI_PATH) + " --out-dir " + dir.string() + " " +
    args + " >>" + (dir / "cli_stdout.txt").string() + " 2>>" + (dir / "cli_stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome a9()
{
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> pipeline = {
    "gen-world --scenario branching_corridor --seed 3 -o world.json",
    "render --world world.json --stem frame",
    "expert-label --world world.json --steps 120 --seed 4 -o data",
    "--set trainer.epochs=2 train --data data -o model.json",
    "run --world world.json --method learned --model model.json --budget 60 -o learned.jsonl",
    "run --world world.json --method bb --seed 5 --budget 60 -o bb.jsonl",
    "run --world world.json --method expert --budget 60 -o expert.jsonl --frames frames",
    "pwm-dump --log expert.jsonl -o pwm.txt",
    "compare --methods expert,bb,bcd --scenarios gridworld,rock_reef --seeds 2 --budget 60 -o report",
  };
  const fs::path base = fs::temp_directory_path() / ("uivnav_a9_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const fs::path d1 = base / "one", d2 = base / "two";
  for (const auto & d : {d1, d2}) {
    fs::create_directories(d);
    for (const auto & step : pipeline) {
      if (run_cli(d, step) != 0) {
        fs::remove_all(base);
        return {false, "pipeline step failed: " + step};
      }
    }
  }
  std::size_t files = 0, differ = 0;
  std::string first_diff;
  for (const auto & e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) {
      continue;
    }
    const fs::path rel = fs::relative(e.path(), d1);
    ++files;
    const fs::path other = d2 / rel;
    if (!fs::exists(other) || read_file_text(e.path().string()) != read_file_text(other.string())) {
      ++differ;
      if (first_diff.empty()) {
        first_diff = rel.string();
      }
    }
  }
  fs::remove_all(base);
  return {files > 0 && differ == 0,
    fmt("%zu files compared, %zu differ%s%s, %.0f s", files, differ, first_diff.empty() ? "" : ": ",
    first_diff.c_str(), seconds_since(t0))};
}

}  // namespace

// Optional arguments pick criteria by name, e.g. `acceptance A1 A9`.
int main(int argc, char ** argv)
{
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
    {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
    {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9},
  };
  int failed = 0;
  for (const auto & [name, fn] : checks) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) {
      continue;
    }
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception & e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
