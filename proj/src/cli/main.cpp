// uivnav: command-line entry point for the navigation pipeline.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "uivnav/actuation.hpp"
#include "uivnav/config.hpp"
#include "uivnav/dataset.hpp"
#include "uivnav/eval.hpp"
#include "uivnav/image.hpp"
#include "uivnav/network.hpp"
#include "uivnav/server.hpp"
#include "uivnav/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uivnav;

namespace
{

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Common
{
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

std::string resolve(const Common & c, const std::string & path)
{
  if (path.empty() || path == "-" || fs::path(path).is_absolute()) {
    return path;
  }
  return (fs::path(c.out_dir) / path).string();
}

// Bad argument values: reported like parse errors.
struct UsageError : ParameterError
{
  using ParameterError::ParameterError;
};

void ensure_parent(const std::string & path)
{
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) {
      throw IoError("cannot create " + parent.string() + ": " + ec.message());
    }
  }
}

void write_output(const std::string & path, const std::string & text)
{
  if (path == "-") {
    std::cout << text;
    return;
  }
  ensure_parent(path);
  write_file(path, text);
}

json provenance(const RunConfig & cfg, std::uint64_t seed, const std::string & command)
{
  return {
    {"tool_version", kToolVersion}, {"config_hash", hex64(fnv1a(to_json(cfg).dump()))},
    {"seed", seed}, {"command", command},
  };
}

std::vector<ScenarioId> parse_scenarios(const std::string & list)
{
  if (list == "all") {
    return oyster_scenarios();
  }
  std::vector<ScenarioId> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto id = parse_scenario(item);
    if (!id) {
      throw UsageError("unknown scenario '" + item + "'");
    }
    out.push_back(*id);
  }
  if (out.empty()) {
    throw UsageError("no scenarios given");
  }
  return out;
}

std::vector<std::string> split(const std::string & list)
{
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

RobotPose parse_pose(const std::string & text)
{
  const auto f = split(text);
  if (f.size() != 5) {
    throw UsageError("--pose expects x,y,z,yaw,pitch");
  }
  try {
    return canonical_pose({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
        std::stod(f[4])});
  } catch (const std::logic_error &) {
    throw UsageError("--pose: bad number in '" + text + "'");
  }
}

std::vector<LabeledSample> load_datasets(const Common & c, const std::string & list)
{
  std::vector<LabeledSample> all;
  for (const auto & dir : split(list)) {
    auto part = load_dataset(resolve(c, dir));
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return all;
}

LabelServer * g_server = nullptr;

void on_signal(int)
{
  if (g_server != nullptr) {
    g_server->stop();
  }
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"uivnav: localization-free, information-driven navigation workbench"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON run config (any subset of sections)");
  app.add_option("--set", common.overrides, "Override one key, e.g. sim.speed=0.5")
  ->allow_extra_args(false);
  app.add_option("--out-dir", common.out_dir, "Base directory for all relative paths");

  // gen-world
  auto * gen = app.add_subcommand("gen-world", "Generate a scenario world file");
  std::string gen_scenario;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "world.json";
  gen->add_option("--scenario", gen_scenario, "gridworld, eshape, disconnected_paths, "
    "branching_corridor or rock_reef")->required();
  gen->add_option("--seed", gen_seed);
  gen->add_option("-o,--output", gen_out);

  // render
  auto * rnd = app.add_subcommand("render", "Render seg/depth/segdepth PNGs at a pose");
  std::string rnd_world;
  std::string rnd_pose;
  std::string rnd_stem = "frame";
  rnd->add_option("--world", rnd_world)->required();
  rnd->add_option("--pose", rnd_pose, "x,y,z,yaw,pitch (default: spawn)");
  rnd->add_option("--stem", rnd_stem);

  // expert-label
  auto * lab = app.add_subcommand("expert-label", "Generate an expert-labeled dataset");
  std::string lab_world;
  int lab_steps = 500;
  std::uint64_t lab_seed = 0;
  std::string lab_out = "dataset";
  lab->add_option("--world", lab_world)->required();
  lab->add_option("--steps", lab_steps, "Number of labeled frames");
  lab->add_option("--seed", lab_seed);
  lab->add_option("-o,--output", lab_out, "Dataset directory");

  // train
  auto * trn = app.add_subcommand("train", "Behavior cloning on labeled datasets");
  std::string trn_data;
  std::string trn_val;
  std::string trn_out = "model.json";
  trn->add_option("--data", trn_data, "Comma-separated dataset directories")->required();
  trn->add_option("--val-data", trn_val, "Held-out dataset directories; otherwise a split of --data");
  trn->add_option("-o,--output", trn_out);

  // run
  auto * run = app.add_subcommand("run", "Run one episode and write its JSONL log");
  std::string run_world;
  std::string run_method_name = "expert";
  std::string run_model;
  std::uint64_t run_seed = 0;
  double run_budget = -1.0;
  std::string run_out = "episode.jsonl";
  std::string run_frames;
  run->add_option("--world", run_world)->required();
  run->add_option("--method", run_method_name, "expert, learned, bb or bcd");
  run->add_option("--model", run_model, "Policy model for --method learned");
  run->add_option("--seed", run_seed);
  run->add_option("--budget", run_budget, "Distance budget in meters (default: sim config)");
  run->add_option("-o,--output", run_out);
  run->add_option("--frames", run_frames, "Directory for per-step PNG dumps");

  // compare
  auto * cmp = app.add_subcommand("compare", "Benchmark methods over scenarios and seeds");
  std::string cmp_methods = "expert,bb,bcd";
  std::string cmp_scenarios = "all";
  int cmp_seeds = -1;
  double cmp_budget = -1.0;
  int cmp_parallel = -1;
  std::string cmp_model;
  std::string cmp_out = "compare";
  int cmp_scale = 2;
  cmp->add_option("--methods", cmp_methods);
  cmp->add_option("--scenarios", cmp_scenarios, "'all' (the four oyster layouts) or a list");
  cmp->add_option("--seeds", cmp_seeds);
  cmp->add_option("--budget", cmp_budget);
  cmp->add_option("--parallel", cmp_parallel);
  cmp->add_option("--model", cmp_model);
  cmp->add_option("-o,--output", cmp_out, "Report directory");
  cmp->add_option("--overlay-scale", cmp_scale);

  // serve
  auto * srv = app.add_subcommand("serve", "Labeling server for the web UI");
  std::string srv_host = "127.0.0.1";
  int srv_port = 8080;
  std::string srv_static;
  srv->add_option("--host", srv_host);
  srv->add_option("--port", srv_port);
  srv->add_option("--static", srv_static, "UI bundle directory");

  // pwm-dump
  auto * pwm = app.add_subcommand("pwm-dump", "Thruster PWM lines for a logged episode");
  std::string pwm_log;
  std::string pwm_out = "-";
  pwm->add_option("--log", pwm_log, "Episode JSONL")->required();
  pwm->add_option("-o,--output", pwm_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  RunConfig cfg;
  try {
    cfg = resolve_config(common.config_path, common.overrides);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {

    if (*gen) {
      const auto id = parse_scenario(gen_scenario);
      if (!id) {
        throw UsageError("unknown scenario '" + gen_scenario + "'");
      }
      const WorldMap map = generate_scenario({*id, gen_seed, cfg.world});
      json j = world_to_json(map);
      j["provenance"] = provenance(cfg, gen_seed, "gen-world");
      j["provenance"]["scenario"] = scenario_name(*id);
      write_output(resolve(common, gen_out), j.dump() + "\n");
    } else if (*rnd) {
      const WorldMap map = load_world(resolve(common, rnd_world));
      const RobotPose pose = rnd_pose.empty() ? map.spawn_pose() : parse_pose(rnd_pose);
      Frame f = render(map, pose, cfg.camera);
      f.segdepth = compose_segdepth(f.seg, f.depth).image;
      const std::string dir = resolve(common, ".");
      export_frame(f, pose, cfg.camera, dir, rnd_stem);
    } else if (*lab) {
      const WorldMap map = load_world(resolve(common, lab_world));
      const Sensor sensor(map, cfg.camera);
      LabelingOptions opts;
      opts.count = lab_steps;
      opts.input_size = cfg.trainer.arch.input_size;
      opts.scenario_id = fs::path(lab_world).stem().string();
      const auto samples = collect_expert_samples(
        map, sensor, cfg.expert_resolved(), cfg.sim, lab_seed, opts);
      json prov = provenance(cfg, lab_seed, "expert-label");
      prov["world_digest"] = map.digest();
      prov["config"] = to_json(cfg);
      const auto summary = save_dataset(resolve(common, lab_out), samples, prov);
      std::cout << to_json(summary).dump() << "\n";
    } else if (*trn) {
      auto data = load_datasets(common, trn_data);
      std::vector<LabeledSample> val;
      if (!trn_val.empty()) {
        val = load_datasets(common, trn_val);
      } else if (cfg.trainer.validation_fraction > 0.0 && data.size() > 1) {
        // The tail of the data is held out; callers control order.
        const std::size_t n_val = std::min(data.size() - 1, static_cast<std::size_t>(
            std::floor(cfg.trainer.validation_fraction * static_cast<double>(data.size()))));
        val.assign(std::make_move_iterator(data.end() - n_val), std::make_move_iterator(data.end()));
        data.resize(data.size() - n_val);
      }
      const TrainResult r = train_bc(data, val, cfg.trainer);
      json j = model_to_json(r.model);
      j["provenance"] = provenance(cfg, cfg.trainer.seed, "train");
      j["provenance"]["trainer"] = to_json(cfg.trainer);
      j["provenance"]["train"] = to_json(r.train);
      if (r.validation) {
        j["provenance"]["validation"] = to_json(*r.validation);
      }
      j["provenance"]["epoch_loss"] = r.epoch_loss;
      write_output(resolve(common, trn_out), j.dump() + "\n");
      json report = {{"train", to_json(r.train)}};
      if (r.validation) {
        report["validation"] = to_json(*r.validation);
      }
      std::cout << report.dump() << "\n";
    } else if (*run) {
      const auto kind = parse_method(run_method_name);
      if (!kind) {
        throw UsageError("unknown method '" + run_method_name + "'");
      }
      const WorldMap map = load_world(resolve(common, run_world));
      const Sensor sensor(map, cfg.camera);
      std::optional<PolicyModel> model;
      if (*kind == MethodKind::Learned) {
        if (run_model.empty()) {
          throw UsageError("--method learned needs --model");
        }
        model = load_model(resolve(common, run_model), cfg.trainer.arch);
      }
      SimParams sim = run_budget >= 0.0 ? budgeted(cfg.sim, run_budget) : cfg.sim;
      const MethodSetup setup{cfg.camera, sim, cfg.expert_resolved(), cfg.bridge, cfg.bcd,
        model ? &*model : nullptr};
      EpisodeOptions opts;
      opts.method = method_name(*kind);
      opts.scenario = fs::path(run_world).stem().string();
      opts.frame_dump_dir = run_frames.empty() ? "" : resolve(common, run_frames);
      const EpisodeResult r = run_method(map, sensor, *kind, setup, run_seed, opts);
      json logcfg = to_json(cfg);
      logcfg["sim"] = to_json(sim);
      write_output(resolve(common, run_out), episode_to_jsonl(r.log, logcfg));
      const MetricsSummary m = metrics_from_result(map, r, sim.distance_budget);
      std::cerr << to_json(m).dump() << "\n";
      if (r.log.status == EpisodeStatus::ControllerError) {
        throw Error("controller failed: " + r.log.message);
      }
    } else if (*cmp) {
      CompareConfig c;
      c.methods = split(cmp_methods);
      c.scenarios = parse_scenarios(cmp_scenarios);
      c.seeds = cmp_seeds > 0 ? cmp_seeds : cfg.eval.seeds;
      c.seed_base = cfg.eval.seed_base;
      c.distance_budget = cmp_budget >= 0.0 ? cmp_budget : cfg.eval.distance_budget;
      c.parallel = cmp_parallel > 0 ? cmp_parallel : cfg.eval.parallel;
      c.scenario_params = cfg.world;
      c.camera = cfg.camera;
      c.sim = cfg.sim;
      c.expert = cfg.expert_resolved();
      c.bridge = cfg.bridge;
      c.bcd = cfg.bcd;
      std::optional<PolicyModel> model;
      if (!cmp_model.empty()) {
        model = load_model(resolve(common, cmp_model), cfg.trainer.arch);
        c.model = &*model;
      }
      CompareTable table = compare(c);
      table.config["run_config"] = to_json(cfg);
      emit_report(table, resolve(common, cmp_out), cmp_scale);
      std::cout << summary_text(table);
    } else if (*srv) {
      ServerOptions opts;
      opts.static_dir = srv_static.empty() ? "" : resolve(common, srv_static);
      opts.export_root = common.out_dir;
      LabelServer server(cfg, opts);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << srv_host << ":" << srv_port << "\n";
      if (!server.listen(srv_host, srv_port)) {
        g_server = nullptr;
        throw IoError("cannot listen on " + srv_host + ":" + std::to_string(srv_port));
      }
      g_server = nullptr;
    } else if (*pwm) {
      const EpisodeLog log = episode_from_jsonl(read_file_text(resolve(common, pwm_log)));
      std::string text;
      for (const auto & r : log.steps) {
        if (!r.action) {
          throw ParameterError("pwm-dump: step " + std::to_string(r.step) +
            " has no action (planned-path episodes carry none)");
        }
        text += pwm_line(r.step, classes_to_pwm(r.action->c_yaw, r.action->c_pitch, cfg.actuation));
        text += '\n';
      }
      write_output(resolve(common, pwm_out), text);
    }
  } catch (const UsageError & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
