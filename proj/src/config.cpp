#include "uivnav/config.hpp"

#include "uivnav/image.hpp"
#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

void EvalConfig::validate() const
{
  if (seeds < 1) {
    throw ParameterError("eval.seeds must be >= 1");
  }
  if (!(distance_budget >= 0.0)) {
    throw ParameterError("eval.distance_budget must be >= 0");
  }
  if (parallel < 1) {
    throw ParameterError("eval.parallel must be >= 1");
  }
}

ExpertConfig RunConfig::expert_resolved() const
{
  ExpertConfig e = expert;
  e.max_range = camera.max_range;
  return e;
}

void RunConfig::validate() const
{
  world.validate();
  camera.validate();
  sim.validate();
  expert_resolved().validate();
  trainer.validate();
  bridge.validate();
  bcd.validate();
  actuation.validate();
  eval.validate();
}

json to_json(const RunConfig & c)
{
  return {
    {"world", to_json(c.world)},
    {"camera", to_json(c.camera)},
    {"sim", to_json(c.sim)},
    {"expert", to_json(c.expert)},
    {"trainer", to_json(c.trainer)},
    {"planner", {{"bridge", to_json(c.bridge)}, {"bcd", to_json(c.bcd)}}},
    {"actuation", to_json(c.actuation)},
    {"eval", {
        {"seeds", c.eval.seeds}, {"seed_base", c.eval.seed_base},
        {"distance_budget", c.eval.distance_budget}, {"parallel", c.eval.parallel}}},
  };
}

RunConfig run_config_from_json(const json & j)
{
  RunConfig c;
  JsonFields f(j, "config");
  if (f.has("world")) {
    c.world = scenario_params_from_json(f.sub("world"), c.world);
  }
  if (f.has("camera")) {
    c.camera = camera_from_json(f.sub("camera"), c.camera);
  }
  if (f.has("sim")) {
    c.sim = sim_params_from_json(f.sub("sim"), c.sim);
  }
  if (f.has("expert")) {
    c.expert = expert_config_from_json(f.sub("expert"), c.expert);
  }
  if (f.has("trainer")) {
    c.trainer = trainer_config_from_json(f.sub("trainer"), c.trainer);
  }
  if (f.has("planner")) {
    JsonFields p(f.sub("planner"), "config.planner");
    if (p.has("bridge")) {
      c.bridge = bridge_config_from_json(p.sub("bridge"), c.bridge);
    }
    if (p.has("bcd")) {
      c.bcd = bcd_config_from_json(p.sub("bcd"), c.bcd);
    }
    p.finish();
  }
  if (f.has("actuation")) {
    c.actuation = actuation_params_from_json(f.sub("actuation"), c.actuation);
  }
  if (f.has("eval")) {
    JsonFields e(f.sub("eval"), "config.eval");
    e.optional("seeds", c.eval.seeds);
    e.optional("seed_base", c.eval.seed_base);
    e.optional("distance_budget", c.eval.distance_budget);
    e.optional("parallel", c.eval.parallel);
    e.finish();
  }
  f.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string & path)
{
  const std::string text = read_file_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void apply_override(RunConfig & c, const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParameterError("override '" + assignment + "': expected key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error &) {
    value = raw;
  }
  json doc = to_json(c);
  json * node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ParameterError("override: unknown config key '" + key + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) {
      break;
    }
    start = dot + 1;
  }
  if (node->is_object()) {
    throw ParameterError("override: '" + key + "' names a section, not a value");
  }
  *node = value;
  try {
    c = run_config_from_json(doc);
  } catch (const ParseError & e) {
    throw ParameterError(std::string("override '") + assignment + "': " + e.what());
  }
}

RunConfig resolve_config(const std::string & path, const std::vector<std::string> & overrides)
{
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  for (const auto & o : overrides) {
    apply_override(c, o);
  }
  c.validate();
  return c;
}

}  // namespace uivnav
