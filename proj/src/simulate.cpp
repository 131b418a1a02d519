#include "uivnav/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "uivnav/common.hpp"
#include "uivnav/json_fields.hpp"

namespace uivnav
{

using nlohmann::json;

void SimParams::validate() const
{
  if (!(speed > 0.0)) {
    throw ParameterError("sim: speed must be positive");
  }
  if (!(control_dt > 0.0)) {
    throw ParameterError("sim: control_dt must be positive");
  }
  if (!(z_min < z_max)) {
    throw ParameterError("sim: need z_min < z_max");
  }
  if (!(collision_radius >= 0.0)) {
    throw ParameterError("sim: collision_radius must be >= 0");
  }
  if (max_steps < 0) {
    throw ParameterError("sim: max_steps must be >= 0");
  }
  if (!(distance_budget >= 0.0)) {
    throw ParameterError("sim: distance_budget must be >= 0");
  }
  if (!(exec_noise_deg >= 0.0)) {
    throw ParameterError("sim: exec_noise_deg must be >= 0");
  }
}

json to_json(const SimParams & p)
{
  return {
    {"speed", p.speed}, {"control_dt", p.control_dt}, {"z_min", p.z_min}, {"z_max", p.z_max},
    {"collision_radius", p.collision_radius}, {"max_steps", p.max_steps},
    {"distance_budget", p.distance_budget}, {"exec_noise_deg", p.exec_noise_deg},
  };
}

SimParams sim_params_from_json(const json & j, SimParams p)
{
  JsonFields f(j, "sim");
  f.optional("speed", p.speed);
  f.optional("control_dt", p.control_dt);
  f.optional("z_min", p.z_min);
  f.optional("z_max", p.z_max);
  f.optional("collision_radius", p.collision_radius);
  f.optional("max_steps", p.max_steps);
  f.optional("distance_budget", p.distance_budget);
  f.optional("exec_noise_deg", p.exec_noise_deg);
  f.finish();
  p.validate();
  return p;
}

RobotPose step_dynamics(const RobotPose & pose, const ActionClass & action, const SimParams & p)
{
  RobotPose out = pose;
  out.yaw = normalize_deg(pose.yaw + action.yaw_change());
  out.pitch = std::clamp(pose.pitch + action.pitch_change(), -30.0, 30.0);
  const double d = p.step_length();
  const double yaw = deg2rad(out.yaw);
  const double pitch = deg2rad(out.pitch);
  out.x = pose.x + d * std::cos(pitch) * std::cos(yaw);
  out.y = pose.y - d * std::cos(pitch) * std::sin(yaw);
  out.z = std::clamp(pose.z + d * std::sin(pitch), p.z_min, p.z_max);
  return out;
}

bool check_collision(const WorldMap & map, const RobotPose & pose, const SimParams & p)
{
  const double r = p.collision_radius;
  const double c = map.cell_size();
  const int c_lo = std::max(0, static_cast<int>(std::floor((pose.x - r) / c)));
  const int c_hi = std::min(map.cols() - 1, static_cast<int>(std::floor((pose.x + r) / c)));
  const int r_lo = std::max(0, static_cast<int>(std::floor((pose.y - r) / c)));
  const int r_hi = std::min(map.rows() - 1, static_cast<int>(std::floor((pose.y + r) / c)));
  for (int row = r_lo; row <= r_hi; ++row) {
    for (int col = c_lo; col <= c_hi; ++col) {
      const double dx = std::max({col * c - pose.x, 0.0, pose.x - (col + 1) * c});
      const double dy = std::max({row * c - pose.y, 0.0, pose.y - (row + 1) * c});
      if (std::hypot(dx, dy) <= r && map.height_at(col, row) >= pose.z - r) {
        return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Controllers

ActionClass ExpertController::act(const Image & seg, const Image & depth)
{
  return expert_policy(seg, depth, config_);
}

ActionClass LearnedController::act(const SegDepthImage & ids)
{
  ActionClass a = model_.predict(ids).action;
  a.delta_yaw = delta_yaw_;
  a.delta_pitch = delta_pitch_;
  return a;
}

PathFollower::PathFollower(PlannedPath path)
: path_(std::move(path))
{
  if (path_.points.empty()) {
    throw ParameterError("path follower: empty path");
  }
  cum_.assign(path_.points.size(), 0.0);
  for (std::size_t i = 1; i < path_.points.size(); ++i) {
    const auto & a = path_.points[i - 1];
    const auto & b = path_.points[i];
    cum_[i] = cum_[i - 1] + std::hypot(b.x - a.x, b.y - a.y);
  }
}

std::pair<double, double> PathFollower::point_at(double s) const
{
  if (s <= 0.0) {
    return {path_.points.front().x, path_.points.front().y};
  }
  if (s >= cum_.back()) {
    return {path_.points.back().x, path_.points.back().y};
  }
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cum_.begin());
  const auto & a = path_.points[i - 1];
  const auto & b = path_.points[i];
  const double t = (s - cum_[i - 1]) / (cum_[i] - cum_[i - 1]);
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double PathFollower::yaw_toward(double s_from, double ahead) const
{
  const auto [x0, y0] = point_at(s_from);
  auto [x1, y1] = point_at(s_from + ahead);
  if (x1 == x0 && y1 == y0) {
    // At the end of the path: keep facing along the last segment.
    for (std::size_t i = path_.points.size(); i-- > 1; ) {
      const auto & a = path_.points[i - 1];
      const auto & b = path_.points[i];
      if (a.x != b.x || a.y != b.y) {
        return normalize_deg(rad2deg(-std::atan2(b.y - a.y, b.x - a.x)));
      }
    }
    return 0.0;
  }
  return normalize_deg(rad2deg(-std::atan2(y1 - y0, x1 - x0)));
}

RobotPose PathFollower::start_pose() const
{
  RobotPose p;
  p.x = path_.points.front().x;
  p.y = path_.points.front().y;
  p.z = path_.altitude;
  p.yaw = yaw_toward(0.0, std::min(2.0, cum_.back()));
  return p;
}

std::optional<RobotPose> PathFollower::next_pose(const RobotPose & pose, const SimParams & p)
{
  if (s_ >= cum_.back()) {
    return std::nullopt;
  }
  s_ = std::min(cum_.back(), s_ + p.step_length());
  const auto [x, y] = point_at(s_);
  RobotPose out = pose;
  out.x = x;
  out.y = y;
  out.z = path_.altitude;
  out.pitch = 0.0;
  out.yaw = yaw_toward(s_, p.step_length());
  return out;
}

// ---------------------------------------------------------------------------
// Episodes

std::string status_name(EpisodeStatus s)
{
  switch (s) {
    case EpisodeStatus::BudgetExhausted: return "budget_exhausted";
    case EpisodeStatus::OutOfBounds: return "out_of_bounds";
    case EpisodeStatus::Collision: return "collision";
    case EpisodeStatus::PathComplete: return "path_complete";
    case EpisodeStatus::ControllerError: return "controller_error";
  }
  return "controller_error";
}

EpisodeStatus parse_status(const std::string & s)
{
  for (auto st : {EpisodeStatus::BudgetExhausted, EpisodeStatus::OutOfBounds,
      EpisodeStatus::Collision, EpisodeStatus::PathComplete, EpisodeStatus::ControllerError})
  {
    if (status_name(st) == s) {
      return st;
    }
  }
  throw ParseError("episode: unknown status '" + s + "'");
}

bool StepRecord::operator==(const StepRecord & o) const
{
  const bool same_action = action.has_value() == o.action.has_value() &&
    (!action || action->same_classes(*o.action));
  return step == o.step && pose == o.pose && same_action && over_ooi == o.over_ooi &&
         newly_seen_cells == o.newly_seen_cells && newly_seen_ooi == o.newly_seen_ooi &&
         cumulative_distance == o.cumulative_distance;
}

EpisodeResult run_episode(
  const WorldMap & map, const Sensor & sensor, ControllerRef controller, const SimParams & params,
  std::uint64_t seed, const EpisodeOptions & options)
{
  params.validate();
  EpisodeResult result;
  EpisodeLog & log = result.log;
  log.method = options.method;
  log.scenario = options.scenario;
  log.seed = seed;
  log.world_digest = map.digest();

  RobotPose pose;
  if (auto * pc = std::get_if<PoseController *>(&controller)) {
    pose = options.start ? *options.start : (*pc)->start_pose();
  } else {
    pose = options.start ? *options.start : map.spawn_pose();
  }
  pose = canonical_pose(pose);
  log.final_pose = pose;
  if (!map.bounds().contains(pose.x, pose.y)) {
    log.status = EpisodeStatus::OutOfBounds;
    log.message = "start pose is out of bounds";
    return result;
  }
  if (check_collision(map, pose, params)) {
    log.status = EpisodeStatus::Collision;
    log.message = "start pose collides with terrain";
    return result;
  }

  if (!options.frame_dump_dir.empty()) {
    std::filesystem::create_directories(options.frame_dump_dir);
  }
  Rng noise(derive_seed(seed, 7));
  std::vector<std::uint8_t> seen(map.cell_count(), 0);
  double cumulative = 0.0;
  log.status = EpisodeStatus::BudgetExhausted;
  for (int step = 0; step < params.max_steps; ++step) {
    RenderOutput view;
    std::optional<ActionClass> action;
    std::optional<RobotPose> next;
    try {
      view = sensor.render_full(pose);
      if (auto * fc = std::get_if<FrameController *>(&controller)) {
        action = (*fc)->act(view.frame.seg, view.frame.depth);
      } else if (auto * sc = std::get_if<SegDepthController *>(&controller)) {
        const SegDepthImage ids = compose_segdepth(view.frame.seg, view.frame.depth);
        const int n = (*sc)->input_size();
        action = (*sc)->act(downsample(ids, n, n));
      } else {
        next = std::get<PoseController *>(controller)->next_pose(pose, params);
        if (!next) {
          log.status = EpisodeStatus::PathComplete;
          break;
        }
      }
    } catch (const std::exception & e) {
      log.status = EpisodeStatus::ControllerError;
      log.message = e.what();
      break;
    }
    if (action) {
      next = step_dynamics(pose, *action, params);
      if (params.exec_noise_deg > 0.0) {
        next->yaw = normalize_deg(next->yaw + params.exec_noise_deg * noise.normal());
      }
    }
    if (!options.frame_dump_dir.empty()) {
      Frame f = view.frame;
      f.segdepth = compose_segdepth(f.seg, f.depth).image;
      char stem[32];
      std::snprintf(stem, sizeof(stem), "step_%06d", step);
      export_frame(f, pose, sensor.camera(), options.frame_dump_dir, stem);
    }

    const double d = std::sqrt(
      (next->x - pose.x) * (next->x - pose.x) + (next->y - pose.y) * (next->y - pose.y) +
      (next->z - pose.z) * (next->z - pose.z));
    if (params.distance_budget > 0.0 && cumulative + d > params.distance_budget + 1e-9) {
      log.status = EpisodeStatus::BudgetExhausted;
      break;
    }
    if (!map.bounds().contains(next->x, next->y)) {
      log.status = EpisodeStatus::OutOfBounds;
      break;
    }
    if (check_collision(map, *next, params)) {
      log.status = EpisodeStatus::Collision;
      break;
    }

    StepRecord rec;
    rec.step = step;
    rec.pose = pose;
    rec.action = action;
    const CellIndex ci = map.cell_of(pose.x, pose.y);
    rec.over_ooi = map.ooi_at(ci.col, ci.row);
    for (std::uint32_t cell : view.pixel_cells) {
      if (cell != kNoCell && !seen[cell]) {
        seen[cell] = 1;
        ++rec.newly_seen_cells;
        rec.newly_seen_ooi += map.ooi()[cell] != 0;
      }
    }
    cumulative += d;
    rec.cumulative_distance = cumulative;
    log.steps.push_back(rec);
    pose = *next;
  }
  log.final_pose = pose;
  for (std::uint32_t i = 0; i < seen.size(); ++i) {
    if (seen[i]) {
      result.seen_cells.push_back(i);
    }
  }
  return result;
}

namespace
{

json pose_json(const RobotPose & p)
{
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}, {"pitch", p.pitch}};
}

RobotPose pose_from(const json & j, const std::string & ctx)
{
  JsonFields f(j, ctx);
  RobotPose p;
  p.x = f.require<double>("x");
  p.y = f.require<double>("y");
  p.z = f.require<double>("z");
  p.yaw = f.require<double>("yaw");
  p.pitch = f.require<double>("pitch");
  f.finish();
  return p;
}

}  // namespace

std::vector<LabeledSample> collect_expert_samples(
  const WorldMap & map, const Sensor & sensor, const ExpertConfig & expert,
  const SimParams & params, std::uint64_t seed, const LabelingOptions & options)
{
  params.validate();
  expert.validate();
  if (options.count < 1) {
    throw ParameterError("expert labeling: count must be >= 1");
  }
  if (!(options.z_lo <= options.z_hi) || options.z_lo < params.z_min || options.z_hi > params.z_max) {
    throw ParameterError("expert labeling: start altitude range must lie inside [z_min, z_max]");
  }
  Rng starts(derive_seed(seed, 11));
  Rng noise(derive_seed(seed, 7));
  auto random_start = [&]() {
      for (int tries = 0; tries < 10000; ++tries) {
        RobotPose p;
        p.x = starts.uniform(0.0, map.width_m());
        p.y = starts.uniform(0.0, map.height_m());
        p.z = starts.uniform(options.z_lo, options.z_hi);
        p.yaw = normalize_deg(starts.uniform(-180.0, 180.0));
        if (map.bounds().contains(p.x, p.y) && !check_collision(map, p, params)) {
          return p;
        }
      }
      throw PlanningError("expert labeling: no collision-free start pose found");
    };

  std::vector<LabeledSample> out;
  out.reserve(options.count);
  RobotPose pose = map.spawn_pose();
  if (check_collision(map, pose, params)) {
    pose = random_start();
  }
  int step = 0;
  while (static_cast<int>(out.size()) < options.count) {
    const Frame f = sensor.render(pose);
    const ActionClass a = expert_policy(f.seg, f.depth, expert);
    LabeledSample s;
    s.image = downsample(compose_segdepth(f.seg, f.depth), options.input_size, options.input_size);
    s.c_yaw = a.c_yaw;
    s.c_pitch = a.c_pitch;
    s.provenance = Provenance::Expert;
    s.scenario_id = options.scenario_id;
    s.step = static_cast<int>(out.size());
    out.push_back(std::move(s));

    RobotPose next = step_dynamics(pose, a, params);
    if (params.exec_noise_deg > 0.0) {
      next.yaw = normalize_deg(next.yaw + params.exec_noise_deg * noise.normal());
    }
    ++step;
    if (step >= params.max_steps || !map.bounds().contains(next.x, next.y) ||
      check_collision(map, next, params))
    {
      pose = random_start();
      step = 0;
    } else {
      pose = next;
    }
  }
  return out;
}

std::string episode_to_jsonl(const EpisodeLog & log, const json & config)
{
  std::ostringstream out;
  const std::string config_text = config.dump();
  json header = {
    {"type", "header"}, {"tool_version", kToolVersion},
    {"config_hash", hex64(fnv1a(config_text))}, {"seed", log.seed}, {"method", log.method},
    {"scenario", log.scenario}, {"world_digest", log.world_digest}, {"config", config},
  };
  out << header.dump() << '\n';
  for (const auto & r : log.steps) {
    json line = {
      {"type", "step"}, {"step", r.step}, {"pose", pose_json(r.pose)},
      {"over_ooi", r.over_ooi}, {"newly_seen_cells", r.newly_seen_cells},
      {"newly_seen_ooi", r.newly_seen_ooi}, {"cumulative_distance", r.cumulative_distance},
    };
    if (r.action) {
      line["action"] = {{"c_yaw", r.action->c_yaw}, {"c_pitch", r.action->c_pitch}};
    } else {
      line["action"] = nullptr;
    }
    out << line.dump() << '\n';
  }
  json end = {
    {"type", "end"}, {"status", status_name(log.status)}, {"steps", log.steps.size()},
    {"final_pose", pose_json(log.final_pose)}, {"message", log.message},
  };
  out << end.dump() << '\n';
  return out.str();
}

EpisodeLog episode_from_jsonl(const std::string & text)
{
  EpisodeLog log;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  bool have_header = false;
  bool have_end = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    const std::string ctx = "episode line " + std::to_string(n);
    if (have_end) {
      throw ParseError(ctx + ": content after the end line");
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &) {
      throw ParseError(ctx + ": malformed JSON");
    }
    JsonFields f(j, ctx);
    const auto type = f.require<std::string>("type");
    if (type == "header") {
      f.require<std::string>("tool_version");
      f.require<std::string>("config_hash");
      log.seed = f.require<std::uint64_t>("seed");
      log.method = f.require<std::string>("method");
      log.scenario = f.require<std::string>("scenario");
      log.world_digest = f.require<std::string>("world_digest");
      f.sub("config");
      have_header = true;
    } else if (type == "step") {
      if (!have_header) {
        throw ParseError(ctx + ": step before header");
      }
      StepRecord r;
      r.step = f.require<int>("step");
      r.pose = pose_from(f.sub("pose"), ctx + ".pose");
      r.over_ooi = f.require<bool>("over_ooi");
      r.newly_seen_cells = f.require<std::size_t>("newly_seen_cells");
      r.newly_seen_ooi = f.require<std::size_t>("newly_seen_ooi");
      r.cumulative_distance = f.require<double>("cumulative_distance");
      const json & a = f.sub("action");
      if (!a.is_null()) {
        JsonFields af(a, ctx + ".action");
        ActionClass ac;
        ac.c_yaw = af.require<int>("c_yaw");
        ac.c_pitch = af.require<int>("c_pitch");
        af.finish();
        if (!valid_class(ac.c_yaw) || !valid_class(ac.c_pitch)) {
          throw ParseError(ctx + ": action class outside 0..6");
        }
        r.action = ac;
      }
      if (r.step != static_cast<int>(log.steps.size())) {
        throw ParseError(ctx + ": step indices are not contiguous");
      }
      log.steps.push_back(r);
    } else if (type == "end") {
      log.status = parse_status(f.require<std::string>("status"));
      const auto count = f.require<std::size_t>("steps");
      log.final_pose = pose_from(f.sub("final_pose"), ctx + ".final_pose");
      log.message = f.require<std::string>("message");
      if (count != log.steps.size()) {
        throw ParseError(ctx + ": step count does not match the step lines");
      }
      have_end = true;
    } else {
      throw ParseError(ctx + ": unknown line type '" + type + "'");
    }
    f.finish();
  }
  if (!have_header || !have_end) {
    throw ParseError("episode: missing header or end line");
  }
  return log;
}

}  // namespace uivnav
