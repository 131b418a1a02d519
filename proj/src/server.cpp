#include "uivnav/server.hpp"

#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

#include "httplib.h"
#include "uivnav/dataset.hpp"
#include "uivnav/image.hpp"
#include "uivnav/ir.hpp"
#include "uivnav/simulate.hpp"

namespace uivnav
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{

enum class Mode
{
  Label,
  Teleop,
  Replay,
};

std::string mode_name(Mode m)
{
  switch (m) {
    case Mode::Label: return "label";
    case Mode::Teleop: return "teleop";
    case Mode::Replay: return "replay";
  }
  return "label";
}

struct HttpError
{
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int status, const std::string & code, const std::string & message)
{
  throw HttpError{status, code, message};
}

json pose_json(const RobotPose & p)
{
  return {{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}, {"pitch", p.pitch}};
}

struct Session
{
  std::mutex mutex;
  std::string id;
  Mode mode = Mode::Label;
  std::string scenario;
  std::uint64_t seed = 0;
  std::shared_ptr<const WorldMap> world;
  std::unique_ptr<Sensor> sensor;
  RobotPose pose;
  int step = 0;
  double distance = 0.0;
  bool done = false;
  std::string status;
  std::vector<RobotPose> replay;  // recorded poses, replay mode only

  // Current frame.
  SegDepthImage small;  // what gets stored with a label
  std::vector<std::uint8_t> png;

  std::vector<LabeledSample> labels;
  int last_labeled = -1;
};

}  // namespace

struct LabelServer::Impl
{
  RunConfig config;
  ServerOptions options;
  httplib::Server http;
  std::shared_mutex store_mutex;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mt19937_64 id_rng{std::random_device{}()};

  Impl(RunConfig c, ServerOptions o)
  : config(std::move(c)), options(std::move(o)) {}

  void render(Session & s)
  {
    const Frame f = s.sensor->render(s.pose);
    const SegDepthImage full = compose_segdepth(f.seg, f.depth);
    const int n = config.trainer.arch.input_size;
    s.small = downsample(full, n, n);
    s.png = encode_png(full.image);
  }

  json frame_json(const Session & s) const
  {
    return {
      {"id", s.id}, {"mode", mode_name(s.mode)}, {"scenario", s.scenario},
      {"step", s.step}, {"pose", pose_json(s.pose)}, {"done", s.done},
      {"status", s.status}, {"labels", s.labels.size()},
      {"png_base64", base64_encode(s.png)},
    };
  }

  std::shared_ptr<Session> find(const std::string & id)
  {
    std::shared_lock lock(store_mutex);
    auto it = sessions.find(id);
    if (it == sessions.end()) {
      fail(404, "not_found", "no session '" + id + "'");
    }
    return it->second;
  }

  static json parse_body(const httplib::Request & req)
  {
    if (req.body.empty()) {
      return json::object();
    }
    try {
      json j = json::parse(req.body);
      if (!j.is_object()) {
        fail(400, "bad_request", "body must be a JSON object");
      }
      return j;
    } catch (const json::parse_error &) {
      fail(400, "bad_request", "body is not valid JSON");
    }
  }

  static int read_class(const json & body, const char * key)
  {
    if (!body.contains(key) || !body[key].is_number_integer()) {
      fail(400, "bad_request", std::string("'") + key + "' must be an integer class");
    }
    const int c = body[key].get<int>();
    if (!valid_class(c)) {
      fail(400, "bad_request", std::string("'") + key + "' must be in [0, 6]");
    }
    return c;
  }

  json create(const json & body)
  {
    for (auto it = body.begin(); it != body.end(); ++it) {
      if (it.key() != "scenario" && it.key() != "seed" && it.key() != "mode") {
        fail(400, "bad_request", "unknown field '" + it.key() + "'");
      }
    }
    if (!body.contains("scenario") || !body["scenario"].is_string()) {
      fail(400, "bad_request", "'scenario' must be a string");
    }
    const auto id = parse_scenario(body["scenario"].get<std::string>());
    if (!id) {
      fail(400, "bad_request", "unknown scenario '" + body["scenario"].get<std::string>() + "'");
    }
    std::uint64_t seed = 0;
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) {
        fail(400, "bad_request", "'seed' must be a non-negative integer");
      }
      seed = body["seed"].get<std::uint64_t>();
    }
    Mode mode = Mode::Label;
    if (body.contains("mode")) {
      const std::string m = body["mode"].is_string() ? body["mode"].get<std::string>() : "";
      if (m == "label") {
        mode = Mode::Label;
      } else if (m == "teleop") {
        mode = Mode::Teleop;
      } else if (m == "replay") {
        mode = Mode::Replay;
      } else {
        fail(400, "bad_request", "'mode' must be label, teleop or replay");
      }
    }
    {
      std::shared_lock lock(store_mutex);
      if (sessions.size() >= options.max_sessions) {
        fail(429, "too_many_sessions", "session limit reached");
      }
    }

    auto s = std::make_shared<Session>();
    s->mode = mode;
    s->scenario = std::string(scenario_name(*id));
    s->seed = seed;
    s->world = std::make_shared<const WorldMap>(generate_scenario({*id, seed, config.world}));
    s->sensor = std::make_unique<Sensor>(*s->world, config.camera);
    s->pose = s->world->spawn_pose();
    if (mode == Mode::Replay) {
      SimParams sim = config.sim;
      sim.max_steps = options.replay_steps;
      ExpertController expert(config.expert_resolved());
      const EpisodeResult r = run_episode(*s->world, *s->sensor, ControllerRef(&expert), sim, seed);
      for (const auto & rec : r.log.steps) {
        s->replay.push_back(rec.pose);
      }
      if (s->replay.empty()) {
        fail(400, "bad_request", "recorded episode is empty");
      }
      s->pose = s->replay.front();
    }
    render(*s);

    std::unique_lock lock(store_mutex);
    if (sessions.size() >= options.max_sessions) {
      fail(429, "too_many_sessions", "session limit reached");
    }
    do {
      char buf[17];
      std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(id_rng()));
      s->id = buf;
    } while (sessions.count(s->id));
    sessions[s->id] = s;
    return frame_json(*s);
  }

  // Moves the session one step; on a terminal event the session is closed.
  void advance(Session & s, int c_yaw, int c_pitch)
  {
    if (s.mode == Mode::Replay) {
      if (s.step + 1 >= static_cast<int>(s.replay.size())) {
        s.done = true;
        s.status = "replay_complete";
        ++s.step;
        return;
      }
      s.pose = s.replay[s.step + 1];
      ++s.step;
      render(s);
      return;
    }
    ActionClass a;
    a.c_yaw = c_yaw;
    a.c_pitch = c_pitch;
    a.delta_yaw = config.expert.delta_yaw;
    a.delta_pitch = config.expert.delta_pitch;
    const RobotPose next = step_dynamics(s.pose, a, config.sim);
    ++s.step;
    if (!s.world->bounds().contains(next.x, next.y)) {
      s.done = true;
      s.status = status_name(EpisodeStatus::OutOfBounds);
      return;
    }
    if (check_collision(*s.world, next, config.sim)) {
      s.done = true;
      s.status = status_name(EpisodeStatus::Collision);
      return;
    }
    s.distance += std::hypot(std::hypot(next.x - s.pose.x, next.y - s.pose.y), next.z - s.pose.z);
    s.pose = next;
    render(s);
  }

  void store_label(Session & s, int c_yaw, int c_pitch)
  {
    if (s.last_labeled >= s.step) {
      fail(409, "conflict", "step " + std::to_string(s.step) + " is already labeled");
    }
    LabeledSample l;
    l.image = s.small;
    l.c_yaw = c_yaw;
    l.c_pitch = c_pitch;
    l.provenance = Provenance::Human;
    l.scenario_id = s.scenario;
    l.step = s.step;
    s.labels.push_back(std::move(l));
    s.last_labeled = s.step;
  }

  json label(Session & s, const json & body)
  {
    if (s.mode == Mode::Teleop) {
      fail(409, "wrong_mode", "session is in teleop mode; use /action");
    }
    const int cy = read_class(body, "c_yaw");
    const int cp = read_class(body, "c_pitch");
    if (body.contains("step")) {
      if (!body["step"].is_number_integer()) {
        fail(400, "bad_request", "'step' must be an integer");
      }
      if (body["step"].get<int>() != s.step) {
        fail(409, "conflict", "label is for step " + std::to_string(body["step"].get<int>()) +
          " but the current step is " + std::to_string(s.step));
      }
    }
    if (s.done) {
      fail(409, "episode_ended", "episode ended: " + s.status);
    }
    store_label(s, cy, cp);
    advance(s, cy, cp);
    return frame_json(s);
  }

  json action(Session & s, const json & body)
  {
    if (s.mode != Mode::Teleop) {
      fail(409, "wrong_mode", "session is in " + mode_name(s.mode) + " mode; use /label");
    }
    const int cy = read_class(body, "c_yaw");
    const int cp = read_class(body, "c_pitch");
    bool record = false;
    if (body.contains("record")) {
      if (!body["record"].is_boolean()) {
        fail(400, "bad_request", "'record' must be a boolean");
      }
      record = body["record"].get<bool>();
    }
    if (s.done) {
      fail(409, "episode_ended", "episode ended: " + s.status);
    }
    if (record) {
      store_label(s, cy, cp);
    }
    advance(s, cy, cp);
    return frame_json(s);
  }

  json stats(const Session & s) const
  {
    const DatasetSummary sum = summarize(s.labels);
    return {
      {"id", s.id}, {"mode", mode_name(s.mode)}, {"scenario", s.scenario}, {"seed", s.seed},
      {"step", s.step}, {"labels", s.labels.size()}, {"done", s.done}, {"status", s.status},
      {"distance_m", s.distance}, {"yaw_histogram", sum.yaw_histogram},
      {"pitch_histogram", sum.pitch_histogram},
    };
  }

  json export_dataset(const Session & s, const json & body)
  {
    if (s.labels.empty()) {
      fail(409, "empty", "session has no labels to export");
    }
    std::string rel = "session_" + s.id;
    if (body.contains("path")) {
      if (!body["path"].is_string() || body["path"].get<std::string>().empty()) {
        fail(400, "bad_request", "'path' must be a non-empty string");
      }
      rel = body["path"].get<std::string>();
    }
    const fs::path p(rel);
    if (p.is_absolute()) {
      fail(400, "bad_request", "'path' must be relative to the export root");
    }
    for (const auto & part : p) {
      if (part == "..") {
        fail(400, "bad_request", "'path' may not leave the export root");
      }
    }
    const fs::path dir = fs::path(options.export_root) / p;
    const json provenance = {
      {"tool_version", kToolVersion}, {"config_hash", hex64(fnv1a(to_json(config).dump()))},
      {"seed", s.seed}, {"scenario", s.scenario}, {"source", "server/" + mode_name(s.mode)},
    };
    const DatasetSummary sum = save_dataset(dir.string(), s.labels, provenance);
    json out = to_json(sum);
    out["path"] = dir.string();
    return out;
  }

  template<class F>
  void guarded(httplib::Response & res, F && body)
  {
    try {
      json out = body();
      res.status = 200;
      res.set_content(out.dump(), "application/json");
    } catch (const HttpError & e) {
      res.status = e.status;
      res.set_content(json{{"code", e.code}, {"message", e.message}}.dump(), "application/json");
    } catch (const ParameterError & e) {
      res.status = 400;
      res.set_content(json{{"code", "bad_request"}, {"message", e.what()}}.dump(),
        "application/json");
    } catch (const std::exception & e) {
      res.status = 500;
      res.set_content(json{{"code", "internal"}, {"message", e.what()}}.dump(), "application/json");
    }
  }

  template<class F>
  void with_session(const httplib::Request & req, httplib::Response & res, F && f)
  {
    guarded(res, [&]() {
        auto s = find(req.matches[1]);
        std::lock_guard lock(s->mutex);
        return f(*s);
      });
  }

  void routes()
  {
    http.set_payload_max_length(1 << 20);
    http.Post("/sessions", [this](const httplib::Request & req, httplib::Response & res) {
        guarded(res, [&]() {return create(parse_body(req));});
      });
    http.Get(R"(/sessions/([0-9a-f]+)/frame)",
      [this](const httplib::Request & req, httplib::Response & res) {
        with_session(req, res, [&](Session & s) {return frame_json(s);});
      });
    http.Get(R"(/sessions/([0-9a-f]+)/frame\.png)",
      [this](const httplib::Request & req, httplib::Response & res) {
        std::vector<std::uint8_t> png;
        guarded(res, [&]() {
          auto s = find(req.matches[1]);
          std::lock_guard lock(s->mutex);
          png = s->png;
          return json::object();
        });
        if (res.status == 200) {
          res.set_content(std::string(png.begin(), png.end()), "image/png");
        }
      });
    http.Post(R"(/sessions/([0-9a-f]+)/label)",
      [this](const httplib::Request & req, httplib::Response & res) {
        with_session(req, res, [&](Session & s) {return label(s, parse_body(req));});
      });
    http.Post(R"(/sessions/([0-9a-f]+)/action)",
      [this](const httplib::Request & req, httplib::Response & res) {
        with_session(req, res, [&](Session & s) {return action(s, parse_body(req));});
      });
    http.Post(R"(/sessions/([0-9a-f]+)/export)",
      [this](const httplib::Request & req, httplib::Response & res) {
        with_session(req, res, [&](Session & s) {return export_dataset(s, parse_body(req));});
      });
    http.Get(R"(/sessions/([0-9a-f]+)/stats)",
      [this](const httplib::Request & req, httplib::Response & res) {
        with_session(req, res, [&](Session & s) {return stats(s);});
      });
    http.Delete(R"(/sessions/([0-9a-f]+))",
      [this](const httplib::Request & req, httplib::Response & res) {
        guarded(res, [&]() {
          std::unique_lock lock(store_mutex);
          if (!sessions.erase(req.matches[1])) {
            fail(404, "not_found", "no session '" + std::string(req.matches[1]) + "'");
          }
          return json{{"deleted", std::string(req.matches[1])}};
        });
      });
    http.Get("/config", [this](const httplib::Request &, httplib::Response & res) {
        guarded(res, [&]() {return to_json(config);});
      });
    if (!options.static_dir.empty() && !http.set_mount_point("/", options.static_dir)) {
      throw IoError("server: static directory not found: " + options.static_dir);
    }
    http.set_error_handler([](const httplib::Request &, httplib::Response & res) {
        if (res.body.empty()) {
          const std::string code = res.status == 404 ? "not_found" : "error";
          res.set_content(json{{"code", code}, {"message", httplib::status_message(res.status)}}
            .dump(), "application/json");
        }
      });
  }
};

LabelServer::LabelServer(RunConfig config, ServerOptions options)
: impl_(std::make_unique<Impl>(std::move(config), std::move(options)))
{
  impl_->config.validate();
  impl_->routes();
}

LabelServer::~LabelServer()
{
  stop();
}

bool LabelServer::listen(const std::string & host, int port)
{
  return impl_->http.listen(host, port);
}

int LabelServer::bind_any_port(const std::string & host)
{
  return impl_->http.bind_to_any_port(host);
}

bool LabelServer::listen_after_bind()
{
  return impl_->http.listen_after_bind();
}

void LabelServer::stop()
{
  impl_->http.stop();
}

bool LabelServer::is_running() const
{
  return impl_->http.is_running();
}

void LabelServer::wait_until_ready() const
{
  impl_->http.wait_until_ready();
}

}  // namespace uivnav
