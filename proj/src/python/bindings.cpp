// Python bindings. Structured results cross as JSON text and are decoded on
// the Python side; images cross as uint8 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uivnav/actuation.hpp"
#include "uivnav/common.hpp"
#include "uivnav/config.hpp"
#include "uivnav/eval.hpp"
#include "uivnav/ir.hpp"
#include "uivnav/policy.hpp"
#include "uivnav/sensor.hpp"
#include "uivnav/world.hpp"

namespace py = pybind11;
using namespace uivnav;

namespace
{

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> to_numpy(const Image & img)
{
  std::vector<py::ssize_t> shape{img.height, img.width};
  if (img.channels > 1) {
    shape.push_back(img.channels);
  }
  py::array_t<std::uint8_t> out(shape);
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

Image from_numpy(const U8Array & a, int channels)
{
  const auto info = a.request();
  const bool ok = channels == 1 ? info.ndim == 2 : (info.ndim == 3 && info.shape[2] == channels);
  if (!ok) {
    throw DimensionError("expected an array of shape (h, w" +
      std::string(channels == 1 ? ")" : ", " + std::to_string(channels) + ")"));
  }
  Image img(static_cast<int>(info.shape[1]), static_cast<int>(info.shape[0]), channels);
  std::copy(a.data(), a.data() + img.data.size(), img.data.begin());
  return img;
}

ScenarioId scenario_or_throw(const std::string & name)
{
  const auto id = parse_scenario(name);
  if (!id) {
    throw ParameterError("unknown scenario '" + name + "'");
  }
  return *id;
}

RunConfig config_from_text(const std::string & config_json)
{
  RunConfig c = config_json.empty() ? RunConfig{} :
    run_config_from_json(nlohmann::json::parse(config_json));
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "uivnav core bindings";
  m.attr("__version__") = kToolVersion;

  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<PlanningError>(m, "PlanningError", PyExc_RuntimeError);

  py::class_<WorldMap>(m, "World")
    .def_property_readonly("cols", &WorldMap::cols)
    .def_property_readonly("rows", &WorldMap::rows)
    .def_property_readonly("cell_size", &WorldMap::cell_size)
    .def_property_readonly("width_m", &WorldMap::width_m)
    .def_property_readonly("height_m", &WorldMap::height_m)
    .def_property_readonly("ooi_kind", &WorldMap::ooi_kind)
    .def_property_readonly("digest", &WorldMap::digest)
    .def_property_readonly("spawn", [](const WorldMap & w) {
        const RobotPose & p = w.spawn_pose();
        return py::make_tuple(p.x, p.y, p.z, p.yaw, p.pitch);
      })
    .def("heights", [](const WorldMap & w) {
        py::array_t<float> out({w.rows(), w.cols()});
        std::copy(w.heights().begin(), w.heights().end(), out.mutable_data());
        return out;
      }, "Terrain heights, shape (rows, cols); row 0 is y = 0.")
    .def("ooi", [](const WorldMap & w) {
        py::array_t<bool> out({w.rows(), w.cols()});
        bool * d = out.mutable_data();
        for (std::size_t i = 0; i < w.cell_count(); ++i) {
          d[i] = w.ooi()[i] != 0;
        }
        return out;
      })
    .def("to_json", [](const WorldMap & w) {return world_to_json(w).dump();})
    .def("save", [](const WorldMap & w, const std::string & path) {save_world(w, path);});

  m.def("generate_world", [](const std::string & scenario, std::uint64_t seed,
    const std::string & params_json) {
      const ScenarioParams p = params_json.empty() ? ScenarioParams{} :
        scenario_params_from_json(nlohmann::json::parse(params_json));
      return generate_scenario({scenario_or_throw(scenario), seed, p});
    }, py::arg("scenario"), py::arg("seed") = 0, py::arg("params_json") = "");
  m.def("load_world", &load_world, py::arg("path"));
  m.def("world_from_json", [](const std::string & text) {
      return world_from_json(nlohmann::json::parse(text));
    });

  m.def("render", [](const WorldMap & w, std::tuple<double, double, double, double, double> pose,
    const std::string & config_json) {
      const RunConfig c = config_from_text(config_json);
      const auto [x, y, z, yaw, pitch] = pose;
      const Frame f = render(w, RobotPose{x, y, z, yaw, pitch}, c.camera);
      py::dict out;
      out["seg"] = to_numpy(f.seg);
      out["depth"] = to_numpy(f.depth);
      out["segdepth"] = to_numpy(compose_segdepth(f.seg, f.depth).image);
      return out;
    }, py::arg("world"), py::arg("pose"), py::arg("config_json") = "",
    "Renders (seg, depth, segdepth) at pose = (x, y, z, yaw, pitch).");

  m.def("compose_segdepth", [](const U8Array & seg, const U8Array & depth) {
      return to_numpy(compose_segdepth(from_numpy(seg, 1), from_numpy(depth, 1)).image);
    });
  m.def("decompose_segdepth", [](const U8Array & ids) {
      const SegDepthPlanes p = decompose_segdepth(SegDepthImage{from_numpy(ids, 3)});
      return py::make_tuple(to_numpy(p.seg), to_numpy(p.depth));
    });
  m.def("downsample", [](const U8Array & ids, int w, int h) {
      return to_numpy(downsample(SegDepthImage{from_numpy(ids, 3)}, w, h).image);
    });
  m.def("colormap_lut", [] {
      py::array_t<std::uint8_t> out({256, 3});
      auto r = out.mutable_unchecked<2>();
      const ColormapLut & lut = colormap_lut();
      for (int i = 0; i < 256; ++i) {
        for (int k = 0; k < 3; ++k) {
          r(i, k) = lut[i][k];
        }
      }
      return out;
    });

  m.def("decode_action", &decode_action, py::arg("c"), py::arg("delta") = 5.0);
  m.def("smooth_label", &smooth_label);
  m.def("loss", &loss, py::arg("pred_yaw"), py::arg("pred_pitch"), py::arg("target_yaw"),
    py::arg("target_pitch"), py::arg("lam") = 0.1);
  m.def("expert_policy", [](const U8Array & seg, const U8Array & depth, const std::string & config_json) {
      const RunConfig c = config_from_text(config_json);
      const ActionClass a = expert_policy(from_numpy(seg, 1), from_numpy(depth, 1), c.expert_resolved());
      return py::make_tuple(a.c_yaw, a.c_pitch);
    }, py::arg("seg"), py::arg("depth"), py::arg("config_json") = "");

  m.def("velocity_to_pwm", [](double nu, const std::string & dof) {
      return velocity_to_pwm(nu, dof, ActuationParams{});
    }, py::arg("nu"), py::arg("dof"));
  m.def("classes_to_pwm", [](int c_yaw, int c_pitch) {
      const PwmCommand p = classes_to_pwm(c_yaw, c_pitch, ActuationParams{});
      py::dict out;
      out["surge"] = p.surge;
      out["heave"] = p.heave;
      out["yaw"] = p.yaw;
      out["pitch"] = p.pitch;
      return out;
    });

  m.def("default_config", [] {return to_json(RunConfig{}).dump();});

  m.def("run_method", [](const WorldMap & w, const std::string & method, std::uint64_t seed,
    double budget, const std::string & config_json) {
      const RunConfig c = config_from_text(config_json);
      const auto kind = parse_method(method);
      if (!kind || *kind == MethodKind::Learned) {
        throw ParameterError("run_method: method must be expert, bb or bcd");
      }
      MethodSetup setup{c.camera, budgeted(c.sim, budget), c.expert_resolved(), c.bridge, c.bcd, nullptr};
      const Sensor sensor(w, c.camera);
      EpisodeOptions o;
      o.method = method_name(*kind);
      EpisodeResult r;
      {
        py::gil_scoped_release release;
        r = run_method(w, sensor, *kind, setup, seed, o);
      }
      return py::make_tuple(to_json(metrics_from_result(w, r, budget)).dump(),
        episode_to_jsonl(r.log, to_json(c)));
    }, py::arg("world"), py::arg("method"), py::arg("seed") = 0, py::arg("budget") = 400.0,
    py::arg("config_json") = "",
    "Returns (metrics JSON, episode JSONL).");

  m.def("compare", [](const std::vector<std::string> & methods,
    const std::vector<std::string> & scenarios, int seeds, double budget, const std::string & config_json) {
      const RunConfig c = config_from_text(config_json);
      CompareConfig cc;
      cc.methods = methods;
      for (const auto & s : scenarios) {
        cc.scenarios.push_back(scenario_or_throw(s));
      }
      cc.seeds = seeds;
      cc.seed_base = c.eval.seed_base;
      cc.distance_budget = budget;
      cc.parallel = c.eval.parallel;
      cc.scenario_params = c.world;
      cc.camera = c.camera;
      cc.sim = c.sim;
      cc.expert = c.expert_resolved();
      cc.bridge = c.bridge;
      cc.bcd = c.bcd;
      cc.keep_trajectories = false;
      CompareTable t;
      {
        py::gil_scoped_release release;
        t = compare(cc);
      }
      return metrics_to_csv(t.rows);
    }, py::arg("methods"), py::arg("scenarios"), py::arg("seeds") = 1, py::arg("budget") = 400.0,
    py::arg("config_json") = "",
    "Runs the benchmark and returns the per-episode CSV.");
}
