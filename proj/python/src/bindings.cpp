// Copyright 2026 The Imagine Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli/commands.hpp"
#include "imagine/error.hpp"
#include "imagine/gaussian_io.hpp"
#include "imagine/png_io.hpp"
#include "imagine/runtime.hpp"
#include "imagine/segment3d.hpp"
#include "imagine/synth3d.hpp"
#include "imagine/tasks.hpp"

namespace py = pybind11;
using namespace imagine;
using nlohmann::json;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<std::uint8_t> to_array(const Image& img) {
  py::array_t<std::uint8_t> out({img.height(), img.width(), 4});
  std::copy(img.bytes().begin(), img.bytes().end(), out.mutable_data());
  return out;
}

Image to_image(const U8Array& a) {
  if (a.ndim() != 3 || (a.shape(2) != 3 && a.shape(2) != 4)) {
    throw py::value_error("expected an H x W x 3 or H x W x 4 uint8 array");
  }
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const auto c = static_cast<int>(a.shape(2));
  Image img(w, h);
  const std::uint8_t* src = a.data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = src + (static_cast<std::size_t>(y) * w + x) * c;
      img.set(x, y, {p[0], p[1], p[2], c == 4 ? p[3] : std::uint8_t{255}});
    }
  }
  return img;
}

py::array_t<bool> to_array(const Mask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < m.bytes().size(); ++i) dst[i] = m.bytes()[i] != 0;
  return out;
}

Mask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("expected an H x W boolean array");
  Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const bool* src = a.data();
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) m.set(x, y, src[static_cast<std::size_t>(y) * m.width() + x]);
  }
  return m;
}

py::array_t<std::uint32_t> to_array(const LabelMap& l) {
  py::array_t<std::uint32_t> out({l.height(), l.width()});
  std::copy(l.values().begin(), l.values().end(), out.mutable_data());
  return out;
}

py::bytes to_bytes(const EncodedImage& e) {
  return e.png ? py::bytes(reinterpret_cast<const char*>(e.png->data()), e.png->size()) : py::bytes();
}

py::object from_json(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json to_json(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<std::string> kind_names(const ActionSet& s) {
  std::vector<std::string> out;
  for (ActionKind k : s.kinds()) out.emplace_back(action_kind_name(k));
  return out;
}

/// What a Python policy sees: public observation fields only.
struct PyObservation {
  int t = 0;
  std::string mode;
  std::vector<std::string> legal;
  py::bytes image;
  py::object previous = py::none();
  std::string system_prompt;
  std::string reminder;
  std::optional<std::string> correction;
  std::vector<std::pair<std::string, std::string>> transcript;
};

class CallablePolicy final : public Policy {
 public:
  explicit CallablePolicy(py::function fn) : fn_(std::move(fn)) {}
  std::string decide(const Observation& obs, const ChatRequest&) override {
    py::gil_scoped_acquire gil;
    PyObservation o;
    o.t = obs.t;
    o.mode = std::string(mode_name(obs.mode));
    o.legal = kind_names(obs.legal);
    o.image = to_bytes(obs.current);
    if (obs.previous) o.previous = to_bytes(*obs.previous);
    o.system_prompt = obs.prompts.system_prompt;
    o.reminder = obs.prompts.step_reminder;
    o.correction = obs.correction;
    for (const auto& e : obs.transcript) {
      o.transcript.emplace_back(e.role == TranscriptEntry::Role::Assistant ? "assistant" : "user", e.text);
    }
    return fn_(o).cast<std::string>();
  }
  std::string name() const override { return "python"; }

 private:
  py::function fn_;
};

RunMode parse_mode(const std::string& name) {
  const auto m = run_mode_from_name(name);
  if (!m) throw py::value_error("unknown run mode '" + name + "'");
  return *m;
}

py::dict run_episode(const TaskInstance& inst, const py::object& policy, const std::string& mode,
                     std::optional<int> step_budget, std::optional<int> focus_budget, bool keep_images) {
  const RunMode rm = parse_mode(mode);
  TaskEpisodeSetup s = episode_setup(inst, rm);
  if (step_budget) s.config.limits.step_budget = *step_budget;
  s.config.limits.focus_budget = focus_budget;
  s.config.keep_images = keep_images;
  std::unique_ptr<Policy> p;
  if (policy.is_none()) {
    p = oracle_for(inst, rm);
  } else if (py::isinstance<py::list>(policy)) {
    p = std::make_unique<ScriptedPolicy>(policy.cast<std::vector<std::string>>());
  } else {
    p = std::make_unique<CallablePolicy>(policy.cast<py::function>());
  }
  Episode ep(s.scene, *p, nullptr, s.config, s.hooks ? s.hooks() : nullptr);
  {
    py::gil_scoped_release release;
    ep.run();
  }
  const EpisodeScore score = score_episode(inst, ep);
  const Outcome& o = ep.outcome();
  py::list records;
  for (const TraceRecord& r : ep.records()) {
    py::dict d;
    d["seq"] = r.seq;
    d["t"] = r.t;
    d["mode"] = std::string(mode_name(r.mode));
    d["raw"] = r.raw;
    d["action"] = r.action ? py::object(py::str(format_action(*r.action))) : py::object(py::none());
    d["applied"] = r.applied;
    d["event"] = r.event.kind;
    d["feedback"] = r.event.detail;
    d["render_digest"] = r.render_digest;
    d["base_digest"] = r.base_digest;
    records.append(d);
  }
  py::dict out;
  out["status"] = std::string(outcome_status_name(o.status));
  out["answer"] = o.answer;
  out["reason"] = o.reason ? py::object(py::str(std::string(failure_reason_name(*o.reason)))) : py::object(py::none());
  out["detail"] = o.detail;
  out["correct"] = score.correct;
  out["actions"] = ep.t();
  out["policy_calls"] = ep.stats().policy_calls;
  out["max_images_per_request"] = ep.stats().max_images_per_request;
  out["records"] = records;
  out["final_image"] = to_array(render(ep.scene()));
  const ReplayResult rr = replay(ep.initial_scene(), ep.records(), nullptr, s.hooks);
  out["replay_ok"] = rr.ok;
  return out;
}

GaussianScene make_scene3d(const F64Array& centers, const F64Array& scales, const F64Array& opacity,
                           const std::optional<F64Array>& rotations, const std::optional<F64Array>& colors) {
  const auto n = static_cast<std::size_t>(centers.shape(0));
  auto rows = [n](const F64Array& a, py::ssize_t cols, const char* name) {
    if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != n || a.shape(1) != cols) {
      throw py::value_error(std::string(name) + " must have shape (N, " + std::to_string(cols) + ")");
    }
  };
  rows(centers, 3, "centers");
  rows(scales, 3, "scales");
  if (rotations) rows(*rotations, 4, "rotations");
  if (colors) rows(*colors, 3, "colors");
  if (opacity.ndim() != 1 || static_cast<std::size_t>(opacity.shape(0)) != n) {
    throw py::value_error("opacity must have shape (N,)");
  }
  GaussianScene s;
  for (std::size_t i = 0; i < n; ++i) {
    Gaussian3D g;
    const double* c = centers.data() + 3 * i;
    const double* sc = scales.data() + 3 * i;
    g.center = Vec3(c[0], c[1], c[2]);
    g.scale = Vec3(sc[0], sc[1], sc[2]);
    if (rotations) {
      const double* q = rotations->data() + 4 * i;
      g.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
    }
    g.opacity = opacity.data()[i];
    if (colors) {
      const double* col = colors->data() + 3 * i;
      g.color = Vec3(col[0], col[1], col[2]);
    }
    s.gaussians.push_back(g);
  }
  validate(s);
  return s;
}

Vec3 vec3(const std::array<double, 3>& a) { return Vec3(a[0], a[1], a[2]); }
std::array<double, 3> arr3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

PYBIND11_MODULE(_imagine, m) {
  m.doc() = "Closed-loop visual reasoning: scenes, tasks, episodes and 3D segmentation";

  py::register_exception<Error>(m, "ImagineError", PyExc_RuntimeError);

  // ---- images --------------------------------------------------------------
  m.def(
      "read_png", [](const std::filesystem::path& p) { return to_array(read_png(p)); }, py::arg("path"),
      "Reads a PNG as an H x W x 4 uint8 array.");
  m.def(
      "write_png", [](const std::filesystem::path& p, const U8Array& a) { write_png(p, to_image(a)); },
      py::arg("path"), py::arg("image"));
  m.def(
      "inpaint",
      [](const U8Array& img, const py::array_t<bool, py::array::c_style | py::array::forcecast>& hole, double tol,
         int max_iters) {
        InpaintOptions o;
        o.tol = tol;
        o.max_iters = max_iters;
        return to_array(inpaint_diffusion(to_image(img), to_mask(hole), o));
      },
      py::arg("image"), py::arg("hole"), py::arg("tol") = InpaintOptions{}.tol,
      py::arg("max_iters") = InpaintOptions{}.max_iters,
      "Fills the masked pixels by diffusion; other pixels are returned unchanged.");

  // ---- tasks ---------------------------------------------------------------
  py::class_<CountingInstance>(m, "CountingInstance")
      .def_readonly("seed", &CountingInstance::seed)
      .def_readonly("n", &CountingInstance::n)
      .def_property_readonly("base", [](const CountingInstance& c) { return to_array(c.base); })
      .def_property_readonly("labels", [](const CountingInstance& c) { return to_array(c.labels); })
      .def_property_readonly("reference", [](const CountingInstance& c) { return to_array(c.reference); });
  py::class_<JigsawInstance>(m, "JigsawInstance")
      .def_readonly("seed", &JigsawInstance::seed)
      .def_readonly("rows", &JigsawInstance::rows)
      .def_readonly("cols", &JigsawInstance::cols)
      .def_readonly("snap_radius", &JigsawInstance::snap_radius)
      .def_readonly("attempts_budget", &JigsawInstance::attempts_budget)
      .def_property_readonly("missing", [](const JigsawInstance& g) { return g.pieces.size(); })
      .def_property_readonly("base", [](const JigsawInstance& g) { return to_array(g.base); })
      .def_property_readonly("source", [](const JigsawInstance& g) { return to_array(g.source); })
      .def_property_readonly("labels", [](const JigsawInstance& g) { return to_array(g.labels); });
  py::class_<PlacementInstance>(m, "PlacementInstance")
      .def_readonly("seed", &PlacementInstance::seed)
      .def_readonly("prompt", &PlacementInstance::prompt)
      .def_readonly("relation", &PlacementInstance::relation)
      .def_readonly("target_id", &PlacementInstance::target_id)
      .def_readonly("anchor_id", &PlacementInstance::anchor_id)
      .def_property_readonly("base", [](const PlacementInstance& p) { return to_array(p.base); })
      .def_property_readonly("labels", [](const PlacementInstance& p) { return to_array(p.labels); })
      .def_property_readonly("platform", [](const PlacementInstance& p) { return to_array(p.platform); })
      .def_property_readonly("regions", [](const PlacementInstance& p) {
        py::list out;
        for (const Mask& r : p.regions) out.append(to_array(r));
        return out;
      });
  py::class_<QaInstance>(m, "QaInstance")
      .def_readonly("seed", &QaInstance::seed)
      .def_readonly("question", &QaInstance::question)
      .def_readonly("truth", &QaInstance::truth)
      .def_property_readonly("base", [](const QaInstance& q) { return to_array(q.base); })
      .def_property_readonly("labels", [](const QaInstance& q) { return to_array(q.labels); });

  m.def(
      "gen_counting",
      [](std::uint64_t seed, int n, int width, int height) {
        CountingOptions o;
        o.width = width;
        o.height = height;
        return gen_counting(seed, n, o);
      },
      py::arg("seed"), py::arg("n"), py::arg("width") = 256, py::arg("height") = 256);
  m.def(
      "gen_jigsaw", [](std::uint64_t seed, int rows, int cols, int n_missing) { return gen_jigsaw(seed, rows, cols, n_missing); },
      py::arg("seed"), py::arg("rows"), py::arg("cols"), py::arg("n_missing"));
  m.def(
      "gen_placement",
      [](std::uint64_t seed, int n_objects) {
        PlacementOptions o;
        o.n_objects = n_objects;
        return gen_placement(seed, o);
      },
      py::arg("seed"), py::arg("n_objects") = 4);
  m.def(
      "gen_qa",
      [](std::uint64_t seed, int n_objects, double absent_probability) {
        QaOptions o;
        o.absent_probability = absent_probability;
        return gen_multiobject_qa(seed, n_objects, o);
      },
      py::arg("seed"), py::arg("n_objects"), py::arg("absent_probability") = 0.2);
  m.def("save_instance", &save_instance, py::arg("dir"), py::arg("instance"));
  m.def("load_instance", &load_instance, py::arg("dir"));
  m.def("task_kind", [](const TaskInstance& i) { return std::string(task_kind_name(task_kind_of(i))); });
  m.def("parse_count", &parse_count, py::arg("answer"));
  m.def("grade_qa", &grade_qa, py::arg("answer"), py::arg("truth"));
  m.def(
      "score_counting",
      [](const std::vector<std::optional<int>>& preds, const std::vector<int>& truths) {
        const CountingMetrics c = score_counting(preds, truths);
        return py::dict(py::arg("n") = c.n, py::arg("success_rate") = c.success_rate,
                        py::arg("mean_error") = c.mean_error, py::arg("variance") = c.variance);
      },
      py::arg("predictions"), py::arg("truths"));

  // ---- episodes ------------------------------------------------------------
  py::class_<PyObservation>(m, "Observation")
      .def_readonly("t", &PyObservation::t)
      .def_readonly("mode", &PyObservation::mode)
      .def_readonly("legal", &PyObservation::legal)
      .def_readonly("image", &PyObservation::image, "PNG bytes of the current render")
      .def_readonly("previous", &PyObservation::previous)
      .def_readonly("system_prompt", &PyObservation::system_prompt)
      .def_readonly("reminder", &PyObservation::reminder)
      .def_readonly("correction", &PyObservation::correction)
      .def_readonly("transcript", &PyObservation::transcript);

  m.def("run_episode", &run_episode, py::arg("instance"), py::arg("policy") = py::none(), py::arg("mode") = "full",
        py::arg("step_budget") = py::none(), py::arg("focus_budget") = py::none(), py::arg("keep_images") = false,
        "Runs one closed-loop episode. `policy` is None for the task oracle, a list of\n"
        "replies for a scripted run, or a callable taking an Observation and returning text.");
  m.def("parse_action", [](const std::string& raw, const std::vector<std::string>& legal) -> py::object {
    ActionSet set;
    for (const auto& n : legal) {
      const auto k = action_kind_from_name(n);
      if (!k) throw py::value_error("unknown action kind '" + n + "'");
      set.insert(*k);
    }
    const ParseResult r = parse_action(raw, set);
    if (const auto* a = std::get_if<Action>(&r)) return py::str(format_action(*a));
    return py::none();
  }, py::arg("raw"), py::arg("legal"), "Returns the canonical command, or None when nothing legal was found.");

  // ---- 3D ------------------------------------------------------------------
  py::class_<GaussianScene>(m, "GaussianScene")
      .def(py::init(&make_scene3d), py::arg("centers"), py::arg("scales"), py::arg("opacity"),
           py::arg("rotations") = py::none(), py::arg("colors") = py::none(),
           "Rotations are (w, x, y, z) quaternions; scales are per-axis standard deviations.")
      .def("__len__", &GaussianScene::size)
      .def_property_readonly("centers", [](const GaussianScene& s) {
        py::array_t<double> out({static_cast<py::ssize_t>(s.size()), py::ssize_t{3}});
        for (std::size_t i = 0; i < s.size(); ++i) {
          for (int k = 0; k < 3; ++k) out.mutable_data()[3 * i + k] = s.gaussians[i].center[k];
        }
        return out;
      })
      .def_property_readonly("opacity", [](const GaussianScene& s) {
        std::vector<double> o;
        for (const auto& g : s.gaussians) o.push_back(g.opacity);
        return o;
      });
  m.def("load_gaussians", &load_gaussians, py::arg("path"));
  m.def("save_gaussians", &save_gaussians, py::arg("path"), py::arg("scene"));

  py::class_<Camera>(m, "Camera")
      .def(py::init([](std::array<double, 3> position, std::array<double, 3> look_at, std::array<double, 3> up,
                       double vertical_fov, int width, int height) {
             Camera c;
             c.position = vec3(position);
             c.look_at = vec3(look_at);
             c.up = vec3(up);
             c.vertical_fov = vertical_fov;
             c.width = width;
             c.height = height;
             c.validate();
             return c;
           }),
           py::arg("position"), py::arg("look_at"), py::arg("up") = std::array<double, 3>{0, 0, 1},
           py::arg("vertical_fov") = 0.8, py::arg("width") = 64, py::arg("height") = 64)
      .def("project", [](const Camera& c, std::array<double, 3> p) {
        const auto uv = c.project(vec3(p));
        return std::pair<double, double>(uv.u, uv.v);
      });

  m.def(
      "trace_ray",
      [](const GaussianScene& s, std::array<double, 3> origin, std::array<double, 3> direction) {
        const Ray ray{vec3(origin), vec3(direction).normalized()};
        py::list out;
        for (const auto& h : trace_ray(s, ray, SegConfig{})) {
          out.append(py::make_tuple(h.index, h.contribution, h.transmittance));
        }
        return out;
      },
      py::arg("scene"), py::arg("origin"), py::arg("direction"),
      "Front-to-back hits as (index, contribution, transmittance before the hit).");
  m.def(
      "make_two_clusters",
      [](std::uint64_t seed) {
        LabelledGaussians lg = make_two_clusters(seed);
        std::vector<std::array<double, 3>> centers;
        for (const auto& c : lg.cluster_centers) centers.push_back(arr3(c));
        return py::make_tuple(lg.scene, lg.labels, centers);
      },
      py::arg("seed"), "Returns (scene, labels, cluster_centers).");
  m.def(
      "segment_with_labels",
      [](const GaussianScene& s, const std::vector<std::uint32_t>& labels, std::pair<int, int> pixel,
         const Camera& cam) {
        GaussianLabelOracle oracle(s, labels);
        Segment3DResult r;
        {
          py::gil_scoped_release release;
          r = segment_conditional(s, {pixel.first, pixel.second}, cam, oracle);
        }
        return py::make_tuple(r.object_indices, r.remainder_indices);
      },
      py::arg("scene"), py::arg("labels"), py::arg("pixel"), py::arg("camera"),
      "3D conditional segmentation with a ground-truth label oracle. Returns\n"
      "(object_indices, remainder_indices).");

  // ---- command-line workflows ----------------------------------------------
  m.def(
      "cli_generate",
      [](const py::object& config) {
        const auto man = cli::cmd_generate(cli::parse_config(to_json(config)));
        return from_json(man.document);
      },
      py::arg("config"));
  m.def(
      "cli_run",
      [](const py::object& config) {
        const cli::RunConfig cfg = cli::parse_config(to_json(config));
        json out;
        {
          py::gil_scoped_release release;
          out = cli::cmd_run(cfg);
        }
        return from_json(out);
      },
      py::arg("config"));
  m.def(
      "cli_report",
      [](const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out) { cli::cmd_report(runs, out); },
      py::arg("runs"), py::arg("out"));
  m.def(
      "cli_replay",
      [](const std::filesystem::path& trace, const std::filesystem::path& out,
         const std::optional<std::filesystem::path>& dataset) {
        const cli::ReplaySummary s = cli::cmd_replay(trace, out, dataset);
        return py::dict(py::arg("frames") = s.frames, py::arg("ok") = s.ok,
                        py::arg("first_mismatch") = s.first_mismatch);
      },
      py::arg("trace"), py::arg("out"), py::arg("dataset") = py::none());
}
