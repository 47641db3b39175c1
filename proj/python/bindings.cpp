#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "pairtask/checkpoint.hpp"
#include "pairtask/cli.hpp"
#include "pairtask/error.hpp"
#include "pairtask/evaluation.hpp"
#include "pairtask/inference.hpp"
#include "pairtask/pipeline.hpp"
#include "pairtask/sampling.hpp"
#include "pairtask/synthetic.hpp"
#include "pairtask/text.hpp"

namespace py = pybind11;
using namespace pairtask;
using nlohmann::json;

namespace {

// A checkpoint opened for inference; the builder points into `ckpt.registry`.
struct Predictor {
  LoadedCheckpoint ckpt;
  std::unique_ptr<PairBuilder> builder;

  explicit Predictor(const std::filesystem::path& dir) : ckpt(open_checkpoint(dir)) {
    builder = std::make_unique<PairBuilder>(ckpt.registry, ckpt.meta.query);
  }

  std::string predict(const std::string& text, const std::string& task_name, std::optional<double> threshold) const {
    const TaskSpec& task = ckpt.registry.task(task_name);
    if (!threshold && task.is_binary()) {
      auto it = ckpt.meta.thresholds.find(task_name);
      if (it != ckpt.meta.thresholds.end()) threshold = it->second;
    }
    return predict_pairwise(text, task, threshold).to_json().dump();
  }

  Prediction predict_pairwise(const std::string& text, const TaskSpec& task, std::optional<double> threshold) const {
    return pairtask::predict(*ckpt.encoder, *builder, normalize_text(text), task, threshold);
  }
};

std::string summarize(const PipelineResult& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json tests = json::array();
    for (const auto& rep : s.test_reports) tests.push_back(rep.to_json());
    json sweeps = json::object();
    for (const auto& [task, sweep] : s.sweeps) sweeps[task] = sweep.to_json();
    seeds.push_back({{"seed", s.seed},
                     {"final_checkpoint", s.final_checkpoint.string()},
                     {"thresholds", sweeps},
                     {"test_reports", tests}});
  }
  return json{{"output_dir", r.output_dir.string()}, {"ledger", r.ledger.string()}, {"seeds", seeds}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pairwise multi-task text classification core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  m.def("normalize_text", [](const std::string& s) { return normalize_text(s); });

  py::class_<Registry>(m, "Registry")
      .def_static("load", &Registry::load)
      .def_static("from_json", [](const std::string& s) { return Registry::from_json(json::parse(s)); })
      .def("fingerprint", &Registry::fingerprint)
      .def("dataset_ids",
           [](const Registry& r) {
             std::vector<std::string> ids;
             for (const auto& d : r.datasets()) ids.push_back(d.id);
             return ids;
           })
      .def("task_names",
           [](const Registry& r) {
             std::vector<std::string> names;
             for (const auto& t : r.tasks()) names.push_back(t.name);
             return names;
           })
      .def("classes", [](const Registry& r, const std::string& task) { return r.task(task).classes; })
      .def("is_binary", [](const Registry& r, const std::string& task) { return r.task(task).is_binary(); })
      .def("build_description", &Registry::build_description)
      .def("descriptors",
           [](const Registry& r) {
             std::vector<std::tuple<std::string, std::string, std::string, std::string>> out;
             for (const auto& d : r.descriptors()) out.emplace_back(d.dataset, d.label_type, d.label_value, d.description);
             return out;
           })
      .def(
          "query",
          [](const Registry& r, const std::string& task, const std::string& value, bool di, bool ld) {
            return PairBuilder(r, {di, ld}).query_for(r.task(task), value);
          },
          py::arg("task"), py::arg("value"), py::arg("use_dataset_identifier") = true,
          py::arg("use_label_descriptions") = true);

  m.def("default_registry_path", &default_registry_path);

  m.def("macro_f1", [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                       const std::vector<std::string>& classes) { return macro_f1(pred, gold, classes); });
  m.def("per_class_f1", [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                           const std::vector<std::string>& classes) { return per_class_f1(pred, gold, classes); });
  m.def(
      "confusion_matrix",
      [](const std::vector<std::string>& pred, const std::vector<std::string>& gold,
         const std::vector<std::string>& classes, bool normalize) {
        return confusion_matrix(pred, gold, classes, normalize);
      },
      py::arg("predictions"), py::arg("golds"), py::arg("classes"), py::arg("normalize") = false);

  m.def(
      "sample_negative",
      [](const std::string& gold, const std::vector<std::string>& classes, std::uint64_t seed, std::uint64_t epoch,
         std::uint64_t key) { return sample_negative(gold, classes, {seed, epoch}, key); },
      py::arg("gold"), py::arg("classes"), py::arg("seed"), py::arg("epoch") = 0, py::arg("key") = 0);
  m.def("upsample_factors", [](const std::vector<std::size_t>& counts, double floor) {
    return upsample_factors(counts, floor);
  });
  m.def(
      "select_threshold",
      [](const std::vector<double>& probs, const std::vector<std::string>& golds, const Registry& r,
         const std::string& task) {
        const auto sweep = select_threshold(probs, golds, r.task(task));
        return std::make_pair(sweep.selected, sweep.scores);
      },
      py::arg("probabilities"), py::arg("golds"), py::arg("registry"), py::arg("task"));

  m.def(
      "write_synthetic_corpus",
      [](const std::string& spec_json, const std::filesystem::path& out_dir) {
        const auto spec = SyntheticSpec::from_json(json::parse(spec_json));
        const auto corpus = make_synthetic_corpus(spec);
        std::filesystem::create_directories(out_dir);
        std::ofstream(out_dir / "registry.json") << corpus.registry.dump(2) << '\n';
        write_records_jsonl(out_dir / "records.jsonl", corpus.records);
        return corpus.records.size();
      },
      py::arg("spec_json"), py::arg("out_dir"));

  m.def(
      "run_pipeline",
      [](const std::filesystem::path& config, std::optional<std::vector<std::uint64_t>> seeds,
         std::optional<std::filesystem::path> output_dir) {
        RunConfig rc = RunConfig::load(config);
        if (output_dir) rc.output_dir = *output_dir;
        PipelineOptions options;
        options.seeds = seeds;
        py::gil_scoped_release release;
        return summarize(run_pipeline(rc, options));
      },
      py::arg("config"), py::arg("seeds") = py::none(), py::arg("output_dir") = py::none());

  py::class_<Predictor>(m, "Predictor")
      .def(py::init<const std::filesystem::path&>())
      .def("tasks", [](const Predictor& p) { return p.ckpt.meta.tasks; })
      .def("thresholds", [](const Predictor& p) { return p.ckpt.meta.thresholds; })
      .def("predict", &Predictor::predict, py::arg("text"), py::arg("task"), py::arg("threshold") = py::none());

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    std::vector<std::string> argv = {"pairtask"};
    argv.insert(argv.end(), args.begin(), args.end());
    int code;
    {
      py::gil_scoped_release release;
      code = dispatch(argv, out, err);
    }
    return std::make_tuple(code, out.str(), err.str());
  });
}
