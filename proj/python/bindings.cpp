// Copyright 2026 The vflsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vflsim/config.hpp"
#include "vflsim/data.hpp"
#include "vflsim/error.hpp"
#include "vflsim/experiment.hpp"
#include "vflsim/federation.hpp"
#include "vflsim/metrics.hpp"

namespace py = pybind11;

namespace {

py::dict sweep_row(const vfl::SweepRow& row) {
  py::dict d;
  d["axis"] = row.axis;
  d["value"] = row.value;
  d["seed"] = row.seed;
  d["method"] = row.method;
  d["slice"] = row.slice;
  d["auc"] = row.auc;
  d["logloss"] = row.logloss;
  d["n"] = row.n;
  d["status"] = row.status;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vflsim, m) {
  m.doc() = "Two-party vertical federated learning simulator";

  auto base = py::register_exception<vfl::Error>(m, "VflError", PyExc_RuntimeError);
  py::register_exception<vfl::ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<vfl::NumericError>(m, "NumericError", base.ptr());
  py::register_exception<vfl::CacheError>(m, "CacheError", base.ptr());
  py::register_exception<vfl::VocabError>(m, "VocabError", base.ptr());
  py::register_exception<vfl::SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<vfl::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<vfl::ProtocolError>(m, "ProtocolError", base.ptr());
  py::register_exception<vfl::CheckpointError>(m, "CheckpointError", base.ptr());
  py::register_exception<vfl::DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<vfl::IoError>(m, "IoError", base.ptr());
  py::register_exception<vfl::DataError>(m, "DataError", base.ptr());

  py::class_<vfl::ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("parse", &vfl::parse_config, py::arg("text"))
      .def_static("load", &vfl::load_config, py::arg("path"))
      .def(
          "set",
          [](vfl::ExperimentConfig& cfg, const std::string& key, const std::string& value) {
            vfl::set_config_value(cfg, key, value);
          },
          py::arg("key"), py::arg("value"))
      .def("canonical", &vfl::ExperimentConfig::canonical)
      .def("digest", &vfl::ExperimentConfig::digest)
      .def("validate", &vfl::ExperimentConfig::validate)
      .def_property_readonly("seeds",
                             [](const vfl::ExperimentConfig& cfg) { return cfg.eval.seeds; });

  m.def("auc", [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
        return vfl::auc(scores, labels);
      }, py::arg("scores"), py::arg("labels"));
  m.def("logloss", [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
        return vfl::logloss(scores, labels);
      }, py::arg("scores"), py::arg("labels"));
  m.def("paired_ttest", [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = vfl::paired_ttest(a, b);
        return py::make_tuple(r.t, r.p, r.degenerate);
      }, py::arg("a"), py::arg("b"));
  m.def("hash_feature", [](const std::string& slot, const std::string& value, std::size_t vocab) {
        return vfl::hash_feature(slot, value, vocab);
      }, py::arg("slot"), py::arg("value"), py::arg("vocab_size"));
  m.def("audit_transcript", [](const std::string& text, std::size_t rep_dim) {
        const auto v = vfl::audit_transcript(vfl::Transcript::parse(text), rep_dim);
        return py::make_tuple(v.pass, v.offending);
      }, py::arg("text"), py::arg("rep_dim"));

  m.def("gen_data", [](const vfl::ExperimentConfig& cfg, const std::filesystem::path& out) {
        const auto r = vfl::cmd_gen_data(cfg, out);
        py::dict d;
        d["n_host"] = r.n_host;
        d["n_guest"] = r.n_guest;
        d["n_aligned"] = r.n_aligned;
        return d;
      }, py::arg("config"), py::arg("out"));
  m.def("train", [](const vfl::ExperimentConfig& cfg, const std::filesystem::path& out) {
        vfl::TrainOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = vfl::cmd_train(cfg, out);
        }
        py::dict d;
        d["log"] = outcome.log_text;
        d["best_epoch"] = outcome.result.best_epoch;
        d["validation_auc"] = outcome.result.checkpoint.validation_history;
        return d;
      }, py::arg("config"), py::arg("out"));
  m.def("evaluate_json", [](const vfl::ExperimentConfig& cfg,
                            const std::filesystem::path& checkpoint,
                            const std::filesystem::path& out) {
        py::gil_scoped_release release;
        return vfl::cmd_eval(cfg, checkpoint, out).to_json();
      }, py::arg("config"), py::arg("checkpoint"), py::arg("out"));
  m.def("sweep", [](const vfl::ExperimentConfig& cfg, const std::string& axis,
                    const std::vector<std::string>& values, std::vector<std::uint64_t> seeds,
                    const std::vector<std::string>& methods,
                    const std::optional<std::filesystem::path>& out) {
        vfl::SweepSpec spec;
        spec.axis = vfl::parse_sweep_axis(axis);
        spec.values = values;
        spec.seeds = seeds.empty() ? cfg.eval.seeds : std::move(seeds);
        if (!methods.empty()) {
          spec.methods.clear();
          for (const auto& name : methods) spec.methods.push_back(vfl::parse_method(name));
        }
        std::vector<vfl::SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = out ? vfl::cmd_sweep(cfg, spec, *out) : vfl::run_sweep(cfg, spec);
        }
        py::list result;
        for (const auto& row : rows) result.append(sweep_row(row));
        return result;
      }, py::arg("config"), py::arg("axis"), py::arg("values"),
        py::arg("seeds") = std::vector<std::uint64_t>{},
        py::arg("methods") = std::vector<std::string>{}, py::arg("out") = std::nullopt);
}
