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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vflsim/config.hpp"
#include "vflsim/metrics.hpp"
#include "vflsim/trainer.hpp"

namespace vfl {

// Builds the train/validation/test split described by the data section.
DatasetSplit prepare_data(const ExperimentConfig& cfg);

struct GenDataResult {
  std::size_t n_host = 0;
  std::size_t n_guest = 0;
  std::size_t n_aligned = 0;
};

// Writes host.csv, guest.csv and manifest.json into `out`.
GenDataResult cmd_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out);

struct TrainOutcome {
  TrainResult result;
  std::optional<TrainResult> step1;
  std::string log_text;
  std::string transcript_text;
};

// Trains cfg.training.method and writes checkpoint.fud (plus
// checkpoint_step1.fud for fedud), train_log.txt and transcript.txt.
TrainOutcome cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& out);

// Scores the test split with a checkpoint; writes report.json and
// predictions.csv into `out`.
MetricsReport cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                       const std::filesystem::path& out);

MetricsReport evaluate(const TrainedModel& model, const DatasetSplit& data,
                       const ExperimentConfig& cfg, RunContext& ctx,
                       PredictionSet* predictions = nullptr);

std::string predictions_csv(const PredictionSet& preds);
PredictionSet parse_predictions_csv(const std::string& text);

enum class SweepAxis { kGuestSlots, kUnalignedSamples, kAlpha, kBeta };

SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

struct SweepRow {
  std::string axis;
  std::string value;
  std::uint64_t seed = 0;
  std::string method;
  std::string slice;
  std::optional<double> auc;
  std::optional<double> logloss;
  std::size_t n = 0;
  std::string status = "ok";
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::kUnalignedSamples;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods = {Method::kFedUD, Method::kFedSplitNN, Method::kLocalDnn};
};

// Runs train + eval for every (value, seed, method) cell. A failing cell
// records its error in `status` and the sweep continues.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const SweepSpec& spec);

std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t config_digest);

// Writes sweep.csv into `out`.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const SweepSpec& spec,
                                const std::filesystem::path& out);

}  // namespace vfl
