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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vflsim/checkpoint.hpp"
#include "vflsim/data.hpp"
#include "vflsim/federation.hpp"
#include "vflsim/local_model.hpp"
#include "vflsim/model.hpp"
#include "vflsim/optimizer.hpp"

namespace vfl {

enum class Method { kFedUD, kFedSplitNN, kLocalDnn };

std::string to_string(Method method);
Method parse_method(const std::string& tag);

struct TrainConfig {
  Method method = Method::kFedUD;
  double alpha = 1.0;  // loss2 weight in step 1
  double beta = 1.0;   // unaligned BCE weight in step 2
  OptimizerConfig optimizer;
  std::size_t batch_size = 256;
  std::size_t eval_batch_size = 1024;
  std::size_t max_epochs = 20;
  std::size_t patience = 1;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;
  ModelDims dims;
  // Let loss2 also push gradients into the guest bottom model.
  bool distill_update_guest = false;
  // Step 2 re-initializes everything except Rep instead of warm-starting.
  bool step2_reinit = false;

  void validate() const;
  // Stable "key=value" lines; the checkpoint digest is taken over this text.
  std::string canonical() const;
  std::uint64_t digest() const;
};

// Trained parameters of any method.
struct TrainedModel {
  Method method = Method::kFedUD;
  std::optional<GuestParty> guest;
  std::optional<HostParty> host;
  std::optional<LocalModel> local;
};

struct EpochLog {
  std::string phase;  // step1, step2, fedsplitnn, local_dnn
  std::size_t epoch = 0;
  double loss1 = 0.0;  // mean aligned BCE (step 1 / fedsplitnn / step2 aligned term)
  double loss2 = 0.0;  // mean distillation MSE (step 1)
  double loss3 = 0.0;  // mean step-2 objective
  double loss = 0.0;   // mean optimized objective
  std::optional<double> validation_auc;
  std::size_t forward_messages = 0;  // training only
  std::size_t backward_messages = 0;
  std::size_t validation_messages = 0;
  std::size_t steps = 0;
};

std::string format_epoch_log(const EpochLog& log);

struct TrainResult {
  Checkpoint checkpoint;  // best epoch by validation AUC
  TrainedModel model;     // parameters of that checkpoint
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

// Rows touched per partition, for data-access discipline checks.
struct AccessCounters {
  std::size_t train_aligned = 0;
  std::size_t train_unaligned = 0;
  std::size_t validation_aligned = 0;
  std::size_t validation_unaligned = 0;
  std::size_t test_aligned = 0;
  std::size_t test_unaligned = 0;
};

struct StepInfo {
  std::string phase;
  std::size_t epoch = 0;
  std::size_t step = 0;
  double loss = 0.0;
  const TrainedModel* model = nullptr;
};

// Inputs of one step-2 update, exposed before parameters change.
struct Step2Probe {
  std::size_t epoch = 0;
  std::size_t step = 0;
  const HostParty* host = nullptr;
  const GuestParty* guest = nullptr;
  IndexMatrix aligned_host_x;
  IndexMatrix aligned_guest_x;
  Tensor aligned_labels;
  std::optional<IndexMatrix> unaligned_host_x;
  std::optional<Tensor> unaligned_labels;
  double bce_aligned = 0.0;
  double bce_unaligned = 0.0;
  double loss3 = 0.0;
};

struct TrainHooks {
  std::function<void(const StepInfo&)> after_step;
  std::function<void(const Step2Probe&)> before_step2_update;
};

// Everything a run shares across phases: the cross-party channel (and thus
// the transcript), hooks, and access counters.
struct RunContext {
  InProcessChannel channel;
  TrainHooks hooks;
  AccessCounters access;
  std::uint64_t next_batch_id = 0;
};

// Step 1: aligned data only, loss1 + alpha * loss2 with h_G detached in loss2.
TrainResult train_step1(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx);

// Step 2: warm start from step 1, Rep frozen, BCE(aligned) + beta * BCE(unaligned).
TrainResult train_step2(const DatasetSplit& data, const TrainConfig& cfg,
                        const Checkpoint& step1, RunContext& ctx);

TrainResult train_fedsplitnn(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx);

TrainResult train_local_dnn(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx);

// Dispatches on cfg.method; FedUD runs both steps and returns the step-2
// result with the step-1 result in `step1_out` when given.
TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx,
                  TrainResult* step1_out = nullptr);

enum class SliceTag { kAligned, kUnaligned };

std::string to_string(SliceTag tag);

struct Prediction {
  std::string key;
  std::uint8_t label = 0;
  double score = 0.5;
  SliceTag slice = SliceTag::kAligned;
};

using PredictionSet = std::vector<Prediction>;

enum class SplitName { kValidation, kTest };

// Scores every row of the chosen split once. Aligned rows go through the
// guest (one ForwardReps per batch). Unaligned rows use Rep for FedUD, a
// zero guest representation for FedSplitNN, and the local net for local DNN.
PredictionSet predict(const TrainedModel& model, const DatasetSplit& data,
                      const TrainConfig& cfg, RunContext& ctx,
                      SplitName split = SplitName::kTest);

// Checkpoint <-> parameters. restore_model checks every tensor shape against
// a model built from `cfg` and names the offending component on mismatch.
Checkpoint capture_model(const TrainedModel& model, const TrainConfig& cfg,
                         const std::string& phase, std::int64_t epoch,
                         std::vector<double> validation_history);
TrainedModel restore_model(const Checkpoint& ckpt, const DatasetSplit& data,
                           const TrainConfig& cfg);

}  // namespace vfl
