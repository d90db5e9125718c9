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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vflsim/synthetic.hpp"
#include "vflsim/trainer.hpp"

namespace vfl {

// Contents of an experiment file. The format is INI-like:
//
//   [section]
//   key = value      ; lists are comma separated, booleans true/false
//
// Every key has a default; unknown sections or keys are rejected.
struct ExperimentConfig {
  struct Data {
    std::string source = "synthetic";  // synthetic | csv
    SyntheticConfig synthetic;
    std::size_t validation_samples = 10000;
    std::size_t test_samples = 10000;
    // Unaligned training rows kept; negative keeps all.
    long long unaligned_train_samples = -1;
    std::string host_csv;
    std::string guest_csv;
    std::vector<std::string> host_columns;
    std::vector<std::string> guest_columns;
    std::size_t csv_vocab_size = 100003;
    std::string key_column = "key";
    std::string label_column = "click";
    // Non-empty: chronological split on the first 6 characters of this host
    // column (Avazu "hour" is YYMMDDHH). Empty: random split.
    std::string day_column;
    std::uint64_t split_seed = 7;
  } data;

  ModelDims model;

  struct Training {
    std::string method = "fedud";
    double alpha = 1.0;
    double beta = 1.0;
    std::string optimizer = "adam";
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 256;
    std::size_t eval_batch_size = 1024;
    std::size_t max_epochs = 20;
    std::size_t patience = 1;
    std::uint64_t seed = 1;
    bool distill_update_guest = false;
    bool step2_reinit = false;
  } training;

  struct Eval {
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  } eval;

  std::string output_dir = "out";

  // Canonical text listing every key; the config digest hashes this.
  std::string canonical() const;
  std::uint64_t digest() const;
  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one "section.key=value" override with the same typing rules.
void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key,
                      const std::string& value);

TrainConfig make_train_config(const ExperimentConfig& cfg);

}  // namespace vfl
