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
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vflsim/config.hpp"
#include "vflsim/data.hpp"
#include "vflsim/synthetic.hpp"
#include "vflsim/trainer.hpp"

namespace vfltest {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("vflsim_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline vfl::ModelDims small_dims() {
  vfl::ModelDims d;
  d.embedding_dim = 4;
  d.host_bottom = {16, 8};
  d.guest_bottom = {16, 8};
  d.top = {8};
  d.rep = {8, 8};
  return d;
}

inline vfl::SyntheticConfig small_synthetic(std::size_t n, std::uint64_t seed = 1) {
  vfl::SyntheticConfig s;
  s.n_samples = n;
  s.host_slots = 4;
  s.guest_slots = 5;
  s.vocab_size = 64;
  s.seed = seed;
  return s;
}

inline vfl::DatasetSplit small_split(std::size_t n, std::uint64_t seed = 1) {
  const auto syn = vfl::gen_synthetic(small_synthetic(n, seed));
  return vfl::split_random(syn.host, syn.guest, n / 10, n / 10, seed + 100);
}

inline vfl::TrainConfig small_train_config(vfl::Method method) {
  vfl::TrainConfig cfg;
  cfg.method = method;
  cfg.dims = small_dims();
  cfg.batch_size = 64;
  cfg.eval_batch_size = 256;
  cfg.max_epochs = 2;
  cfg.patience = 5;
  cfg.init_seed = 11;
  cfg.shuffle_seed = 12;
  return cfg;
}

// Experiment config small enough for end-to-end tests.
inline vfl::ExperimentConfig small_experiment(const std::filesystem::path& out) {
  vfl::ExperimentConfig cfg;
  cfg.data.synthetic = small_synthetic(1500);
  cfg.data.validation_samples = 200;
  cfg.data.test_samples = 300;
  cfg.model = small_dims();
  cfg.training.batch_size = 64;
  cfg.training.max_epochs = 2;
  cfg.output_dir = out.string();
  return cfg;
}

}  // namespace vfltest
