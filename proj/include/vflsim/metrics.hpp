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
#include <optional>
#include <span>
#include <string>

#include "vflsim/trainer.hpp"

namespace vfl {

// Probability that a random positive outranks a random negative, ties
// counting one half, computed from average ranks. Empty when the labels hold
// a single class.
std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean binary cross-entropy with scores clamped to [1e-7, 1 - 1e-7].
double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct SliceMetrics {
  std::optional<double> auc;
  std::optional<double> logloss;  // absent only for empty slices
  std::size_t n = 0;
  std::size_t n_pos = 0;

  bool operator==(const SliceMetrics&) const = default;
};

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  std::uint64_t config_digest = 0;
  SliceMetrics overall;
  SliceMetrics aligned;
  SliceMetrics unaligned;

  // {"method", "seed", "config_digest", "slices": {overall|aligned|unaligned:
  //  {"auc", "logloss", "n", "n_pos"}}}; absent metrics are null.
  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);

  bool operator==(const MetricsReport&) const = default;
};

SliceMetrics slice_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels);

MetricsReport slice_report(const PredictionSet& predictions);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool degenerate = false;  // every paired difference was zero
};

// Two-sided paired t-test on a - b with n - 1 degrees of freedom.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace vfl
