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

#include "vflsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include "json.hpp"

#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"

namespace vfl {

std::optional<double> auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("auc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the positives.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double p = static_cast<double>(n_pos);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(n_neg));
}

double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("logloss: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw ShapeError("logloss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], kProbClamp, 1.0 - kProbClamp);
    sum += labels[i] ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(scores.size());
}

SliceMetrics slice_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  SliceMetrics m;
  m.n = scores.size();
  m.n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (m.n == 0) return m;
  m.auc = auc(scores, labels);
  m.logloss = logloss(scores, labels);
  return m;
}

MetricsReport slice_report(const PredictionSet& predictions) {
  if (predictions.empty()) throw ShapeError("slice_report: empty prediction set");
  std::vector<double> all_s, al_s, un_s;
  std::vector<std::uint8_t> all_y, al_y, un_y;
  for (const Prediction& p : predictions) {
    all_s.push_back(p.score);
    all_y.push_back(p.label);
    auto& s = p.slice == SliceTag::kAligned ? al_s : un_s;
    auto& y = p.slice == SliceTag::kAligned ? al_y : un_y;
    s.push_back(p.score);
    y.push_back(p.label);
  }
  MetricsReport r;
  r.overall = slice_metrics(all_s, all_y);
  r.aligned = slice_metrics(al_s, al_y);
  r.unaligned = slice_metrics(un_s, un_y);
  return r;
}

namespace {

nlohmann::ordered_json slice_json(const SliceMetrics& m) {
  nlohmann::ordered_json j;
  j["auc"] = m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json(nullptr);
  j["logloss"] = m.logloss ? nlohmann::ordered_json(*m.logloss) : nlohmann::ordered_json(nullptr);
  j["n"] = m.n;
  j["n_pos"] = m.n_pos;
  return j;
}

SliceMetrics slice_from_json(const nlohmann::json& j) {
  SliceMetrics m;
  if (!j.at("auc").is_null()) m.auc = j.at("auc").get<double>();
  if (!j.at("logloss").is_null()) m.logloss = j.at("logloss").get<double>();
  m.n = j.at("n").get<std::size_t>();
  m.n_pos = j.at("n_pos").get<std::size_t>();
  return m;
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["seed"] = seed;
  char digest[17];
  std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(config_digest));
  j["config_digest"] = digest;
  j["slices"]["overall"] = slice_json(overall);
  j["slices"]["aligned"] = slice_json(aligned);
  j["slices"]["unaligned"] = slice_json(unaligned);
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_digest = std::stoull(j.at("config_digest").get<std::string>(), nullptr, 16);
    r.overall = slice_from_json(j.at("slices").at("overall"));
    r.aligned = slice_from_json(j.at("slices").at("aligned"));
    r.unaligned = slice_from_json(j.at("slices").at("unaligned"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("paired_ttest: sample sizes differ");
  if (a.size() < 2) throw ShapeError("paired_ttest: need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) {
    return {0.0, 1.0, true};
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double se = sd / std::sqrt(static_cast<double>(n));
  if (se == 0.0) {
    return {std::copysign(std::numeric_limits<double>::infinity(), mean), 0.0, false};
  }
  const double t = mean / se;
  if (!std::isfinite(t)) return {t, 0.0, false};
  boost::math::students_t dist(static_cast<double>(n - 1));
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, std::min(1.0, p), false};
}

}  // namespace vfl
