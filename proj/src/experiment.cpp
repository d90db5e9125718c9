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

#include "vflsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vflsim/error.hpp"
#include "vflsim/synthetic.hpp"

namespace vfl {
namespace {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out.flush()) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FeatureSchema csv_schema(Party party, const std::vector<std::string>& columns,
                         const ExperimentConfig::Data& d) {
  FeatureSchema s;
  s.party = party;
  s.key_column = d.key_column;
  s.label_column = d.label_column;
  for (const auto& c : columns) s.slots.push_back({c, d.csv_vocab_size});
  s.validate();
  return s;
}

DatasetSplit prepare_csv(const ExperimentConfig::Data& d) {
  const RawFrame host_frame = read_csv(d.host_csv);
  const RawFrame guest_frame = read_csv(d.guest_csv);
  const FeatureSchema host_schema = csv_schema(Party::kHost, d.host_columns, d);
  const FeatureSchema guest_schema = csv_schema(Party::kGuest, d.guest_columns, d);
  const PartyDataset host = parse_frame(host_frame, host_schema);
  const PartyDataset guest = parse_frame(guest_frame, guest_schema);
  if (d.day_column.empty()) {
    return split_random(host, guest, d.validation_samples, d.test_samples, d.split_seed);
  }
  const auto it = std::find(host_frame.header.begin(), host_frame.header.end(), d.day_column);
  if (it == host_frame.header.end()) {
    throw DataError("day column '" + d.day_column + "' not found in " + d.host_csv);
  }
  const auto col = static_cast<std::size_t>(it - host_frame.header.begin());
  std::vector<std::string> days;
  days.reserve(host_frame.rows.size());
  for (const auto& row : host_frame.rows) days.push_back(row.at(col).substr(0, 6));
  return split_by_day(host, guest, days);
}

std::string epoch_log_text(const TrainOutcome& o) {
  std::string text;
  if (o.step1) {
    for (const EpochLog& e : o.step1->log) text += format_epoch_log(e) + "\n";
  }
  for (const EpochLog& e : o.result.log) text += format_epoch_log(e) + "\n";
  return text;
}

void stamp(Checkpoint& ckpt, const ExperimentConfig& cfg) {
  ckpt.config_digest = cfg.digest();
  ckpt.config_text = cfg.canonical();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::size_t parse_count(const std::string& raw) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(raw, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used != raw.size() || raw.empty() || raw[0] == '-') {
    throw ConfigError("sweep value '" + raw + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

// "25%" -> share of the available unaligned rows, otherwise an absolute count.
std::size_t unaligned_target(const std::string& raw, std::size_t available) {
  if (!raw.empty() && raw.back() == '%') {
    const std::string num = raw.substr(0, raw.size() - 1);
    double pct = 0.0;
    std::size_t used = 0;
    try {
      pct = std::stod(num, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != num.size() || num.empty() || !(pct >= 0.0 && pct <= 100.0)) {
      throw ConfigError("sweep value '" + raw + "' is not a percentage in [0, 100]");
    }
    return static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(available)));
  }
  return std::min(parse_count(raw), available);
}

const char* slice_name(int i) {
  static const char* names[] = {"overall", "aligned", "unaligned"};
  return names[i];
}

}  // namespace

DatasetSplit prepare_data(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  DatasetSplit split;
  if (d.source == "csv") {
    split = prepare_csv(d);
  } else {
    const SyntheticData syn = gen_synthetic(d.synthetic);
    split = split_random(syn.host, syn.guest, d.validation_samples, d.test_samples,
                         d.split_seed);
  }
  if (d.unaligned_train_samples >= 0) {
    truncate_unaligned(split.train, static_cast<std::size_t>(d.unaligned_train_samples));
  }
  return split;
}

GenDataResult cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out) {
  if (cfg.data.source != "synthetic") {
    throw ConfigError("data.source: gen-data only generates synthetic data");
  }
  const SyntheticData syn = gen_synthetic(cfg.data.synthetic);
  ensure_dir(out);
  write_csv(out / "host.csv", syn.host_frame);
  write_csv(out / "guest.csv", syn.guest_frame);

  const auto& s = cfg.data.synthetic;
  nlohmann::ordered_json m;
  m["config_digest"] = hex64(cfg.digest());
  m["seed"] = s.seed;
  m["n_samples"] = s.n_samples;
  m["aligned_fraction"] = s.aligned_fraction;
  m["guest_only_fraction"] = s.guest_only_fraction;
  m["n_host"] = syn.host.size();
  m["n_guest"] = syn.guest.size();
  m["n_aligned"] = syn.n_aligned;
  m["host_slots"] = syn.host_schema.slot_names();
  m["guest_slots"] = syn.guest_schema.slot_names();
  m["vocab_size"] = s.vocab_size;
  m["files"] = {"host.csv", "guest.csv"};
  write_text_atomic(out / "manifest.json", m.dump(2) + "\n");
  return {syn.host.size(), syn.guest.size(), syn.n_aligned};
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, const fs::path& out) {
  const TrainConfig tcfg = make_train_config(cfg);
  const DatasetSplit data = prepare_data(cfg);
  ensure_dir(out);
  RunContext ctx;
  TrainOutcome o;
  if (tcfg.method == Method::kFedUD) {
    TrainResult step1;
    o.result = train(data, tcfg, ctx, &step1);
    o.step1 = std::move(step1);
  } else {
    o.result = train(data, tcfg, ctx);
  }
  stamp(o.result.checkpoint, cfg);
  save_checkpoint(o.result.checkpoint, out / "checkpoint.fud");
  if (o.step1) {
    stamp(o.step1->checkpoint, cfg);
    save_checkpoint(o.step1->checkpoint, out / "checkpoint_step1.fud");
  }
  o.log_text = epoch_log_text(o);
  o.transcript_text = ctx.channel.transcript().to_text();
  write_text_atomic(out / "train_log.txt", o.log_text);
  write_text_atomic(out / "transcript.txt", o.transcript_text);
  return o;
}

MetricsReport evaluate(const TrainedModel& model, const DatasetSplit& data,
                       const ExperimentConfig& cfg, RunContext& ctx, PredictionSet* predictions) {
  const TrainConfig tcfg = make_train_config(cfg);
  PredictionSet preds = predict(model, data, tcfg, ctx, SplitName::kTest);
  MetricsReport report = slice_report(preds);
  report.method = to_string(tcfg.method);
  report.seed = cfg.training.seed;
  report.config_digest = cfg.digest();
  if (predictions) *predictions = std::move(preds);
  return report;
}

MetricsReport cmd_eval(const ExperimentConfig& cfg, const fs::path& checkpoint,
                       const fs::path& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  if (ckpt.config_digest != cfg.digest()) {
    throw CheckpointError("checkpoint '" + checkpoint.string() + "' was written under config " +
                          hex64(ckpt.config_digest) + " but the current config is " +
                          hex64(cfg.digest()));
  }
  const TrainConfig tcfg = make_train_config(cfg);
  const DatasetSplit data = prepare_data(cfg);
  const TrainedModel model = restore_model(ckpt, data, tcfg);
  RunContext ctx;
  PredictionSet preds;
  const MetricsReport report = evaluate(model, data, cfg, ctx, &preds);
  ensure_dir(out);
  write_text_atomic(out / "report.json", report.to_json());
  write_text_atomic(out / "predictions.csv", predictions_csv(preds));
  return report;
}

std::string predictions_csv(const PredictionSet& preds) {
  std::string out = "key,label,score,slice\n";
  for (const Prediction& p : preds) {
    out += csv_field(p.key) + "," + std::to_string(p.label) + "," + format_double(p.score) + "," +
           to_string(p.slice) + "\n";
  }
  return out;
}

PredictionSet parse_predictions_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "key,label,score,slice") {
    throw DataError("predictions csv: unexpected header");
  }
  PredictionSet preds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 4) {
      throw DataError("predictions csv line " + std::to_string(line_no) + ": expected 4 fields");
    }
    Prediction p;
    p.key = f[0];
    if (f[1] != "0" && f[1] != "1") {
      throw DataError("predictions csv line " + std::to_string(line_no) + ": bad label");
    }
    p.label = static_cast<std::uint8_t>(f[1] == "1");
    try {
      p.score = std::stod(f[2]);
    } catch (const std::logic_error&) {
      throw DataError("predictions csv line " + std::to_string(line_no) + ": bad score");
    }
    if (f[3] == "aligned") {
      p.slice = SliceTag::kAligned;
    } else if (f[3] == "unaligned") {
      p.slice = SliceTag::kUnaligned;
    } else {
      throw DataError("predictions csv line " + std::to_string(line_no) + ": bad slice");
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "guest_slots") return SweepAxis::kGuestSlots;
  if (name == "unaligned_samples") return SweepAxis::kUnalignedSamples;
  if (name == "alpha") return SweepAxis::kAlpha;
  if (name == "beta") return SweepAxis::kBeta;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected guest_slots, unaligned_samples, alpha or beta)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kGuestSlots: return "guest_slots";
    case SweepAxis::kUnalignedSamples: return "unaligned_samples";
    case SweepAxis::kAlpha: return "alpha";
    case SweepAxis::kBeta: return "beta";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
  if (spec.seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (spec.methods.empty()) throw ConfigError("sweep needs at least one method");
  const std::string axis = to_string(spec.axis);

  std::vector<SweepRow> rows;
  auto fail_cell = [&](const std::string& value, std::uint64_t seed, Method method,
                       const std::string& why) {
    for (int s = 0; s < 3; ++s) {
      SweepRow r;
      r.axis = axis;
      r.value = value;
      r.seed = seed;
      r.method = to_string(method);
      r.slice = slice_name(s);
      r.status = "error: " + why;
      rows.push_back(std::move(r));
    }
  };

  for (const std::string& value : spec.values) {
    ExperimentConfig point = cfg;
    std::optional<DatasetSplit> data;
    std::string data_error;
    try {
      switch (spec.axis) {
        case SweepAxis::kGuestSlots:
          set_config_value(point, "data.guest_slots", value);
          break;
        case SweepAxis::kAlpha:
          set_config_value(point, "training.alpha", value);
          break;
        case SweepAxis::kBeta:
          set_config_value(point, "training.beta", value);
          break;
        case SweepAxis::kUnalignedSamples:
          point.data.unaligned_train_samples = -1;
          break;
      }
      point.validate();
      data = prepare_data(point);
      if (spec.axis == SweepAxis::kUnalignedSamples) {
        const std::size_t n = unaligned_target(value, data->train.unaligned.size());
        truncate_unaligned(data->train, n);
        point.data.unaligned_train_samples = static_cast<long long>(n);
      }
    } catch (const Error& e) {
      data_error = e.what();
    }

    for (std::uint64_t seed : spec.seeds) {
      for (Method method : spec.methods) {
        if (!data) {
          fail_cell(value, seed, method, data_error);
          continue;
        }
        ExperimentConfig cell = point;
        cell.training.seed = seed;
        cell.training.method = to_string(method);
        try {
          const TrainConfig tcfg = make_train_config(cell);
          RunContext ctx;
          const TrainResult result = train(*data, tcfg, ctx);
          const MetricsReport report = evaluate(result.model, *data, cell, ctx);
          const SliceMetrics* slices[] = {&report.overall, &report.aligned, &report.unaligned};
          for (int s = 0; s < 3; ++s) {
            SweepRow r;
            r.axis = axis;
            r.value = value;
            r.seed = seed;
            r.method = to_string(method);
            r.slice = slice_name(s);
            r.auc = slices[s]->auc;
            r.logloss = slices[s]->logloss;
            r.n = slices[s]->n;
            rows.push_back(std::move(r));
          }
        } catch (const Error& e) {
          fail_cell(value, seed, method, e.what());
        }
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t config_digest) {
  std::string out = "axis,value,seed,method,slice,auc,logloss,n,status,config_digest\n";
  const std::string digest = hex64(config_digest);
  for (const SweepRow& r : rows) {
    out += r.axis + "," + csv_field(r.value) + "," + std::to_string(r.seed) + "," + r.method +
           "," + r.slice + "," + (r.auc ? format_double(*r.auc) : "") + "," +
           (r.logloss ? format_double(*r.logloss) : "") + "," + std::to_string(r.n) + "," +
           csv_field(r.status) + "," + digest + "\n";
  }
  return out;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const SweepSpec& spec,
                                const fs::path& out) {
  ensure_dir(out);
  std::vector<SweepRow> rows = run_sweep(cfg, spec);
  write_text_atomic(out / "sweep.csv", sweep_csv(rows, cfg.digest()));
  return rows;
}

}  // namespace vfl
