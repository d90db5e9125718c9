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

#include "vflsim/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "vflsim/error.hpp"
#include "vflsim/rng.hpp"

namespace vfl {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, raw, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) bad_value(key, raw, "a number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, raw, "a number");
  }
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, raw, "true or false");
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

struct Field {
  std::string key;  // section.name
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define VFL_FIELD(KEY, MEMBER, PARSE, FORMAT)                                             \
  Field {                                                                                 \
    KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = PARSE(KEY, v); },     \
        [](const ExperimentConfig& c) { return FORMAT(c.MEMBER); }                       \
  }

std::string parse_string(const std::string&, const std::string& v) { return trim(v); }
std::string format_string(const std::string& v) { return v; }
std::size_t parse_size(const std::string& k, const std::string& v) {
  return parse_integer<std::size_t>(k, v);
}
long long parse_ll(const std::string& k, const std::string& v) {
  return parse_integer<long long>(k, v);
}
std::uint64_t parse_u64(const std::string& k, const std::string& v) {
  return parse_integer<std::uint64_t>(k, v);
}
template <typename T>
std::string format_int(T v) {
  return std::to_string(v);
}
std::string format_bool(bool v) { return v ? "true" : "false"; }
std::vector<std::size_t> parse_sizes(const std::string& k, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_size(k, item));
  return out;
}
std::vector<std::uint64_t> parse_u64s(const std::string& k, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(v)) out.push_back(parse_u64(k, item));
  return out;
}
std::vector<double> parse_reals(const std::string& k, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_real(k, item));
  return out;
}
std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_real(v[i]);
  return out;
}
std::vector<std::string> parse_strings(const std::string&, const std::string& v) {
  return split_list(v);
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      VFL_FIELD("data.source", data.source, parse_string, format_string),
      VFL_FIELD("data.n_samples", data.synthetic.n_samples, parse_size, format_int),
      VFL_FIELD("data.aligned_fraction", data.synthetic.aligned_fraction, parse_real, format_real),
      VFL_FIELD("data.guest_only_fraction", data.synthetic.guest_only_fraction, parse_real,
                format_real),
      VFL_FIELD("data.host_slots", data.synthetic.host_slots, parse_size, format_int),
      VFL_FIELD("data.guest_slots", data.synthetic.guest_slots, parse_size, format_int),
      VFL_FIELD("data.vocab_size", data.synthetic.vocab_size, parse_size, format_int),
      VFL_FIELD("data.buckets", data.synthetic.buckets, parse_size, format_int),
      VFL_FIELD("data.host_view_noise", data.synthetic.host_view_noise, parse_reals, join_reals),
      VFL_FIELD("data.guest_view_noise", data.synthetic.guest_view_noise, parse_reals,
                join_reals),
      VFL_FIELD("data.slot_noise", data.synthetic.slot_noise, parse_real, format_real),
      VFL_FIELD("data.label_scale", data.synthetic.label_scale, parse_real, format_real),
      VFL_FIELD("data.label_noise", data.synthetic.label_noise, parse_real, format_real),
      VFL_FIELD("data.seed", data.synthetic.seed, parse_u64, format_int),
      VFL_FIELD("data.validation_samples", data.validation_samples, parse_size, format_int),
      VFL_FIELD("data.test_samples", data.test_samples, parse_size, format_int),
      VFL_FIELD("data.unaligned_train_samples", data.unaligned_train_samples, parse_ll,
                format_int),
      VFL_FIELD("data.split_seed", data.split_seed, parse_u64, format_int),
      VFL_FIELD("data.host_csv", data.host_csv, parse_string, format_string),
      VFL_FIELD("data.guest_csv", data.guest_csv, parse_string, format_string),
      VFL_FIELD("data.host_columns", data.host_columns, parse_strings, join),
      VFL_FIELD("data.guest_columns", data.guest_columns, parse_strings, join),
      VFL_FIELD("data.csv_vocab_size", data.csv_vocab_size, parse_size, format_int),
      VFL_FIELD("data.key_column", data.key_column, parse_string, format_string),
      VFL_FIELD("data.label_column", data.label_column, parse_string, format_string),
      VFL_FIELD("data.day_column", data.day_column, parse_string, format_string),
      VFL_FIELD("model.embedding_dim", model.embedding_dim, parse_size, format_int),
      VFL_FIELD("model.host_bottom", model.host_bottom, parse_sizes, join),
      VFL_FIELD("model.guest_bottom", model.guest_bottom, parse_sizes, join),
      VFL_FIELD("model.top", model.top, parse_sizes, join),
      VFL_FIELD("model.rep", model.rep, parse_sizes, join),
      VFL_FIELD("training.method", training.method, parse_string, format_string),
      VFL_FIELD("training.alpha", training.alpha, parse_real, format_real),
      VFL_FIELD("training.beta", training.beta, parse_real, format_real),
      VFL_FIELD("training.optimizer", training.optimizer, parse_string, format_string),
      VFL_FIELD("training.learning_rate", training.learning_rate, parse_real, format_real),
      VFL_FIELD("training.adam_beta1", training.adam_beta1, parse_real, format_real),
      VFL_FIELD("training.adam_beta2", training.adam_beta2, parse_real, format_real),
      VFL_FIELD("training.adam_epsilon", training.adam_epsilon, parse_real, format_real),
      VFL_FIELD("training.batch_size", training.batch_size, parse_size, format_int),
      VFL_FIELD("training.eval_batch_size", training.eval_batch_size, parse_size, format_int),
      VFL_FIELD("training.max_epochs", training.max_epochs, parse_size, format_int),
      VFL_FIELD("training.patience", training.patience, parse_size, format_int),
      VFL_FIELD("training.seed", training.seed, parse_u64, format_int),
      VFL_FIELD("training.distill_update_guest", training.distill_update_guest, parse_bool,
                format_bool),
      VFL_FIELD("training.step2_reinit", training.step2_reinit, parse_bool, format_bool),
      VFL_FIELD("eval.seeds", eval.seeds, parse_u64s, join),
      VFL_FIELD("output.dir", output_dir, parse_string, format_string),
  };
  return table;
}

#undef VFL_FIELD

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& dotted_key,
                      const std::string& value) {
  for (const Field& f : fields()) {
    if (f.key == dotted_key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + dotted_key + "'");
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const Field& f : fields()) out += f.key + "=" + f.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::digest() const {
  // Where results land does not change what they are.
  ExperimentConfig c = *this;
  c.output_dir.clear();
  return fnv1a64(c.canonical());
}

void ExperimentConfig::validate() const {
  if (data.source != "synthetic" && data.source != "csv") {
    throw ConfigError("data.source must be synthetic or csv, got '" + data.source + "'");
  }
  if (data.source == "synthetic") {
    data.synthetic.validate();
  } else {
    if (data.host_csv.empty() || data.guest_csv.empty()) {
      throw ConfigError("data.host_csv and data.guest_csv are required for csv input");
    }
    if (data.host_columns.empty() || data.guest_columns.empty()) {
      throw ConfigError("data.host_columns and data.guest_columns are required for csv input");
    }
    if (data.csv_vocab_size < 2) throw ConfigError("data.csv_vocab_size must be >= 2");
  }
  if (eval.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
  make_train_config(*this).validate();
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) set_config_value(cfg, section + "." + key, value.data());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

TrainConfig make_train_config(const ExperimentConfig& cfg) {
  TrainConfig t;
  t.method = parse_method(cfg.training.method);
  t.alpha = cfg.training.alpha;
  t.beta = cfg.training.beta;
  t.optimizer.kind = parse_optimizer_kind(cfg.training.optimizer);
  t.optimizer.learning_rate = cfg.training.learning_rate;
  t.optimizer.beta1 = cfg.training.adam_beta1;
  t.optimizer.beta2 = cfg.training.adam_beta2;
  t.optimizer.epsilon = cfg.training.adam_epsilon;
  t.batch_size = cfg.training.batch_size;
  t.eval_batch_size = cfg.training.eval_batch_size;
  t.max_epochs = cfg.training.max_epochs;
  t.patience = cfg.training.patience;
  t.init_seed = derive_seed(cfg.training.seed, "init");
  t.shuffle_seed = derive_seed(cfg.training.seed, "shuffle");
  t.dims = cfg.model;
  t.distill_update_guest = cfg.training.distill_update_guest;
  t.step2_reinit = cfg.training.step2_reinit;
  return t;
}

}  // namespace vfl
