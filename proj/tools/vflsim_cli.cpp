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

// vflsim command line: gen-data, train, eval, sweep.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vflsim/config.hpp"
#include "vflsim/error.hpp"
#include "vflsim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitInternal = 4;

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, CLI::Option** seed_opt) {
  cmd->add_option("--config", c.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (overrides output.dir)");
  *seed_opt = cmd->add_option("--seed", c.seed,
                              "Seed override (data.seed for gen-data, else training.seed)");
  cmd->add_option("--set", c.overrides, "Override one key, e.g. --set training.alpha=0.5");
}

vfl::ExperimentConfig resolve(const Common& c, const CLI::Option* seed_opt,
                              bool data_seed = false) {
  vfl::ExperimentConfig cfg = c.config.empty() ? vfl::ExperimentConfig{} : vfl::load_config(c.config);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw vfl::ConfigError("--set expects key=value, got '" + kv + "'");
    vfl::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed_opt->count() > 0) {
    if (data_seed) {
      cfg.data.synthetic.seed = c.seed;
    } else {
      cfg.training.seed = c.seed;
    }
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

std::string fmt(const std::optional<double>& v) {
  return v ? std::to_string(*v) : std::string("n/a");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-party vertical federated CTR simulator"};
  app.require_subcommand(1);

  Common common;
  CLI::Option* seed_opt = nullptr;

  auto* gen = app.add_subcommand("gen-data", "Write synthetic host/guest CSV files and a manifest");
  add_common(gen, common, &seed_opt);
  CLI::Option* gen_seed = seed_opt;

  auto* train = app.add_subcommand("train", "Train the configured method and write checkpoints");
  add_common(train, common, &seed_opt);
  CLI::Option* train_seed = seed_opt;

  auto* eval = app.add_subcommand("eval", "Score the test split and write a sliced report");
  add_common(eval, common, &seed_opt);
  CLI::Option* eval_seed = seed_opt;
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate every (value, seed, method) cell");
  add_common(sweep, common, &seed_opt);
  CLI::Option* sweep_seed = seed_opt;
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  sweep->add_option("--axis", axis, "guest_slots, unaligned_samples, alpha or beta")->required();
  sweep->add_option("--values", values, "Comma separated axis values")->required()->delimiter(',');
  sweep->add_option("--seeds", seeds, "Comma separated seeds (default: eval.seeds)")
      ->delimiter(',');
  sweep->add_option("--methods", methods, "Comma separated methods (default: all)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      const auto cfg = resolve(common, gen_seed, true);
      const auto r = vfl::cmd_gen_data(cfg, cfg.output_dir);
      std::cout << "host=" << r.n_host << " guest=" << r.n_guest << " aligned=" << r.n_aligned
                << " out=" << cfg.output_dir << "\n";
    } else if (train->parsed()) {
      const auto cfg = resolve(common, train_seed);
      const auto o = vfl::cmd_train(cfg, cfg.output_dir);
      std::cout << o.log_text << "best_epoch=" << o.result.best_epoch
                << " out=" << cfg.output_dir << "\n";
    } else if (eval->parsed()) {
      const auto cfg = resolve(common, eval_seed);
      const auto report = vfl::cmd_eval(cfg, checkpoint, cfg.output_dir);
      std::cout << report.to_json();
    } else if (sweep->parsed()) {
      const auto cfg = resolve(common, sweep_seed);
      vfl::SweepSpec spec;
      spec.axis = vfl::parse_sweep_axis(axis);
      spec.values = values;
      spec.seeds = seeds.empty() ? cfg.eval.seeds : seeds;
      if (!methods.empty()) {
        spec.methods.clear();
        for (const auto& m : methods) spec.methods.push_back(vfl::parse_method(m));
      }
      const auto rows = vfl::cmd_sweep(cfg, spec, cfg.output_dir);
      for (const auto& r : rows) {
        if (r.slice != "overall") continue;
        std::cout << r.axis << "=" << r.value << " seed=" << r.seed
                  << " method=" << r.method << " auc=" << fmt(r.auc) << " " << r.status << "\n";
      }
    }
  } catch (const vfl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const vfl::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const vfl::NumericError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const vfl::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const vfl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitData;
  } catch (const vfl::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitData;
  } catch (const vfl::VocabError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const vfl::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
