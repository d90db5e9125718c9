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

#include "vflsim/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"
#include "vflsim/metrics.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

std::string to_string(Method method) {
  switch (method) {
    case Method::kFedUD: return "fedud";
    case Method::kFedSplitNN: return "fedsplitnn";
    case Method::kLocalDnn: return "local_dnn";
  }
  return "unknown";
}

Method parse_method(const std::string& tag) {
  if (tag == "fedud") return Method::kFedUD;
  if (tag == "fedsplitnn") return Method::kFedSplitNN;
  if (tag == "local_dnn") return Method::kLocalDnn;
  throw ConfigError("unknown method '" + tag + "' (expected fedud, fedsplitnn or local_dnn)");
}

std::string to_string(SliceTag tag) {
  return tag == SliceTag::kAligned ? "aligned" : "unaligned";
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (eval_batch_size < 1) throw ConfigError("eval_batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  dims.validate();
}

std::string TrainConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "method=" << to_string(method) << '\n'
     << "alpha=" << alpha << '\n'
     << "beta=" << beta << '\n'
     << "optimizer=" << to_string(optimizer.kind) << '\n'
     << "learning_rate=" << optimizer.learning_rate << '\n'
     << "adam=" << optimizer.beta1 << ',' << optimizer.beta2 << ',' << optimizer.epsilon << '\n'
     << "batch_size=" << batch_size << '\n'
     << "eval_batch_size=" << eval_batch_size << '\n'
     << "max_epochs=" << max_epochs << '\n'
     << "patience=" << patience << '\n'
     << "init_seed=" << init_seed << '\n'
     << "shuffle_seed=" << shuffle_seed << '\n'
     << "dims=" << dims.describe() << '\n'
     << "distill_update_guest=" << distill_update_guest << '\n'
     << "step2_reinit=" << step2_reinit << '\n';
  return os.str();
}

std::uint64_t TrainConfig::digest() const { return fnv1a64(canonical()); }

std::string format_epoch_log(const EpochLog& log) {
  std::ostringstream os;
  os << std::setprecision(8);
  os << "phase=" << log.phase << " epoch=" << log.epoch << " steps=" << log.steps;
  if (log.phase == "step1") {
    os << " loss1=" << log.loss1 << " loss2=" << log.loss2;
  } else if (log.phase == "step2") {
    os << " loss1=" << log.loss1 << " loss3=" << log.loss3;
  }
  os << " loss=" << log.loss << " val_auc=";
  if (log.validation_auc) {
    os << *log.validation_auc;
  } else {
    os << "NA";
  }
  os << " fwd_msgs=" << log.forward_messages << " bwd_msgs=" << log.backward_messages
     << " val_msgs=" << log.validation_messages;
  return os.str();
}

namespace {

// ---------------------------------------------------------------------------
// Parameter inventory shared by checkpoint capture and restore.

struct Component {
  std::string name;
  std::vector<std::pair<std::string, const Tensor*>> params;
  const OptimizerState* optimizer = nullptr;
};

void add_embedding(std::vector<Component>& out, const std::string& name,
                   const EmbeddingSet& emb, const OptimizerState& opt) {
  Component c{name, {}, &opt};
  for (const auto& t : emb.tables()) c.params.emplace_back(name + "." + t.slot, &t.rows);
  out.push_back(std::move(c));
}

void add_mlp(std::vector<Component>& out, const std::string& name, const Mlp& mlp,
             const OptimizerState& opt) {
  Component c{name, {}, &opt};
  for (std::size_t i = 0; i < mlp.num_layers(); ++i) {
    c.params.emplace_back(name + "." + std::to_string(i) + ".weight", &mlp.layers()[i].weight);
    c.params.emplace_back(name + "." + std::to_string(i) + ".bias", &mlp.layers()[i].bias);
  }
  out.push_back(std::move(c));
}

std::vector<Component> components(const TrainedModel& m) {
  std::vector<Component> out;
  if (m.guest) {
    add_embedding(out, "guest.embedding", m.guest->embedding(), m.guest->embedding_optimizer());
    add_mlp(out, "guest.bottom", m.guest->bottom(), m.guest->bottom_optimizer());
  }
  if (m.host) {
    add_embedding(out, "host.embedding", m.host->embedding(), m.host->embedding_optimizer());
    add_mlp(out, "host.bottom", m.host->bottom(), m.host->bottom_optimizer());
    add_mlp(out, "host.top", m.host->top(), m.host->top_optimizer());
    if (m.host->has_rep()) add_mlp(out, "host.rep", m.host->rep(), m.host->rep_optimizer());
  }
  if (m.local) {
    add_embedding(out, "local.embedding", m.local->embedding(), m.local->embedding_optimizer());
    add_mlp(out, "local.bottom", m.local->bottom(), m.local->bottom_optimizer());
    add_mlp(out, "local.head", m.local->head(), m.local->head_optimizer());
  }
  return out;
}

void touch_all(TrainedModel& m) {
  if (m.guest) m.guest->bottom().touch();
  if (m.host) {
    m.host->bottom().touch();
    m.host->top().touch();
    if (m.host->has_rep()) m.host->rep().touch();
  }
  if (m.local) {
    m.local->bottom().touch();
    m.local->head().touch();
  }
}

TrainedModel fresh_model(Method method, const DatasetSplit& data, const TrainConfig& cfg) {
  TrainedModel m;
  m.method = method;
  switch (method) {
    case Method::kFedUD:
    case Method::kFedSplitNN:
      m.guest = GuestParty::create(data.guest_schema, cfg.dims, cfg.optimizer, cfg.init_seed);
      m.host = HostParty::create(data.host_schema, cfg.dims, cfg.optimizer, cfg.init_seed,
                                 method == Method::kFedUD);
      break;
    case Method::kLocalDnn:
      m.local = LocalModel::create(data.host_schema, cfg.dims, cfg.optimizer, cfg.init_seed);
      break;
  }
  return m;
}

void reset_optimizers(TrainedModel& m, const OptimizerConfig& opt) {
  if (m.guest) {
    m.guest->embedding_optimizer() = OptimizerState(opt);
    m.guest->bottom_optimizer() = OptimizerState(opt);
  }
  if (m.host) {
    m.host->embedding_optimizer() = OptimizerState(opt);
    m.host->bottom_optimizer() = OptimizerState(opt);
    m.host->top_optimizer() = OptimizerState(opt);
    m.host->rep_optimizer() = OptimizerState(opt);
  }
}

// ---------------------------------------------------------------------------
// Batches

struct AlignedBatch {
  IndexMatrix host_x;
  IndexMatrix guest_x;
  Tensor labels;
};

AlignedBatch gather_aligned(const AlignedData& d, std::span<const std::size_t> rows,
                            std::size_t& counter) {
  counter += rows.size();
  return {gather_rows(d.host_x, rows), gather_rows(d.guest_x, rows), labels_tensor(d.labels, rows)};
}

struct HostBatch {
  IndexMatrix host_x;
  Tensor labels;
};

HostBatch gather_unaligned(const UnalignedData& d, std::span<const std::size_t> rows,
                           std::size_t& counter) {
  counter += rows.size();
  return {gather_rows(d.host_x, rows), labels_tensor(d.labels, rows)};
}

std::vector<std::size_t> range_rows(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  for (std::size_t i = begin; i < end; ++i) rows[i - begin] = i;
  return rows;
}

// Endless stream of shuffled batches; each exhaustion starts a new pass with
// a fresh permutation.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
      : n_(n), batch_size_(batch_size), seed_(seed) {}

  std::size_t batches_per_pass() const { return (n_ + batch_size_ - 1) / batch_size_; }

  const std::vector<std::size_t>& next() {
    if (cursor_ >= current_.size()) {
      current_ = batch_iter(n_, batch_size_, seed_, pass_++);
      cursor_ = 0;
    }
    return current_[cursor_++];
  }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::uint64_t pass_ = 0;
  std::vector<std::vector<std::size_t>> current_;
  std::size_t cursor_ = 0;
};

Tensor fetch_guest_reps(const GuestParty& guest, const IndexMatrix& guest_x, RunContext& ctx) {
  const std::uint64_t id = ctx.next_batch_id++;
  ctx.channel.send(guest.infer(guest_x, id));
  return expect_forward_reps(ctx.channel.receive(Party::kHost), id, guest.rep_dim(), guest_x.rows);
}

// ---------------------------------------------------------------------------
// Scoring

void score_aligned(const TrainedModel& m, const AlignedData& d, std::size_t eval_bs,
                   RunContext& ctx, std::size_t& counter, PredictionSet& out) {
  for (std::size_t start = 0; start < d.size(); start += eval_bs) {
    const auto rows = range_rows(start, std::min(d.size(), start + eval_bs));
    const AlignedBatch b = gather_aligned(d, rows, counter);
    Tensor probs;
    if (m.local) {
      probs = m.local->forward(b.host_x).probs;
    } else {
      const Tensor h_guest = fetch_guest_reps(*m.guest, b.guest_x, ctx);
      probs = m.host->forward_aligned(b.host_x, h_guest).probs;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.push_back({d.keys[rows[i]], d.labels[rows[i]], probs[i], SliceTag::kAligned});
    }
  }
}

void score_unaligned(const TrainedModel& m, const UnalignedData& d, std::size_t eval_bs,
                     std::size_t& counter, PredictionSet& out) {
  for (std::size_t start = 0; start < d.size(); start += eval_bs) {
    const auto rows = range_rows(start, std::min(d.size(), start + eval_bs));
    const HostBatch b = gather_unaligned(d, rows, counter);
    Tensor probs;
    if (m.local) {
      probs = m.local->forward(b.host_x).probs;
    } else if (m.host->has_rep()) {
      probs = m.host->forward_unaligned(b.host_x).probs;
    } else {
      probs = m.host->forward_zero_imputed(b.host_x).probs;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.push_back({d.keys[rows[i]], d.labels[rows[i]], probs[i], SliceTag::kUnaligned});
    }
  }
}

std::optional<double> prediction_auc(const PredictionSet& preds) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (const auto& p : preds) {
    s.push_back(p.score);
    y.push_back(p.label);
  }
  return auc(s, y);
}

// Validation AUC; `include_unaligned` selects the full validation set.
std::optional<double> validate(const TrainedModel& m, const DatasetSplit& data,
                               const TrainConfig& cfg, RunContext& ctx, bool include_unaligned) {
  PredictionSet preds;
  score_aligned(m, data.validation.aligned, cfg.eval_batch_size, ctx,
                ctx.access.validation_aligned, preds);
  if (include_unaligned) {
    score_unaligned(m, data.validation.unaligned, cfg.eval_batch_size,
                    ctx.access.validation_unaligned, preds);
  }
  if (preds.empty()) return std::nullopt;
  return prediction_auc(preds);
}

// ---------------------------------------------------------------------------
// Epoch bookkeeping

class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // True when this epoch is the new best.
  bool observe(std::optional<double> metric) {
    const double v = metric.value_or(-std::numeric_limits<double>::infinity());
    if (!seen_ || v > best_) {
      best_ = v;
      seen_ = true;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }
  bool should_stop() const { return stale_ > 0 && stale_ >= patience_; }

 private:
  std::size_t patience_;
  double best_ = 0.0;
  bool seen_ = false;
  std::size_t stale_ = 0;
};

void end_epoch_handshake(RunContext& ctx) {
  ctx.channel.send(PartyMessage::control(Party::kHost, ControlTag::kEpochEnd));
  ctx.channel.receive(Party::kGuest);
}

struct MessageMark {
  std::size_t forward;
  std::size_t backward;
};

MessageMark mark(const RunContext& ctx) {
  return {ctx.channel.transcript().count("ForwardReps"),
          ctx.channel.transcript().count("BackwardGrads")};
}

void check_finite_loss(double loss, const std::string& phase, std::size_t epoch,
                       std::size_t step) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(phase + ": non-finite loss at epoch " + std::to_string(epoch) +
                          ", batch " + std::to_string(step));
  }
}

[[noreturn]] void rethrow_divergence(const NumericError& e, const std::string& phase,
                                     std::size_t epoch, std::size_t step) {
  throw DivergenceError(phase + ": " + e.what() + " at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(step));
}

// Runs the epoch loop with validation and early stopping. `run_epoch` trains
// one epoch and fills the loss columns of the log entry.
template <typename EpochFn>
TrainResult fit(TrainedModel model, const std::string& phase, const DatasetSplit& data,
                const TrainConfig& cfg, RunContext& ctx, bool validate_full, EpochFn run_epoch) {
  TrainResult result;
  EarlyStopping stopper(cfg.patience);
  std::vector<double> history;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const MessageMark before = mark(ctx);
    EpochLog log;
    log.phase = phase;
    log.epoch = epoch;
    run_epoch(model, epoch, log);
    const MessageMark trained = mark(ctx);
    log.forward_messages = trained.forward - before.forward;
    log.backward_messages = trained.backward - before.backward;
    if (model.guest) end_epoch_handshake(ctx);
    log.validation_auc = validate(model, data, cfg, ctx, validate_full);
    log.validation_messages = mark(ctx).forward - trained.forward;
    history.push_back(log.validation_auc.value_or(std::numeric_limits<double>::quiet_NaN()));
    result.log.push_back(log);
    if (stopper.observe(log.validation_auc)) {
      result.model = model;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  result.checkpoint = capture_model(result.model, cfg, phase,
                                    static_cast<std::int64_t>(result.best_epoch), history);
  return result;
}

// Step 1 and FedSplitNN share this loop; only the presence of Rep and alpha
// differ.
TrainResult train_aligned_phase(const DatasetSplit& data, const TrainConfig& cfg,
                                RunContext& ctx, Method method, const std::string& phase) {
  cfg.validate();
  const AlignedData& train = data.train.aligned;
  if (train.size() == 0) throw ConfigError(phase + ": aligned training data is empty");
  const bool distill = method == Method::kFedUD;
  const double alpha = distill ? cfg.alpha : 0.0;

  auto run_epoch = [&](TrainedModel& m, std::size_t epoch, EpochLog& log) {
    GuestParty& guest = *m.guest;
    HostParty& host = *m.host;
    const auto batches = batch_iter(train.size(), cfg.batch_size, cfg.shuffle_seed, epoch);
    double sum1 = 0.0, sum2 = 0.0, sum = 0.0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      try {
        const AlignedBatch b = gather_aligned(train, batches[step], ctx.access.train_aligned);
        const std::uint64_t id = ctx.next_batch_id++;
        ctx.channel.send(guest.forward(b.guest_x, id, ForwardMode::kTrain));
        const Tensor h_guest = expect_forward_reps(ctx.channel.receive(Party::kHost), id,
                                                   host.guest_rep_dim(), b.host_x.rows);

        const HostForward fwd = host.forward_aligned(b.host_x, h_guest);
        const LossResult loss1 = bce_loss(fwd.probs, b.labels);
        Tensor grad_h_guest;
        HostGradients grads;
        double loss2 = 0.0;
        if (distill) {
          // h_guest is a constant target here.
          MlpOutput transferred = mlp_forward(host.rep(), fwd.h_host);
          LossResult mse = mse_loss(transferred.output, h_guest);
          loss2 = mse.loss;
          if (alpha > 0.0) {
            MlpGradients rep = mlp_backward(host.rep(), transferred.cache, mse.grad * alpha);
            grads = host.backward(fwd, loss1.grad, &grad_h_guest, &rep.grad_input);
            grads.rep = std::move(rep.params);
            if (cfg.distill_update_guest) grad_h_guest += mse.grad * (-alpha);
          } else {
            grads = host.backward(fwd, loss1.grad, &grad_h_guest);
          }
        } else {
          grads = host.backward(fwd, loss1.grad, &grad_h_guest);
        }
        const double total = loss1.loss + alpha * loss2;
        check_finite_loss(total, phase, epoch, step);
        host.apply(grads);
        ctx.channel.send(PartyMessage::backward(id, std::move(grad_h_guest)));
        guest.backward(ctx.channel.receive(Party::kGuest));

        sum1 += loss1.loss;
        sum2 += loss2;
        sum += total;
        if (ctx.hooks.after_step) ctx.hooks.after_step({phase, epoch, step, total, &m});
      } catch (const NumericError& e) {
        rethrow_divergence(e, phase, epoch, step);
      }
    }
    const auto n = static_cast<double>(batches.size());
    log.steps = batches.size();
    log.loss1 = sum1 / n;
    log.loss2 = sum2 / n;
    log.loss = sum / n;
  };

  return fit(fresh_model(method, data, cfg), phase, data, cfg, ctx, false, run_epoch);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

TrainResult train_step1(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx) {
  if (cfg.method != Method::kFedUD) throw ConfigError("train_step1 needs method fedud");
  return train_aligned_phase(data, cfg, ctx, Method::kFedUD, "step1");
}

TrainResult train_fedsplitnn(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx) {
  return train_aligned_phase(data, cfg, ctx, Method::kFedSplitNN, "fedsplitnn");
}

TrainResult train_step2(const DatasetSplit& data, const TrainConfig& cfg,
                        const Checkpoint& step1, RunContext& ctx) {
  cfg.validate();
  if (cfg.method != Method::kFedUD) throw ConfigError("train_step2 needs method fedud");
  const AlignedData& aligned = data.train.aligned;
  const UnalignedData& unaligned = data.train.unaligned;
  if (aligned.size() == 0) throw ConfigError("step2: aligned training data is empty");

  TrainedModel start = restore_model(step1, data, cfg);
  if (cfg.step2_reinit) {
    TrainedModel fresh = fresh_model(Method::kFedUD, data, cfg);
    fresh.host->rep() = start.host->rep();
    start = std::move(fresh);
  }
  reset_optimizers(start, cfg.optimizer);
  start.host->set_rep_frozen(true);

  const bool use_unaligned = cfg.beta > 0.0 && unaligned.size() > 0;
  BatchStream aligned_stream(aligned.size(), cfg.batch_size,
                             derive_seed(cfg.shuffle_seed, "step2.aligned"));
  BatchStream unaligned_stream(std::max<std::size_t>(unaligned.size(), 1), cfg.batch_size,
                               derive_seed(cfg.shuffle_seed, "step2.unaligned"));
  const std::size_t steps_per_epoch =
      use_unaligned
          ? std::max(aligned_stream.batches_per_pass(), unaligned_stream.batches_per_pass())
          : aligned_stream.batches_per_pass();
  const double beta = cfg.beta;

  auto run_epoch = [&](TrainedModel& m, std::size_t epoch, EpochLog& log) {
    GuestParty& guest = *m.guest;
    HostParty& host = *m.host;
    double sum_a = 0.0, sum3 = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      try {
        const AlignedBatch a =
            gather_aligned(aligned, aligned_stream.next(), ctx.access.train_aligned);
        const std::uint64_t id = ctx.next_batch_id++;
        ctx.channel.send(guest.forward(a.guest_x, id, ForwardMode::kTrain));
        const Tensor h_guest = expect_forward_reps(ctx.channel.receive(Party::kHost), id,
                                                   host.guest_rep_dim(), a.host_x.rows);

        const HostForward fa = host.forward_aligned(a.host_x, h_guest);
        const LossResult bce_a = bce_loss(fa.probs, a.labels);
        Tensor grad_h_guest;
        HostGradients grads = host.backward(fa, bce_a.grad, &grad_h_guest);

        Step2Probe probe;
        double bce_u = 0.0;
        if (use_unaligned) {
          const HostBatch u =
              gather_unaligned(unaligned, unaligned_stream.next(), ctx.access.train_unaligned);
          const HostForward fu = host.forward_unaligned(u.host_x);
          const LossResult loss_u = bce_loss(fu.probs, u.labels);
          bce_u = loss_u.loss;
          grads += host.backward(fu, loss_u.grad * beta, nullptr);
          if (ctx.hooks.before_step2_update) {
            probe.unaligned_host_x = u.host_x;
            probe.unaligned_labels = u.labels;
          }
        }
        const double loss3 = bce_a.loss + beta * bce_u;
        check_finite_loss(loss3, "step2", epoch, step);
        if (ctx.hooks.before_step2_update) {
          probe.epoch = epoch;
          probe.step = step;
          probe.host = &host;
          probe.guest = &guest;
          probe.aligned_host_x = a.host_x;
          probe.aligned_guest_x = a.guest_x;
          probe.aligned_labels = a.labels;
          probe.bce_aligned = bce_a.loss;
          probe.bce_unaligned = bce_u;
          probe.loss3 = loss3;
          ctx.hooks.before_step2_update(probe);
        }
        host.apply(grads);
        ctx.channel.send(PartyMessage::backward(id, std::move(grad_h_guest)));
        guest.backward(ctx.channel.receive(Party::kGuest));

        sum_a += bce_a.loss;
        sum3 += loss3;
        if (ctx.hooks.after_step) ctx.hooks.after_step({"step2", epoch, step, loss3, &m});
      } catch (const NumericError& e) {
        rethrow_divergence(e, "step2", epoch, step);
      }
    }
    const auto n = static_cast<double>(steps_per_epoch);
    log.steps = steps_per_epoch;
    log.loss1 = sum_a / n;
    log.loss3 = sum3 / n;
    log.loss = log.loss3;
  };

  return fit(std::move(start), "step2", data, cfg, ctx, true, run_epoch);
}

TrainResult train_local_dnn(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx) {
  cfg.validate();
  const AlignedData& aligned = data.train.aligned;
  const UnalignedData& unaligned = data.train.unaligned;
  const std::size_t n = aligned.size() + unaligned.size();
  if (n == 0) throw ConfigError("local_dnn: host training data is empty");

  auto run_epoch = [&](TrainedModel& m, std::size_t epoch, EpochLog& log) {
    LocalModel& local = *m.local;
    const auto batches = batch_iter(n, cfg.batch_size, cfg.shuffle_seed, epoch);
    double sum = 0.0;
    for (std::size_t step = 0; step < batches.size(); ++step) {
      try {
        // Rows [0, |aligned|) index aligned host rows, the rest unaligned rows.
        const auto& rows = batches[step];
        IndexMatrix x(rows.size(), data.host_schema.num_slots());
        Tensor labels = Tensor::matrix(rows.size(), 1);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const bool is_aligned = rows[i] < aligned.size();
          const IndexMatrix& src = is_aligned ? aligned.host_x : unaligned.host_x;
          const std::size_t r = is_aligned ? rows[i] : rows[i] - aligned.size();
          std::copy_n(src.indices.begin() + static_cast<std::ptrdiff_t>(r * src.cols), src.cols,
                      x.indices.begin() + static_cast<std::ptrdiff_t>(i * x.cols));
          labels[i] = is_aligned ? aligned.labels[r] : unaligned.labels[r];
          ++(is_aligned ? ctx.access.train_aligned : ctx.access.train_unaligned);
        }
        const LocalModel::Forward fwd = local.forward(x);
        const LossResult loss = bce_loss(fwd.probs, labels);
        check_finite_loss(loss.loss, "local_dnn", epoch, step);
        local.update(fwd, loss.grad);
        sum += loss.loss;
        if (ctx.hooks.after_step) ctx.hooks.after_step({"local_dnn", epoch, step, loss.loss, &m});
      } catch (const NumericError& e) {
        rethrow_divergence(e, "local_dnn", epoch, step);
      }
    }
    log.steps = batches.size();
    log.loss = sum / static_cast<double>(batches.size());
    log.loss1 = log.loss;
  };

  return fit(fresh_model(Method::kLocalDnn, data, cfg), "local_dnn", data, cfg, ctx, true,
             run_epoch);
}

TrainResult train(const DatasetSplit& data, const TrainConfig& cfg, RunContext& ctx,
                  TrainResult* step1_out) {
  switch (cfg.method) {
    case Method::kFedUD: {
      TrainResult step1 = train_step1(data, cfg, ctx);
      TrainResult step2 = train_step2(data, cfg, step1.checkpoint, ctx);
      if (step1_out) *step1_out = std::move(step1);
      return step2;
    }
    case Method::kFedSplitNN: return train_fedsplitnn(data, cfg, ctx);
    case Method::kLocalDnn: return train_local_dnn(data, cfg, ctx);
  }
  throw ConfigError("unknown method");
}

PredictionSet predict(const TrainedModel& model, const DatasetSplit& data, const TrainConfig& cfg,
                      RunContext& ctx, SplitName split) {
  if (model.method != cfg.method) {
    throw CheckpointError("model was trained as " + to_string(model.method) +
                          " but evaluation asks for " + to_string(cfg.method));
  }
  const SplitPart& part = split == SplitName::kTest ? data.test : data.validation;
  std::size_t& aligned_counter =
      split == SplitName::kTest ? ctx.access.test_aligned : ctx.access.validation_aligned;
  std::size_t& unaligned_counter =
      split == SplitName::kTest ? ctx.access.test_unaligned : ctx.access.validation_unaligned;
  PredictionSet preds;
  preds.reserve(part.size());
  score_aligned(model, part.aligned, cfg.eval_batch_size, ctx, aligned_counter, preds);
  score_unaligned(model, part.unaligned, cfg.eval_batch_size, unaligned_counter, preds);
  return preds;
}

// ---------------------------------------------------------------------------
// Checkpoint conversion

Checkpoint capture_model(const TrainedModel& model, const TrainConfig& cfg,
                         const std::string& phase, std::int64_t epoch,
                         std::vector<double> validation_history) {
  Checkpoint c;
  c.config_digest = cfg.digest();
  c.config_text = cfg.canonical();
  c.method = to_string(model.method);
  c.phase = phase;
  c.epoch = epoch;
  c.validation_history = std::move(validation_history);
  const auto comps = components(model);
  for (const Component& comp : comps) {
    for (const auto& [name, t] : comp.params) c.tensors.emplace_back(name, *t);
  }
  for (const Component& comp : comps) {
    const OptimizerState& opt = *comp.optimizer;
    c.counters.emplace_back("opt." + comp.name + ".steps", opt.steps());
    for (std::size_t k = 0; k < opt.first_moments().size(); ++k) {
      c.tensors.emplace_back("opt." + comp.name + ".m." + std::to_string(k),
                             opt.first_moments()[k]);
      c.tensors.emplace_back("opt." + comp.name + ".v." + std::to_string(k),
                             opt.second_moments()[k]);
    }
  }
  return c;
}

TrainedModel restore_model(const Checkpoint& ckpt, const DatasetSplit& data,
                           const TrainConfig& cfg) {
  const Method method = parse_method(ckpt.method);
  if (method != cfg.method) {
    throw CheckpointError("checkpoint holds a " + ckpt.method + " model but the config says " +
                          to_string(cfg.method));
  }
  TrainedModel model = fresh_model(method, data, cfg);
  for (const Component& comp : components(model)) {
    for (const auto& [name, target] : comp.params) {
      const Tensor* stored = ckpt.find(name);
      if (!stored) {
        throw CheckpointError("component " + comp.name + ": tensor '" + name +
                              "' missing from checkpoint");
      }
      if (stored->shape() != target->shape()) {
        throw CheckpointError("component " + comp.name + ": dimension mismatch for '" + name +
                              "' (config expects " + target->shape_string() +
                              ", checkpoint has " + stored->shape_string() + ")");
      }
      // The model is non-const here; components() hands out const views.
      *const_cast<Tensor*>(target) = *stored;
    }
    std::vector<Tensor> m, v;
    for (std::size_t k = 0;; ++k) {
      const Tensor* mk = ckpt.find("opt." + comp.name + ".m." + std::to_string(k));
      const Tensor* vk = ckpt.find("opt." + comp.name + ".v." + std::to_string(k));
      if (!mk || !vk) break;
      m.push_back(*mk);
      v.push_back(*vk);
    }
    auto* opt = const_cast<OptimizerState*>(comp.optimizer);
    opt->restore(ckpt.counter("opt." + comp.name + ".steps"), std::move(m), std::move(v));
  }
  touch_all(model);
  return model;
}

}  // namespace vfl
