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

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vflsim/checkpoint.hpp"
#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"
#include "vflsim/metrics.hpp"
#include "vflsim/rng.hpp"
#include "vflsim/trainer.hpp"

namespace {

using vfl::Method;

// Parameters of f_G, f_Hb and f_Ht including their embeddings.
std::vector<double> shared_params(const vfl::TrainedModel& m) {
  std::vector<const vfl::Tensor*> p;
  for (const auto* t : m.guest->embedding().parameters()) p.push_back(t);
  for (const auto* t : m.guest->bottom().parameters()) p.push_back(t);
  for (const auto* t : m.host->embedding().parameters()) p.push_back(t);
  for (const auto* t : m.host->bottom().parameters()) p.push_back(t);
  for (const auto* t : m.host->top().parameters()) p.push_back(t);
  return vfl::flatten(p);
}

std::vector<double> rep_params(const vfl::TrainedModel& m) {
  return vfl::flatten(std::as_const(*m.host).rep().parameters());
}

std::vector<std::vector<double>> trajectory(const vfl::DatasetSplit& data,
                                            const vfl::TrainConfig& cfg) {
  std::vector<std::vector<double>> out;
  vfl::RunContext ctx;
  ctx.hooks.after_step = [&](const vfl::StepInfo& s) { out.push_back(shared_params(*s.model)); };
  if (cfg.method == Method::kFedUD) {
    vfl::train_step1(data, cfg, ctx);
  } else {
    vfl::train_fedsplitnn(data, cfg, ctx);
  }
  return out;
}

double split_auc(const vfl::PredictionSet& preds) {
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  for (const auto& p : preds) {
    s.push_back(p.score);
    y.push_back(p.label);
  }
  return vfl::auc(s, y).value();
}

}  // namespace

TEST_CASE("config validation") {
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = -1.0;
  CHECK_THROWS_AS(cfg.validate(), vfl::ConfigError);
  cfg = vfltest::small_train_config(Method::kFedUD);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), vfl::ConfigError);
  CHECK(vfl::parse_method("fedsplitnn") == Method::kFedSplitNN);
  CHECK_THROWS_AS(vfl::parse_method("dnn"), vfl::ConfigError);
  auto other = vfltest::small_train_config(Method::kFedUD);
  other.beta = 2.0;
  CHECK(other.digest() != vfltest::small_train_config(Method::kFedUD).digest());
}

TEST_CASE("alpha = 0 follows the split-learning trajectory bit for bit") {
  const auto data = vfltest::small_split(1500);
  auto fedud = vfltest::small_train_config(Method::kFedUD);
  fedud.alpha = 0.0;
  const auto split = vfltest::small_train_config(Method::kFedSplitNN);
  const auto a = trajectory(data, fedud);
  const auto b = trajectory(data, split);
  REQUIRE(a.size() == b.size());
  REQUIRE(!a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  vfl::RunContext ctx;
  std::vector<double> first_rep;
  const auto res = vfl::train_step1(data, fedud, ctx);
  vfl::RunContext fresh;
  fresh.hooks.after_step = [&](const vfl::StepInfo& s) {
    if (first_rep.empty()) first_rep = rep_params(*s.model);
  };
  vfl::train_step1(data, fedud, fresh);
  CHECK(rep_params(res.model) == first_rep);
}

TEST_CASE("step 1 with alpha > 0 trains Rep and logs both losses") {
  const auto data = vfltest::small_split(1500);
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  vfl::RunContext ctx;
  std::vector<double> initial;
  ctx.hooks.after_step = [&](const vfl::StepInfo& s) {
    if (initial.empty()) initial = rep_params(*s.model);
  };
  const auto res = vfl::train_step1(data, cfg, ctx);
  CHECK(rep_params(res.model) != initial);
  REQUIRE(!res.log.empty());
  const auto& log = res.log.front();
  CHECK(log.loss2 > 0.0);
  CHECK(log.loss == doctest::Approx(log.loss1 + cfg.alpha * log.loss2).epsilon(1e-12));
  const auto line = vfl::format_epoch_log(log);
  CHECK(line.find("loss1=") != std::string::npos);
  CHECK(line.find("loss2=") != std::string::npos);
}

TEST_CASE("loss2 of a zero Rep against unit guest rows is one") {
  auto rep = vfl::Tensor::matrix(5, 8);
  auto target = vfl::Tensor::matrix(5, 8);
  vfl::Rng rng(41);
  for (std::size_t r = 0; r < 5; ++r) {
    double norm = 0.0;
    for (std::size_t c = 0; c < 8; ++c) {
      target(r, c) = rng.normal();
      norm += target(r, c) * target(r, c);
    }
    for (std::size_t c = 0; c < 8; ++c) target(r, c) /= std::sqrt(norm);
  }
  CHECK(vfl::mse_loss(rep, target).loss == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("one small SGD step does not increase the loss") {
  const auto data = vfltest::small_split(800);
  auto cfg = vfltest::small_train_config(Method::kFedSplitNN);
  cfg.optimizer.kind = vfl::OptimizerKind::kSgd;
  cfg.optimizer.learning_rate = 1e-4;
  auto guest = vfl::GuestParty::create(data.guest_schema, cfg.dims, cfg.optimizer, 1);
  auto host = vfl::HostParty::create(data.host_schema, cfg.dims, cfg.optimizer, 1, false);
  const auto rows = vfl::batch_iter(data.train.aligned.size(), 64, 1, 0).front();
  const auto hx = vfl::gather_rows(data.train.aligned.host_x, rows);
  const auto gx = vfl::gather_rows(data.train.aligned.guest_x, rows);
  const auto y = vfl::labels_tensor(data.train.aligned.labels, rows);
  const auto loss_now = [&] {
    return vfl::bce_loss(host.forward_aligned(hx, *guest.infer(gx, 0).tensor()).probs, y).loss;
  };
  const double before = loss_now();
  const auto msg = guest.forward(gx, 1, vfl::ForwardMode::kTrain);
  const auto fwd = host.forward_aligned(hx, *msg.tensor());
  vfl::Tensor d_guest;
  host.apply(host.backward(fwd, vfl::bce_loss(fwd.probs, y).grad, &d_guest));
  guest.backward(vfl::PartyMessage::backward(1, d_guest));
  const double after = loss_now();
  CHECK(after <= before);
}

TEST_CASE("step 2 keeps Rep frozen and decomposes loss3") {
  const auto data = vfltest::small_split(1500);
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  cfg.beta = 0.7;
  vfl::RunContext ctx;
  const auto step1 = vfl::train_step1(data, cfg, ctx);
  const auto rep_before = rep_params(step1.model);

  std::size_t probes = 0;
  double worst = 0.0;
  bool rep_stable = true;
  ctx.hooks.before_step2_update = [&](const vfl::Step2Probe& p) {
    REQUIRE(p.unaligned_host_x.has_value());
    const auto hg = p.guest->infer(p.aligned_guest_x, 0);
    const double a = vfl::bce_loss(p.host->forward_aligned(p.aligned_host_x, *hg.tensor()).probs,
                                   p.aligned_labels).loss;
    const double u =
        vfl::bce_loss(p.host->forward_unaligned(*p.unaligned_host_x).probs, *p.unaligned_labels)
            .loss;
    worst = std::max(worst, std::abs(p.loss3 - (a + cfg.beta * u)));
    ++probes;
  };
  ctx.hooks.after_step = [&](const vfl::StepInfo& s) {
    rep_stable = rep_stable && rep_params(*s.model) == rep_before;
  };
  const auto step2 = vfl::train_step2(data, cfg, step1.checkpoint, ctx);
  CHECK(probes > 0);
  CHECK(worst <= 1e-12);
  CHECK(rep_stable);
  CHECK(rep_params(step2.model) == rep_before);
  CHECK(step2.model.host->rep_frozen());
  CHECK(vfl::format_epoch_log(step2.log.front()).find("loss3=") != std::string::npos);
}

TEST_CASE("step 2 with beta = 0 never reads unaligned rows") {
  const auto data = vfltest::small_split(1000);
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  cfg.beta = 0.0;
  vfl::RunContext ctx;
  const auto step1 = vfl::train_step1(data, cfg, ctx);
  vfl::train_step2(data, cfg, step1.checkpoint, ctx);
  CHECK(ctx.access.train_unaligned == 0);

  auto empty = data;
  vfl::truncate_unaligned(empty.train, 0);
  cfg.beta = 1.0;
  vfl::RunContext ctx2;
  const auto s1 = vfl::train_step1(empty, cfg, ctx2);
  CHECK_NOTHROW(vfl::train_step2(empty, cfg, s1.checkpoint, ctx2));
}

TEST_CASE("step 2 rejects a checkpoint with other dims") {
  const auto data = vfltest::small_split(800);
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  cfg.max_epochs = 1;
  vfl::RunContext ctx;
  const auto step1 = vfl::train_step1(data, cfg, ctx);
  auto wider = cfg;
  wider.dims.top = {12};
  try {
    vfl::train_step2(data, wider, step1.checkpoint, ctx);
    FAIL("expected a checkpoint error");
  } catch (const vfl::CheckpointError& e) {
    CHECK(std::string(e.what()).find("host.top") != std::string::npos);
  }
}

TEST_CASE("split learning message accounting and data access") {
  const auto data = vfltest::small_split(1500);
  auto cfg = vfltest::small_train_config(Method::kFedSplitNN);
  cfg.max_epochs = 3;
  vfl::RunContext ctx;
  const auto res = vfl::train_fedsplitnn(data, cfg, ctx);
  const std::size_t epochs = res.log.size();
  const std::size_t batches = (data.train.aligned.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t fwd = 0, bwd = 0, val = 0;
  for (const auto& l : res.log) {
    fwd += l.forward_messages;
    bwd += l.backward_messages;
    val += l.validation_messages;
  }
  CHECK(fwd == epochs * batches);
  CHECK(bwd == epochs * batches);
  const auto& t = ctx.channel.transcript();
  CHECK(t.count("BackwardGrads") == epochs * batches);
  CHECK(t.count("ForwardReps") == epochs * batches + val);
  CHECK(fwd + bwd == epochs * batches * 2);
  CHECK(ctx.access.train_unaligned == 0);
  CHECK(ctx.access.validation_unaligned == 0);
  CHECK(vfl::audit_transcript(t, cfg.dims.guest_rep_dim()).pass);
}

TEST_CASE("step 1 never reads unaligned rows") {
  const auto data = vfltest::small_split(1000);
  vfl::RunContext ctx;
  vfl::train_step1(data, vfltest::small_train_config(Method::kFedUD), ctx);
  CHECK(ctx.access.train_unaligned == 0);
  CHECK(ctx.access.train_aligned > 0);
}

TEST_CASE("local DNN sends nothing") {
  const auto data = vfltest::small_split(1000);
  const auto cfg = vfltest::small_train_config(Method::kLocalDnn);
  vfl::RunContext ctx;
  const auto res = vfl::train_local_dnn(data, cfg, ctx);
  CHECK(ctx.channel.transcript().size() == 0);
  for (const auto& l : res.log) {
    CHECK(l.forward_messages == 0);
    CHECK(l.backward_messages == 0);
  }
  CHECK(ctx.access.train_aligned + ctx.access.train_unaligned ==
        res.log.size() * data.train.size());

  const auto preds = vfl::predict(res.model, data, cfg, ctx);
  CHECK(ctx.channel.transcript().size() == 0);
  const auto& d = data.test.unaligned;
  const auto direct = res.model.local->forward(d.host_x).probs;
  std::size_t checked = 0;
  for (const auto& p : preds) {
    if (p.slice != vfl::SliceTag::kUnaligned) continue;
    CHECK(p.score == direct[checked]);
    ++checked;
  }
  CHECK(checked == d.size());
}

TEST_CASE("local DNN separates a separable problem") {
  auto data = vfltest::small_split(3000);
  // Labels become a function of one host slot.
  for (auto* part : {&data.train, &data.validation, &data.test}) {
    for (std::size_t i = 0; i < part->aligned.size(); ++i) {
      part->aligned.labels[i] = part->aligned.host_x.at(i, 0) % 2;
    }
    for (std::size_t i = 0; i < part->unaligned.size(); ++i) {
      part->unaligned.labels[i] = part->unaligned.host_x.at(i, 0) % 2;
    }
  }
  auto cfg = vfltest::small_train_config(Method::kLocalDnn);
  cfg.max_epochs = 8;
  cfg.optimizer.learning_rate = 1e-2;
  vfl::RunContext ctx;
  const auto res = vfl::train_local_dnn(data, cfg, ctx);
  std::vector<double> s;
  std::vector<std::uint8_t> y;
  const auto pa = res.model.local->forward(data.train.aligned.host_x).probs;
  const auto pu = res.model.local->forward(data.train.unaligned.host_x).probs;
  for (std::size_t i = 0; i < pa.size(); ++i) s.push_back(pa[i]);
  for (std::size_t i = 0; i < pu.size(); ++i) s.push_back(pu[i]);
  y = data.train.aligned.labels;
  y.insert(y.end(), data.train.unaligned.labels.begin(), data.train.unaligned.labels.end());
  CHECK(vfl::auc(s, y).value() > 0.95);
}

TEST_CASE("training is deterministic") {
  const auto data = vfltest::small_split(1000);
  for (Method m : {Method::kFedUD, Method::kFedSplitNN, Method::kLocalDnn}) {
    const auto cfg = vfltest::small_train_config(m);
    vfl::RunContext a, b;
    const auto ra = vfl::train(data, cfg, a);
    const auto rb = vfl::train(data, cfg, b);
    CHECK(ra.checkpoint.validation_history == rb.checkpoint.validation_history);
    CHECK(ra.checkpoint == rb.checkpoint);
  }
}

TEST_CASE("empty aligned data is a config error") {
  auto data = vfltest::small_split(500);
  data.train.aligned = vfl::AlignedData{};
  vfl::RunContext ctx;
  CHECK_THROWS_AS(vfl::train_fedsplitnn(data, vfltest::small_train_config(Method::kFedSplitNN),
                                        ctx),
                  vfl::ConfigError);
}

TEST_CASE("runaway learning rate is reported as divergence") {
  const auto data = vfltest::small_split(800);
  auto cfg = vfltest::small_train_config(Method::kFedSplitNN);
  cfg.optimizer.kind = vfl::OptimizerKind::kSgd;
  cfg.optimizer.learning_rate = 1e200;
  vfl::RunContext ctx;
  try {
    vfl::train_fedsplitnn(data, cfg, ctx);
    FAIL("expected divergence");
  } catch (const vfl::DivergenceError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("predict scores every test row once") {
  const auto data = vfltest::small_split(1500);
  for (Method m : {Method::kFedUD, Method::kFedSplitNN}) {
    auto cfg = vfltest::small_train_config(m);
    cfg.eval_batch_size = 40;
    vfl::RunContext ctx;
    const auto res = vfl::train(data, cfg, ctx);
    const auto train_reads = ctx.access.train_aligned + ctx.access.train_unaligned;
    const auto fwd_before = ctx.channel.transcript().count("ForwardReps");
    const auto bwd_before = ctx.channel.transcript().count("BackwardGrads");
    const auto preds = vfl::predict(res.model, data, cfg, ctx);
    CHECK(preds.size() == data.test.size());
    std::size_t aligned = 0;
    for (const auto& p : preds) {
      CHECK(p.score > 0.0);
      CHECK(p.score < 1.0);
      if (p.slice == vfl::SliceTag::kAligned) ++aligned;
    }
    CHECK(aligned == data.test.aligned.size());
    CHECK(ctx.access.train_aligned + ctx.access.train_unaligned == train_reads);
    CHECK(ctx.channel.transcript().count("ForwardReps") - fwd_before ==
          (data.test.aligned.size() + 39) / 40);
    CHECK(ctx.channel.transcript().count("BackwardGrads") == bwd_before);
    CHECK(split_auc(preds) > 0.5);
    auto other = cfg;
    other.method = m == Method::kFedUD ? Method::kFedSplitNN : Method::kFedUD;
    CHECK_THROWS_AS(vfl::predict(res.model, data, other, ctx), vfl::CheckpointError);
  }
}

TEST_CASE("checkpoints round trip") {
  const auto data = vfltest::small_split(800);
  auto cfg = vfltest::small_train_config(Method::kFedUD);
  vfl::RunContext ctx;
  const auto res = vfl::train(data, cfg, ctx);
  const auto& ckpt = res.checkpoint;
  CHECK(ckpt.method == "fedud");
  CHECK(ckpt.phase == "step2");
  CHECK(ckpt.config_digest == cfg.digest());

  const auto bytes = vfl::serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 4) == "FUD1");
  CHECK(vfl::deserialize_checkpoint(bytes) == ckpt);

  vfltest::TempDir dir;
  vfl::save_checkpoint(ckpt, dir / "c.fud");
  const auto loaded = vfl::load_checkpoint(dir / "c.fud");
  CHECK(loaded == ckpt);

  const auto restored = vfl::restore_model(loaded, data, cfg);
  CHECK(shared_params(restored) == shared_params(res.model));
  CHECK(rep_params(restored) == rep_params(res.model));
  vfl::RunContext c1, c2;
  const auto p1 = vfl::predict(res.model, data, cfg, c1);
  const auto p2 = vfl::predict(restored, data, cfg, c2);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].score == p2[i].score);

  SUBCASE("truncated") {
    vfltest::write_file(dir / "t.fud", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(vfl::load_checkpoint(dir / "t.fud"), vfl::CheckpointError);
    CHECK_THROWS_AS(vfl::deserialize_checkpoint(bytes.substr(0, 3)), vfl::CheckpointError);
  }
  SUBCASE("corrupted") {
    auto bad = bytes;
    bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x40);
    CHECK_THROWS_AS(vfl::deserialize_checkpoint(bad), vfl::CheckpointError);
  }
  SUBCASE("wrong version") {
    auto bad = bytes;
    bad[4] = 9;
    CHECK_THROWS_AS(vfl::deserialize_checkpoint(bad), vfl::CheckpointError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(vfl::load_checkpoint(dir / "none.fud"), vfl::IoError);
  }
  SUBCASE("dimension mismatch names the component") {
    auto other = cfg;
    other.dims.rep = {6, 8};
    try {
      vfl::restore_model(loaded, data, other);
      FAIL("expected a checkpoint error");
    } catch (const vfl::CheckpointError& e) {
      CHECK(std::string(e.what()).find("host.rep") != std::string::npos);
    }
  }
  SUBCASE("method mismatch") {
    auto other = cfg;
    other.method = Method::kLocalDnn;
    CHECK_THROWS_AS(vfl::restore_model(loaded, data, other), vfl::CheckpointError);
  }
}
