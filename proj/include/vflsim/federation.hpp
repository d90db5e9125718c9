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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vflsim/data.hpp"
#include "vflsim/model.hpp"
#include "vflsim/nn.hpp"
#include "vflsim/optimizer.hpp"

namespace vfl {

// ---------------------------------------------------------------------------
// Messages

enum class ControlTag { kEpochEnd, kRunEnd };

std::string to_string(ControlTag tag);

// Guest representations for one aligned batch.
struct ForwardReps {
  std::uint64_t batch_id = 0;
  Tensor reps;
};

// d(loss)/d(guest representations) for the batch the guest forwarded.
struct BackwardGrads {
  std::uint64_t batch_id = 0;
  Tensor grads;
};

struct Control {
  ControlTag tag = ControlTag::kEpochEnd;
};

// The only object that crosses the host/guest boundary. Payloads are real
// tensors plus an opaque batch id, so keys, labels and raw indices have no
// way to travel.
struct PartyMessage {
  Party sender = Party::kGuest;
  Party recipient = Party::kHost;
  std::variant<ForwardReps, BackwardGrads, Control> payload;

  static PartyMessage forward(std::uint64_t batch_id, Tensor reps);
  static PartyMessage backward(std::uint64_t batch_id, Tensor grads);
  static PartyMessage control(Party sender, ControlTag tag);

  std::string kind() const;
  const Tensor* tensor() const;
  // Payload bytes: 8 per tensor value plus 8 for the batch id or tag.
  std::size_t byte_size() const;
};

// ---------------------------------------------------------------------------
// Transcript

struct TranscriptEntry {
  Party sender = Party::kGuest;
  Party recipient = Party::kHost;
  std::string variant;
  std::vector<std::size_t> shape;  // empty for Control
  std::size_t bytes = 0;

  bool operator==(const TranscriptEntry&) const = default;
};

// Append-only metadata log of every message; payload values are never kept.
class Transcript {
 public:
  void record(const PartyMessage& message);
  // Raw append, used by audit tooling that replays exported transcripts.
  void append(TranscriptEntry entry) { entries_.push_back(std::move(entry)); }

  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t count(const std::string& variant) const;
  std::size_t total_bytes() const;

  // One line per entry: "<sender>-><recipient> <variant> <shape|-> <bytes>".
  std::string to_text() const;
  static Transcript parse(const std::string& text);

 private:
  std::vector<TranscriptEntry> entries_;
};

struct AuditVerdict {
  bool pass = true;
  std::vector<std::string> offending;  // "entry <i>: <reason>"
};

// PASS iff every entry is ForwardReps (guest->host), BackwardGrads
// (host->guest) or Control, and every tensor is a matrix of width rep_dim.
AuditVerdict audit_transcript(const Transcript& transcript, std::size_t rep_dim);

// ---------------------------------------------------------------------------
// Transport

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(PartyMessage message) = 0;
  // Next message addressed to `recipient`.
  virtual PartyMessage receive(Party recipient) = 0;
};

// Synchronous, ordered, lossless in-process channel. Receiving with nothing
// queued is a protocol error since both parties share one thread.
class InProcessChannel final : public Transport {
 public:
  void send(PartyMessage message) override;
  PartyMessage receive(Party recipient) override;

  const Transcript& transcript() const { return transcript_; }
  std::size_t pending(Party recipient) const;

 private:
  std::deque<PartyMessage> to_host_;
  std::deque<PartyMessage> to_guest_;
  Transcript transcript_;
};

// ---------------------------------------------------------------------------
// Parties

enum class ForwardMode { kTrain, kInference };

class GuestParty {
 public:
  GuestParty() = default;
  GuestParty(FeatureSchema schema, EmbeddingSet embedding, Mlp bottom,
             OptimizerConfig optimizer);

  static GuestParty create(const FeatureSchema& schema, const ModelDims& dims,
                           const OptimizerConfig& optimizer, std::uint64_t init_seed);

  // h_G = MLP_G(Emb_G(x)). In training mode the forward cache is kept under
  // batch_id until the matching BackwardGrads arrives.
  PartyMessage forward(const IndexMatrix& x, std::uint64_t batch_id, ForwardMode mode);

  // Consumes the cache for the message's batch id and applies one optimizer
  // step to Emb_G and MLP_G.
  void backward(const PartyMessage& message);

  // Inference-only forward; keeps no cache.
  PartyMessage infer(const IndexMatrix& x, std::uint64_t batch_id) const;

  void drop_pending() { pending_.clear(); }
  std::size_t pending() const { return pending_.size(); }

  const FeatureSchema& schema() const { return schema_; }
  const EmbeddingSet& embedding() const { return embedding_; }
  EmbeddingSet& embedding() { return embedding_; }
  const Mlp& bottom() const { return bottom_; }
  Mlp& bottom() { return bottom_; }
  std::size_t rep_dim() const { return bottom_.out_dim(); }
  OptimizerState& embedding_optimizer() { return embedding_opt_; }
  OptimizerState& bottom_optimizer() { return bottom_opt_; }
  const OptimizerState& embedding_optimizer() const { return embedding_opt_; }
  const OptimizerState& bottom_optimizer() const { return bottom_opt_; }

 private:
  struct Pending {
    IndexMatrix x;
    MlpCache cache;
  };

  FeatureSchema schema_;
  EmbeddingSet embedding_;
  Mlp bottom_;
  OptimizerState embedding_opt_;
  OptimizerState bottom_opt_;
  std::map<std::uint64_t, Pending> pending_;
};

// Forward record of one host batch; everything backward needs.
struct HostForward {
  IndexMatrix x;
  MlpCache bottom_cache;
  Tensor h_host;
  Tensor h_guest;  // real, transferred, or zero-imputed
  std::optional<MlpCache> rep_cache;
  MlpCache top_cache;
  Tensor logits;
  Tensor probs;
};

struct HostGradients {
  GradientSet embedding;
  GradientSet bottom;
  GradientSet top;
  std::optional<GradientSet> rep;

  HostGradients& operator+=(const HostGradients& other);
};

class HostParty {
 public:
  HostParty() = default;

  // `with_rep` = false builds the FedSplitNN host, which has no transfer net.
  static HostParty create(const FeatureSchema& schema, const ModelDims& dims,
                          const OptimizerConfig& optimizer, std::uint64_t init_seed,
                          bool with_rep);

  // y = sigmoid(MLP_Ht([f_Hb(x) | h_guest])).
  HostForward forward_aligned(const IndexMatrix& x, const Tensor& h_guest) const;
  // y = sigmoid(MLP_Ht([h | Rep(h)])), h = f_Hb(x). Purely local.
  HostForward forward_unaligned(const IndexMatrix& x) const;
  // Missing guest representation replaced by zeros.
  HostForward forward_zero_imputed(const IndexMatrix& x) const;

  // Reverse pass from d(loss)/d(logits). `grad_h_host_extra` (optional) is
  // added to d/d(h_host) before the bottom network, e.g. from loss2.
  // Returns host gradients and, through `grad_h_guest`, d/d(h_guest).
  HostGradients backward(const HostForward& fwd, const Tensor& grad_logits,
                         Tensor* grad_h_guest,
                         const Tensor* grad_h_host_extra = nullptr) const;

  // Applies one optimizer step per component. Rep is skipped when frozen or
  // when the gradients carry none.
  void apply(const HostGradients& grads);

  std::size_t guest_rep_dim() const { return guest_rep_dim_; }
  bool has_rep() const { return rep_.has_value(); }
  bool rep_frozen() const { return rep_frozen_; }
  void set_rep_frozen(bool frozen) { rep_frozen_ = frozen; }

  const FeatureSchema& schema() const { return schema_; }
  const EmbeddingSet& embedding() const { return embedding_; }
  EmbeddingSet& embedding() { return embedding_; }
  const Mlp& bottom() const { return bottom_; }
  Mlp& bottom() { return bottom_; }
  const Mlp& top() const { return top_; }
  Mlp& top() { return top_; }
  const Mlp& rep() const;
  Mlp& rep();

  OptimizerState& embedding_optimizer() { return embedding_opt_; }
  OptimizerState& bottom_optimizer() { return bottom_opt_; }
  OptimizerState& top_optimizer() { return top_opt_; }
  OptimizerState& rep_optimizer() { return rep_opt_; }
  const OptimizerState& embedding_optimizer() const { return embedding_opt_; }
  const OptimizerState& bottom_optimizer() const { return bottom_opt_; }
  const OptimizerState& top_optimizer() const { return top_opt_; }
  const OptimizerState& rep_optimizer() const { return rep_opt_; }

 private:
  HostForward finish_forward(HostForward fwd) const;

  FeatureSchema schema_;
  EmbeddingSet embedding_;
  Mlp bottom_;
  Mlp top_;
  std::optional<Mlp> rep_;
  std::size_t guest_rep_dim_ = 0;
  bool rep_frozen_ = false;
  OptimizerState embedding_opt_;
  OptimizerState bottom_opt_;
  OptimizerState top_opt_;
  OptimizerState rep_opt_;
};

// Unwraps a ForwardReps message for `batch_id`, checking width and rows.
Tensor expect_forward_reps(const PartyMessage& message, std::uint64_t batch_id,
                           std::size_t rep_dim, std::size_t rows);

}  // namespace vfl
