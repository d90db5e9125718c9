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

#include "vflsim/federation.hpp"

#include <sstream>

#include "vflsim/error.hpp"
#include "vflsim/loss.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

std::string to_string(ControlTag tag) {
  return tag == ControlTag::kEpochEnd ? "epoch_end" : "run_end";
}

// ---------------------------------------------------------------------------
// Messages

PartyMessage PartyMessage::forward(std::uint64_t batch_id, Tensor reps) {
  return {Party::kGuest, Party::kHost, ForwardReps{batch_id, std::move(reps)}};
}

PartyMessage PartyMessage::backward(std::uint64_t batch_id, Tensor grads) {
  return {Party::kHost, Party::kGuest, BackwardGrads{batch_id, std::move(grads)}};
}

PartyMessage PartyMessage::control(Party sender, ControlTag tag) {
  const Party recipient = sender == Party::kHost ? Party::kGuest : Party::kHost;
  return {sender, recipient, Control{tag}};
}

std::string PartyMessage::kind() const {
  switch (payload.index()) {
    case 0: return "ForwardReps";
    case 1: return "BackwardGrads";
    default: return "Control";
  }
}

const Tensor* PartyMessage::tensor() const {
  if (const auto* f = std::get_if<ForwardReps>(&payload)) return &f->reps;
  if (const auto* b = std::get_if<BackwardGrads>(&payload)) return &b->grads;
  return nullptr;
}

std::size_t PartyMessage::byte_size() const {
  const Tensor* t = tensor();
  return 8 + (t ? t->size() * sizeof(double) : 0);
}

// ---------------------------------------------------------------------------
// Transcript

void Transcript::record(const PartyMessage& message) {
  TranscriptEntry e{message.sender, message.recipient, message.kind(), {}, message.byte_size()};
  if (const Tensor* t = message.tensor()) e.shape = t->shape();
  entries_.push_back(std::move(e));
}

std::size_t Transcript::count(const std::string& variant) const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.variant == variant;
  return n;
}

std::size_t Transcript::total_bytes() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.bytes;
  return n;
}

std::string Transcript::to_text() const {
  std::ostringstream os;
  for (const auto& e : entries_) {
    os << to_string(e.sender) << "->" << to_string(e.recipient) << ' ' << e.variant << ' ';
    if (e.shape.empty()) {
      os << '-';
    } else {
      for (std::size_t i = 0; i < e.shape.size(); ++i) os << (i ? "x" : "") << e.shape[i];
    }
    os << ' ' << e.bytes << '\n';
  }
  return os.str();
}

namespace {

Party parse_party(const std::string& s, std::size_t line) {
  if (s == "host") return Party::kHost;
  if (s == "guest") return Party::kGuest;
  throw ProtocolError("transcript line " + std::to_string(line) + ": unknown party '" + s + "'");
}

}  // namespace

Transcript Transcript::parse(const std::string& text) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string direction, variant, shape;
    std::size_t bytes = 0;
    if (!(ls >> direction >> variant >> shape >> bytes)) {
      throw ProtocolError("transcript line " + std::to_string(line_no) + " is malformed");
    }
    const auto arrow = direction.find("->");
    if (arrow == std::string::npos) {
      throw ProtocolError("transcript line " + std::to_string(line_no) + ": bad direction");
    }
    TranscriptEntry e;
    e.sender = parse_party(direction.substr(0, arrow), line_no);
    e.recipient = parse_party(direction.substr(arrow + 2), line_no);
    e.variant = variant;
    e.bytes = bytes;
    if (shape != "-") {
      std::istringstream ss(shape);
      std::string dim;
      while (std::getline(ss, dim, 'x')) e.shape.push_back(std::stoull(dim));
    }
    t.append(std::move(e));
  }
  return t;
}

AuditVerdict audit_transcript(const Transcript& transcript, std::size_t rep_dim) {
  AuditVerdict verdict;
  const auto& entries = transcript.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const TranscriptEntry& e = entries[i];
    std::string problem;
    const bool tensor_kind = e.variant == "ForwardReps" || e.variant == "BackwardGrads";
    if (!tensor_kind && e.variant != "Control") {
      problem = "variant '" + e.variant + "' is not allowed";
    } else if (e.sender == e.recipient) {
      problem = "message addressed to its sender";
    } else if (e.variant == "ForwardReps" && e.sender != Party::kGuest) {
      problem = "ForwardReps must travel guest->host";
    } else if (e.variant == "BackwardGrads" && e.sender != Party::kHost) {
      problem = "BackwardGrads must travel host->guest";
    } else if (tensor_kind && (e.shape.size() != 2 || e.shape[1] != rep_dim)) {
      std::string shape;
      for (std::size_t k = 0; k < e.shape.size(); ++k) {
        shape += (k ? "x" : "") + std::to_string(e.shape[k]);
      }
      problem = "tensor shape " + (shape.empty() ? std::string("-") : shape) +
                " does not have width " + std::to_string(rep_dim);
    } else if (!tensor_kind && !e.shape.empty()) {
      problem = "Control message carries a tensor";
    }
    if (!problem.empty()) {
      verdict.pass = false;
      verdict.offending.push_back("entry " + std::to_string(i) + ": " + problem);
    }
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// Channel

void InProcessChannel::send(PartyMessage message) {
  if (message.sender == message.recipient) {
    throw ProtocolError("message sender and recipient are the same party");
  }
  transcript_.record(message);
  (message.recipient == Party::kHost ? to_host_ : to_guest_).push_back(std::move(message));
}

PartyMessage InProcessChannel::receive(Party recipient) {
  auto& queue = recipient == Party::kHost ? to_host_ : to_guest_;
  if (queue.empty()) {
    throw ProtocolError("no message pending for " + to_string(recipient));
  }
  PartyMessage m = std::move(queue.front());
  queue.pop_front();
  return m;
}

std::size_t InProcessChannel::pending(Party recipient) const {
  return recipient == Party::kHost ? to_host_.size() : to_guest_.size();
}

Tensor expect_forward_reps(const PartyMessage& message, std::uint64_t batch_id,
                           std::size_t rep_dim, std::size_t rows) {
  const auto* f = std::get_if<ForwardReps>(&message.payload);
  if (!f) throw ProtocolError("expected ForwardReps, got " + message.kind());
  if (f->batch_id != batch_id) {
    throw ProtocolError("ForwardReps for batch " + std::to_string(f->batch_id) +
                        " while waiting for batch " + std::to_string(batch_id));
  }
  if (f->reps.rank() != 2 || f->reps.cols() != rep_dim) {
    throw ProtocolError("guest representation has shape " + f->reps.shape_string() +
                        ", expected width " + std::to_string(rep_dim));
  }
  if (f->reps.rows() != rows) {
    throw ProtocolError("guest representation has " + std::to_string(f->reps.rows()) +
                        " rows for a batch of " + std::to_string(rows));
  }
  return f->reps;
}

// ---------------------------------------------------------------------------
// Guest

GuestParty::GuestParty(FeatureSchema schema, EmbeddingSet embedding, Mlp bottom,
                       OptimizerConfig optimizer)
    : schema_(std::move(schema)),
      embedding_(std::move(embedding)),
      bottom_(std::move(bottom)),
      embedding_opt_(optimizer),
      bottom_opt_(optimizer) {
  if (schema_.party != Party::kGuest) throw SchemaError("GuestParty needs a guest schema");
  if (embedding_.output_width() != bottom_.in_dim()) {
    throw ShapeError("guest bottom expects " + std::to_string(bottom_.in_dim()) +
                     " inputs, embeddings emit " + std::to_string(embedding_.output_width()));
  }
}

GuestParty GuestParty::create(const FeatureSchema& schema, const ModelDims& dims,
                              const OptimizerConfig& optimizer, std::uint64_t init_seed) {
  Rng emb_rng(derive_seed(init_seed, "guest.embedding"));
  Rng mlp_rng(derive_seed(init_seed, "guest.bottom"));
  auto emb = EmbeddingSet::random(schema.slot_names(), schema.vocab_sizes(),
                                  dims.embedding_dim, emb_rng);
  auto mlp = Mlp::random(emb.output_width(), dims.guest_bottom, Activation::kRelu,
                         Activation::kRelu, mlp_rng);
  return GuestParty(schema, std::move(emb), std::move(mlp), optimizer);
}

PartyMessage GuestParty::forward(const IndexMatrix& x, std::uint64_t batch_id,
                                 ForwardMode mode) {
  if (mode == ForwardMode::kInference) return infer(x, batch_id);
  if (pending_.count(batch_id)) {
    throw ProtocolError("guest already holds a forward cache for batch " +
                        std::to_string(batch_id));
  }
  Tensor e = embed_lookup(embedding_, x);
  MlpOutput out = mlp_forward(bottom_, e);
  pending_[batch_id] = Pending{x, std::move(out.cache)};
  return PartyMessage::forward(batch_id, std::move(out.output));
}

PartyMessage GuestParty::infer(const IndexMatrix& x, std::uint64_t batch_id) const {
  MlpOutput out = mlp_forward(bottom_, embed_lookup(embedding_, x));
  return PartyMessage::forward(batch_id, std::move(out.output));
}

void GuestParty::backward(const PartyMessage& message) {
  const auto* b = std::get_if<BackwardGrads>(&message.payload);
  if (!b) throw ProtocolError("guest expected BackwardGrads, got " + message.kind());
  auto it = pending_.find(b->batch_id);
  if (it == pending_.end()) {
    throw ProtocolError("BackwardGrads for unknown batch " + std::to_string(b->batch_id));
  }
  Pending pending = std::move(it->second);
  pending_.erase(it);
  MlpGradients g = mlp_backward(bottom_, pending.cache, b->grads);
  GradientSet emb_grads = embed_backward(embedding_, pending.x, g.grad_input);
  embedding_opt_.step(embedding_.parameters(), emb_grads);
  bottom_opt_.step(bottom_.parameters(), g.params);
}

// ---------------------------------------------------------------------------
// Host

HostGradients& HostGradients::operator+=(const HostGradients& other) {
  embedding += other.embedding;
  bottom += other.bottom;
  top += other.top;
  if (rep && other.rep) {
    *rep += *other.rep;
  } else if (other.rep) {
    rep = other.rep;
  }
  return *this;
}

HostParty HostParty::create(const FeatureSchema& schema, const ModelDims& dims,
                            const OptimizerConfig& optimizer, std::uint64_t init_seed,
                            bool with_rep) {
  if (schema.party != Party::kHost) throw SchemaError("HostParty needs a host schema");
  dims.validate();
  HostParty host;
  host.schema_ = schema;
  Rng emb_rng(derive_seed(init_seed, "host.embedding"));
  Rng bottom_rng(derive_seed(init_seed, "host.bottom"));
  Rng top_rng(derive_seed(init_seed, "host.top"));
  host.embedding_ = EmbeddingSet::random(schema.slot_names(), schema.vocab_sizes(),
                                         dims.embedding_dim, emb_rng);
  host.bottom_ = Mlp::random(host.embedding_.output_width(), dims.host_bottom,
                             Activation::kRelu, Activation::kRelu, bottom_rng);
  auto top_widths = dims.top;
  top_widths.push_back(1);
  host.top_ = Mlp::random(dims.host_rep_dim() + dims.guest_rep_dim(), top_widths,
                          Activation::kRelu, Activation::kLinear, top_rng);
  if (with_rep) {
    Rng rep_rng(derive_seed(init_seed, "host.rep"));
    host.rep_ = Mlp::random(dims.host_rep_dim(), dims.rep, Activation::kRelu,
                            Activation::kLinear, rep_rng);
  }
  host.guest_rep_dim_ = dims.guest_rep_dim();
  host.embedding_opt_ = OptimizerState(optimizer);
  host.bottom_opt_ = OptimizerState(optimizer);
  host.top_opt_ = OptimizerState(optimizer);
  host.rep_opt_ = OptimizerState(optimizer);
  return host;
}

const Mlp& HostParty::rep() const {
  if (!rep_) throw ConfigError("this host has no representation transfer network");
  return *rep_;
}

Mlp& HostParty::rep() {
  if (!rep_) throw ConfigError("this host has no representation transfer network");
  return *rep_;
}

HostForward HostParty::finish_forward(HostForward fwd) const {
  MlpOutput top = mlp_forward(top_, concat_cols(fwd.h_host, fwd.h_guest));
  fwd.top_cache = std::move(top.cache);
  fwd.logits = std::move(top.output);
  fwd.probs = sigmoid(fwd.logits);
  return fwd;
}

HostForward HostParty::forward_aligned(const IndexMatrix& x, const Tensor& h_guest) const {
  if (h_guest.rank() != 2 || h_guest.cols() != guest_rep_dim_) {
    throw ProtocolError("guest representation has shape " + h_guest.shape_string() +
                        ", expected width " + std::to_string(guest_rep_dim_));
  }
  if (h_guest.rows() != x.rows) {
    throw ProtocolError("guest representation rows do not match the host batch");
  }
  HostForward fwd;
  fwd.x = x;
  MlpOutput bottom = mlp_forward(bottom_, embed_lookup(embedding_, x));
  fwd.bottom_cache = std::move(bottom.cache);
  fwd.h_host = std::move(bottom.output);
  fwd.h_guest = h_guest;
  return finish_forward(std::move(fwd));
}

HostForward HostParty::forward_unaligned(const IndexMatrix& x) const {
  HostForward fwd;
  fwd.x = x;
  MlpOutput bottom = mlp_forward(bottom_, embed_lookup(embedding_, x));
  fwd.bottom_cache = std::move(bottom.cache);
  fwd.h_host = std::move(bottom.output);
  MlpOutput transferred = mlp_forward(rep(), fwd.h_host);
  fwd.rep_cache = std::move(transferred.cache);
  fwd.h_guest = std::move(transferred.output);
  return finish_forward(std::move(fwd));
}

HostForward HostParty::forward_zero_imputed(const IndexMatrix& x) const {
  return forward_aligned(x, Tensor::matrix(x.rows, guest_rep_dim_));
}

HostGradients HostParty::backward(const HostForward& fwd, const Tensor& grad_logits,
                                  Tensor* grad_h_guest,
                                  const Tensor* grad_h_host_extra) const {
  HostGradients grads;
  MlpGradients top = mlp_backward(top_, fwd.top_cache, grad_logits);
  grads.top = std::move(top.params);
  const std::size_t host_width = fwd.h_host.cols();
  Tensor d_host = slice_cols(top.grad_input, 0, host_width);
  Tensor d_guest = slice_cols(top.grad_input, host_width, fwd.h_guest.cols());

  if (fwd.rep_cache) {
    // Transferred path: gradient reaches h_host through Rep as well.
    MlpGradients through_rep = mlp_backward(rep(), *fwd.rep_cache, d_guest);
    d_host += through_rep.grad_input;
    grads.rep = std::move(through_rep.params);
  }
  if (grad_h_host_extra) d_host += *grad_h_host_extra;

  MlpGradients bottom = mlp_backward(bottom_, fwd.bottom_cache, d_host);
  grads.bottom = std::move(bottom.params);
  grads.embedding = embed_backward(embedding_, fwd.x, bottom.grad_input);
  if (grad_h_guest) *grad_h_guest = std::move(d_guest);
  return grads;
}

void HostParty::apply(const HostGradients& grads) {
  embedding_opt_.step(embedding_.parameters(), grads.embedding);
  bottom_opt_.step(bottom_.parameters(), grads.bottom);
  top_opt_.step(top_.parameters(), grads.top);
  if (rep_ && grads.rep && !rep_frozen_) rep_opt_.step(rep_->parameters(), *grads.rep);
}

}  // namespace vfl
