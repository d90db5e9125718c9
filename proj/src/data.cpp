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

#include "vflsim/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "vflsim/error.hpp"
#include "vflsim/rng.hpp"

namespace vfl {

std::string to_string(Party party) { return party == Party::kHost ? "host" : "guest"; }

std::vector<std::string> FeatureSchema::slot_names() const {
  std::vector<std::string> out;
  for (const SlotSpec& s : slots) out.push_back(s.name);
  return out;
}

std::vector<std::size_t> FeatureSchema::vocab_sizes() const {
  std::vector<std::size_t> out;
  for (const SlotSpec& s : slots) out.push_back(s.vocab_size);
  return out;
}

void FeatureSchema::validate() const {
  if (slots.empty()) throw SchemaError(to_string(party) + " schema has no feature slots");
  std::set<std::string> seen;
  for (const SlotSpec& s : slots) {
    if (!seen.insert(s.name).second) {
      throw SchemaError("duplicate slot '" + s.name + "' in " + to_string(party) + " schema");
    }
    if (s.vocab_size < 2) {
      throw SchemaError("slot '" + s.name + "' needs vocab_size >= 2");
    }
  }
  if (key_column.empty()) throw SchemaError("schema needs a key column");
}

void require_disjoint_slots(const FeatureSchema& host, const FeatureSchema& guest) {
  std::set<std::string> names;
  for (const SlotSpec& s : host.slots) names.insert(s.name);
  for (const SlotSpec& s : guest.slots) {
    if (names.count(s.name)) {
      throw SchemaError("slot '" + s.name + "' appears in both host and guest schemas");
    }
  }
}

PartyDataset::PartyDataset(FeatureSchema schema) : schema_(std::move(schema)) {
  schema_.validate();
}

void PartyDataset::add(Sample sample) {
  if (schema_.party == Party::kGuest && sample.label) {
    throw SchemaError("guest samples never carry a label (key '" + sample.key + "')");
  }
  if (schema_.party == Party::kHost && !sample.label) {
    throw SchemaError("host sample '" + sample.key + "' has no label");
  }
  if (sample.label && *sample.label > 1) {
    throw DataError("label of sample '" + sample.key + "' is not binary");
  }
  if (sample.indices.size() != schema_.num_slots()) {
    throw SchemaError("sample '" + sample.key + "' has " +
                      std::to_string(sample.indices.size()) + " slot indices, schema has " +
                      std::to_string(schema_.num_slots()));
  }
  for (std::size_t s = 0; s < sample.indices.size(); ++s) {
    if (sample.indices[s] >= schema_.slots[s].vocab_size) {
      throw VocabError("sample '" + sample.key + "': index out of range for slot '" +
                       schema_.slots[s].name + "'");
    }
  }
  samples_.push_back(std::move(sample));
}

std::vector<std::string> PartyDataset::keys() const {
  std::vector<std::string> out;
  out.reserve(samples_.size());
  for (const Sample& s : samples_) out.push_back(s.key);
  return out;
}

std::uint32_t hash_feature(std::string_view slot_name, std::string_view raw_value,
                           std::size_t vocab_size) {
  if (vocab_size < 2) throw SchemaError("hash_feature: vocab_size must be >= 2");
  std::uint64_t h = fnv1a64(slot_name);
  h = fnv1a64("=", h);
  h = fnv1a64(raw_value, h);
  return static_cast<std::uint32_t>(h % vocab_size);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

RawFrame read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  RawFrame frame;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      frame.header = split_line(line);
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != frame.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(frame.header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    frame.rows.push_back(std::move(cells));
  }
  return frame;
}

void write_csv(const std::filesystem::path& path, const RawFrame& frame) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  auto emit = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(frame.header);
  for (const auto& row : frame.rows) emit(row);
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

PartyDataset parse_frame(const RawFrame& frame, const FeatureSchema& schema,
                         std::size_t first_line) {
  PartyDataset dataset(schema);
  if (frame.header.empty() && frame.rows.empty()) return dataset;

  auto column = [&frame](const std::string& name) -> std::size_t {
    auto it = std::find(frame.header.begin(), frame.header.end(), name);
    if (it == frame.header.end()) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - frame.header.begin());
  };
  const std::size_t key_col = column(schema.key_column);
  std::optional<std::size_t> label_col;
  if (schema.party == Party::kHost) label_col = column(schema.label_column);
  std::vector<std::size_t> slot_cols;
  for (const SlotSpec& s : schema.slots) slot_cols.push_back(column(s.name));

  for (std::size_t r = 0; r < frame.rows.size(); ++r) {
    const auto& row = frame.rows[r];
    Sample sample;
    sample.key = row[key_col];
    if (label_col) {
      const std::string& cell = row[*label_col];
      if (cell == "0") {
        sample.label = 0;
      } else if (cell == "1") {
        sample.label = 1;
      } else {
        throw DataError("line " + std::to_string(first_line + r) + ": cannot parse label '" +
                        cell + "'");
      }
    }
    for (std::size_t s = 0; s < schema.slots.size(); ++s) {
      const std::string& cell = row[slot_cols[s]];
      sample.indices.push_back(hash_feature(schema.slots[s].name,
                                            cell.empty() ? kMissingToken : cell,
                                            schema.slots[s].vocab_size));
    }
    dataset.add(std::move(sample));
  }
  return dataset;
}

PartyDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  return parse_frame(read_csv(path), schema);
}

// ---------------------------------------------------------------------------
// Alignment

std::vector<std::string> intersect_keys(std::span<const std::string> host_keys,
                                        std::span<const std::string> guest_keys) {
  std::unordered_set<std::string_view> guest(guest_keys.begin(), guest_keys.end());
  std::set<std::string> common;
  for (const std::string& k : host_keys) {
    if (guest.count(k)) common.insert(k);
  }
  return {common.begin(), common.end()};
}

AlignmentPartition split_by_alignment(std::span<const Sample> host_samples,
                                      std::span<const std::string> aligned_keys) {
  std::unordered_set<std::string_view> aligned(aligned_keys.begin(), aligned_keys.end());
  AlignmentPartition out;
  for (const Sample& s : host_samples) {
    (aligned.count(s.key) ? out.aligned : out.unaligned).push_back(s);
  }
  return out;
}

namespace {

IndexMatrix to_matrix(const std::vector<const Sample*>& samples, std::size_t cols) {
  IndexMatrix m(samples.size(), cols);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    std::copy(samples[r]->indices.begin(), samples[r]->indices.end(),
              m.indices.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  return m;
}

}  // namespace

SplitPart build_part(std::span<const Sample> host_samples, const PartyDataset& guest) {
  const std::size_t host_cols = host_samples.empty() ? 0 : host_samples.front().indices.size();
  std::unordered_map<std::string_view, const Sample*> guest_by_key;
  for (const Sample& g : guest.samples()) guest_by_key.emplace(g.key, &g);

  std::vector<std::string> host_keys;
  for (const Sample& s : host_samples) host_keys.push_back(s.key);
  const auto guest_keys = guest.keys();
  const auto aligned_keys = intersect_keys(host_keys, guest_keys);
  const auto partition = split_by_alignment(host_samples, aligned_keys);

  SplitPart part;
  std::vector<const Sample*> host_rows, guest_rows;
  for (const Sample& s : partition.aligned) {
    part.aligned.keys.push_back(s.key);
    part.aligned.labels.push_back(*s.label);
    host_rows.push_back(&s);
    guest_rows.push_back(guest_by_key.at(s.key));
  }
  part.aligned.host_x = to_matrix(host_rows, host_cols);
  part.aligned.guest_x = to_matrix(guest_rows, guest.schema().num_slots());

  host_rows.clear();
  for (const Sample& s : partition.unaligned) {
    part.unaligned.keys.push_back(s.key);
    part.unaligned.labels.push_back(*s.label);
    host_rows.push_back(&s);
  }
  part.unaligned.host_x = to_matrix(host_rows, host_cols);
  return part;
}

DatasetSplit split_random(const PartyDataset& host, const PartyDataset& guest,
                          std::size_t n_validation, std::size_t n_test, std::uint64_t seed) {
  if (n_validation + n_test >= host.size()) {
    throw ConfigError("validation + test sizes leave no training samples");
  }
  require_disjoint_slots(host.schema(), guest.schema());
  const auto order = batch_iter(host.size(), host.size(), derive_seed(seed, "split"), 0).front();
  std::vector<Sample> train, val, test;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Sample& s = host.samples()[order[i]];
    if (i < n_test) {
      test.push_back(s);
    } else if (i < n_test + n_validation) {
      val.push_back(s);
    } else {
      train.push_back(s);
    }
  }
  DatasetSplit split{host.schema(), guest.schema(), build_part(train, guest),
                     build_part(val, guest), build_part(test, guest)};
  return split;
}

DatasetSplit split_by_day(const PartyDataset& host, const PartyDataset& guest,
                          std::span<const std::string> host_day) {
  if (host_day.size() != host.size()) throw DataError("one day value per host sample required");
  require_disjoint_slots(host.schema(), guest.schema());
  std::set<std::string> days(host_day.begin(), host_day.end());
  if (days.size() < 3) throw DataError("day split needs at least three distinct days");
  const std::string test_day = *days.rbegin();
  const std::string val_day = *std::next(days.rbegin());
  std::vector<Sample> train, val, test;
  for (std::size_t i = 0; i < host.size(); ++i) {
    const Sample& s = host.samples()[i];
    if (host_day[i] == test_day) {
      test.push_back(s);
    } else if (host_day[i] == val_day) {
      val.push_back(s);
    } else {
      train.push_back(s);
    }
  }
  return {host.schema(), guest.schema(), build_part(train, guest), build_part(val, guest),
          build_part(test, guest)};
}

void truncate_unaligned(SplitPart& part, std::size_t count) {
  UnalignedData& u = part.unaligned;
  if (count >= u.size()) return;
  u.keys.resize(count);
  u.labels.resize(count);
  u.host_x.indices.resize(count * u.host_x.cols);
  u.host_x.rows = count;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t shuffle_seed,
                                                 std::uint64_t epoch) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(shuffle_seed, "epoch", epoch));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[rng.below(i)]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

IndexMatrix gather_rows(const IndexMatrix& x, std::span<const std::size_t> rows) {
  IndexMatrix out(rows.size(), x.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows) throw ShapeError("gather_rows: row out of range");
    std::copy_n(x.indices.begin() + static_cast<std::ptrdiff_t>(rows[i] * x.cols), x.cols,
                out.indices.begin() + static_cast<std::ptrdiff_t>(i * x.cols));
  }
  return out;
}

Tensor labels_tensor(std::span<const std::uint8_t> labels, std::span<const std::size_t> rows) {
  Tensor out = Tensor::matrix(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

}  // namespace vfl
