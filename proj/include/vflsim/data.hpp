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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vflsim/nn.hpp"
#include "vflsim/tensor.hpp"

namespace vfl {

enum class Party { kHost, kGuest };

std::string to_string(Party party);

// Token hashed in place of an empty CSV cell.
inline constexpr const char* kMissingToken = "__missing__";

struct SlotSpec {
  std::string name;
  std::size_t vocab_size = 0;
};

struct FeatureSchema {
  Party party = Party::kHost;
  std::vector<SlotSpec> slots;
  std::string key_column = "key";
  std::string label_column = "click";  // ignored for the guest

  std::size_t num_slots() const { return slots.size(); }
  std::vector<std::string> slot_names() const;
  std::vector<std::size_t> vocab_sizes() const;

  // Unique slot names, vocab >= 2, at least one slot.
  void validate() const;
};

// Throws SchemaError if the two parties share a slot name.
void require_disjoint_slots(const FeatureSchema& host, const FeatureSchema& guest);

struct Sample {
  std::string key;
  std::vector<std::uint32_t> indices;
  std::optional<std::uint8_t> label;

  bool operator==(const Sample&) const = default;
};

// Samples of one party, validated against its schema on insertion. A guest
// dataset rejects labelled samples.
class PartyDataset {
 public:
  PartyDataset() = default;
  explicit PartyDataset(FeatureSchema schema);

  void add(Sample sample);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  std::vector<std::string> keys() const;

 private:
  FeatureSchema schema_;
  std::vector<Sample> samples_;
};

// FNV-1a 64 of "slot_name=raw_value", modulo vocab_size.
std::uint32_t hash_feature(std::string_view slot_name, std::string_view raw_value,
                           std::size_t vocab_size);

// String table as it appears in a CSV file.
struct RawFrame {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const RawFrame&) const = default;
};

RawFrame read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const RawFrame& frame);

// Hashes the schema's columns of `frame`. `first_line` is the file line of
// frame.rows[0], used in row-level error messages.
PartyDataset parse_frame(const RawFrame& frame, const FeatureSchema& schema,
                         std::size_t first_line = 2);

PartyDataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema);

// Exact set intersection, sorted. Stands in for the output of a PSI protocol:
// only keys cross this boundary.
std::vector<std::string> intersect_keys(std::span<const std::string> host_keys,
                                        std::span<const std::string> guest_keys);

struct AlignmentPartition {
  std::vector<Sample> aligned;
  std::vector<Sample> unaligned;
};

// Order-preserving partition of host samples by membership in aligned_keys.
AlignmentPartition split_by_alignment(std::span<const Sample> host_samples,
                                      std::span<const std::string> aligned_keys);

// Aligned rows of one split: row i of host_x and guest_x share keys[i].
struct AlignedData {
  std::vector<std::string> keys;
  IndexMatrix host_x;
  std::vector<std::uint8_t> labels;
  IndexMatrix guest_x;

  std::size_t size() const { return keys.size(); }
};

// Host rows without a guest counterpart.
struct UnalignedData {
  std::vector<std::string> keys;
  IndexMatrix host_x;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return keys.size(); }
};

struct SplitPart {
  AlignedData aligned;
  UnalignedData unaligned;

  std::size_t size() const { return aligned.size() + unaligned.size(); }
};

struct DatasetSplit {
  FeatureSchema host_schema;
  FeatureSchema guest_schema;
  SplitPart train;
  SplitPart validation;
  SplitPart test;
};

// Joins one partition of host samples with the guest's samples by key.
SplitPart build_part(std::span<const Sample> host_samples, const PartyDataset& guest);

// Random split by host sample for synthetic data. Guest rows follow their
// host key; guest-only keys are dropped.
DatasetSplit split_random(const PartyDataset& host, const PartyDataset& guest,
                          std::size_t n_validation, std::size_t n_test,
                          std::uint64_t seed);

// Split by a day column (e.g. Avazu's hour prefix), chronological: the last
// day is test, the one before is validation, everything else is training.
DatasetSplit split_by_day(const PartyDataset& host, const PartyDataset& guest,
                          std::span<const std::string> host_day);

// Keeps the first `count` unaligned training rows (in their stored order).
void truncate_unaligned(SplitPart& part, std::size_t count);

// Deterministic permutation from (shuffle_seed, epoch), cut into batches of
// batch_size; the last batch may be short.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t shuffle_seed,
                                                 std::uint64_t epoch);

IndexMatrix gather_rows(const IndexMatrix& x, std::span<const std::size_t> rows);
Tensor labels_tensor(std::span<const std::uint8_t> labels,
                     std::span<const std::size_t> rows);

}  // namespace vfl
