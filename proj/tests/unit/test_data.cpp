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
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vflsim/error.hpp"
#include "vflsim/metrics.hpp"
#include "vflsim/rng.hpp"

namespace {

// Reference FNV-1a 64, written out independently of the library.
std::uint64_t reference_fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

struct FrozenHash {
  const char* slot;
  const char* value;
  std::size_t vocab;
  std::uint32_t index;
};

// Computed once with a separate FNV-1a implementation and frozen.
const FrozenHash kFrozen[] = {
    {"app_id", "51c9bc70", 2, 1},           {"C14", "e5121482", 100003, 81578},
    {"g3", "c0433cbd", 100003, 13735},      {"C14", "00a61f93", 2, 0},
    {"app_id", "49889310", 2, 1},           {"g3", "02f0ee99", 100003, 56699},
    {"hour", "35d14880", 100003, 43742},    {"banner_pos", "59001ac9", 1000, 729},
    {"C21", "ffe976ab", 2, 0},              {"hour", "16f44881", 1000, 252},
    {"banner_pos", "751b4c83", 97, 0},      {"banner_pos", "06555096", 1000, 335},
    {"hour", "7608d942", 100003, 97577},    {"app_id", "66160227", 100003, 30948},
    {"app_id", "6ce9da66", 100003, 87128},  {"C21", "eab06e9b", 1000, 672},
    {"C21", "90624fe3", 100003, 86365},     {"site_id", "93550840", 97, 78},
    {"device_model", "d1711cbd", 2, 1},     {"app_id", "b7a1774f", 100003, 63891},
    {"g3", "2475263c", 100003, 47421},      {"C14", "d9814559", 2, 1},
    {"g3", "ac9f21df", 100003, 32017},      {"banner_pos", "8f4ecb4f", 100003, 12785},
    {"banner_pos", "8c53765f", 100003, 24712}, {"C21", "6edd77d8", 97, 4},
    {"banner_pos", "d4f398ee", 1000, 833},  {"site_id", "0879d955", 97, 17},
    {"g3", "cdb54088", 100003, 64263},      {"hour", "ebe80fa9", 97, 74},
    {"banner_pos", "b1515fff", 100003, 65033}, {"g3", "82e26123", 100003, 26468},
    {"C21", "8ece78b0", 2, 0},              {"banner_pos", "511070a7", 100003, 84557},
    {"app_id", "703e53cf", 1000, 561},      {"g3", "ec0643b1", 97, 67},
    {"C21", "d7aa2208", 100003, 12511},     {"app_id", "a60741f3", 1000, 281},
    {"g3", "5ec0c260", 2, 0},               {"C14", "bf5f85e2", 100003, 57487},
    {"device_model", "730b89dc", 2, 0},     {"app_id", "000e05d0", 100003, 96896},
    {"app_id", "9c31b930", 97, 34},         {"C14", "1eedfcfc", 2, 1},
    {"banner_pos", "ab215122", 1000, 857},  {"device_model", "01504585", 1000, 62},
    {"g3", "b093e3b4", 97, 68},             {"C14", "791572d5", 97, 53},
    {"banner_pos", "159d6a38", 100003, 52163}, {"device_model", "ef5fd31c", 97, 18},
};

vfl::FeatureSchema host_schema() {
  vfl::FeatureSchema s;
  s.party = vfl::Party::kHost;
  s.slots = {{"site_id", 100003}, {"app_id", 1000}};
  return s;
}

vfl::FeatureSchema guest_schema() {
  vfl::FeatureSchema s;
  s.party = vfl::Party::kGuest;
  s.slots = {{"device_model", 1000}};
  return s;
}

std::vector<std::string> random_keys(vfl::Rng& rng, std::size_t n, const std::string& prefix) {
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < n; ++i) keys.push_back(prefix + std::to_string(rng.next()));
  return keys;
}

// Logistic regression with one weight per (slot, index), trained by full
// batch gradient descent. Returns test AUC.
double logistic_regression_auc(const std::vector<vfl::IndexMatrix>& train_x,
                               const std::vector<std::uint8_t>& train_y,
                               const std::vector<vfl::IndexMatrix>& test_x,
                               const std::vector<std::uint8_t>& test_y, std::size_t vocab) {
  std::size_t width = 0;
  for (const auto& m : train_x) width += m.cols;
  std::vector<double> w(width * vocab, 0.0);
  double b = 0.0;
  const auto logit = [&](const std::vector<vfl::IndexMatrix>& xs, std::size_t r) {
    double z = b;
    std::size_t off = 0;
    for (const auto& m : xs) {
      for (std::size_t c = 0; c < m.cols; ++c) z += w[(off + c) * vocab + m.at(r, c)];
      off += m.cols;
    }
    return z;
  };
  const std::size_t n = train_y.size();
  std::vector<double> g(w.size());
  for (int it = 0; it < 300; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    double gb = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double e = 1.0 / (1.0 + std::exp(-logit(train_x, r))) - train_y[r];
      gb += e;
      std::size_t off = 0;
      for (const auto& m : train_x) {
        for (std::size_t c = 0; c < m.cols; ++c) g[(off + c) * vocab + m.at(r, c)] += e;
        off += m.cols;
      }
    }
    const double lr = 2.0 / static_cast<double>(n) * static_cast<double>(vocab) / 8.0;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * (g[i] + 1e-3 * w[i]);
    b -= 2.0 * gb / static_cast<double>(n);
  }
  std::vector<double> scores;
  for (std::size_t r = 0; r < test_y.size(); ++r) scores.push_back(logit(test_x, r));
  return vfl::auc(scores, test_y).value();
}

}  // namespace

TEST_CASE("hash_feature") {
  CHECK(vfl::hash_feature("site_id", "85f751fd", 100003) ==
        reference_fnv("site_id=85f751fd") % 100003);
  CHECK(vfl::hash_feature("site_id", "85f751fd", 100003) == 9515);
  for (const auto& f : kFrozen) {
    CHECK(vfl::hash_feature(f.slot, f.value, f.vocab) == f.index);
    CHECK(vfl::hash_feature(f.slot, f.value, f.vocab) ==
          reference_fnv(std::string(f.slot) + "=" + f.value) % f.vocab);
  }
  for (int i = 0; i < 100; ++i) CHECK(vfl::hash_feature("s", std::to_string(i), 2) < 2);
  CHECK(vfl::hash_feature("a", "b", 77) == vfl::hash_feature("a", "b", 77));
  CHECK_THROWS_AS(vfl::hash_feature("a", "b", 1), vfl::SchemaError);
}

TEST_CASE("schema validation") {
  auto s = host_schema();
  CHECK_NOTHROW(s.validate());
  s.slots.push_back({"site_id", 10});
  CHECK_THROWS_AS(s.validate(), vfl::SchemaError);
  s = host_schema();
  s.slots[0].vocab_size = 1;
  CHECK_THROWS_AS(s.validate(), vfl::SchemaError);
  auto g = guest_schema();
  g.slots.push_back({"app_id", 10});
  CHECK_THROWS_AS(vfl::require_disjoint_slots(host_schema(), g), vfl::SchemaError);
  CHECK_NOTHROW(vfl::require_disjoint_slots(host_schema(), guest_schema()));
}

TEST_CASE("samples are validated on insertion") {
  vfl::PartyDataset guest(guest_schema());
  CHECK_THROWS_AS(guest.add({"k", {1}, std::uint8_t{1}}), vfl::SchemaError);
  CHECK_NOTHROW(guest.add({"k", {1}, std::nullopt}));
  vfl::PartyDataset host(host_schema());
  CHECK_THROWS_AS(host.add({"k", {1, 2}, std::nullopt}), vfl::SchemaError);
  CHECK_THROWS_AS(host.add({"k", {1}, std::uint8_t{0}}), vfl::SchemaError);
  CHECK_THROWS_AS(host.add({"k", {1, 1000}, std::uint8_t{0}}), vfl::VocabError);
  CHECK_THROWS_AS(host.add({"k", {1, 2}, std::uint8_t{2}}), vfl::DataError);
}

TEST_CASE("load_csv") {
  vfltest::TempDir dir;
  const auto path = dir / "h.csv";
  vfltest::write_file(path,
                      "key,click,site_id,app_id\n"
                      "a,1,85f751fd,x\n"
                      "b,0,,y\n"
                      "c,1,zz,__missing__\n");

  SUBCASE("host rows") {
    const auto ds = vfl::load_csv(path, host_schema());
    REQUIRE(ds.size() == 3);
    for (const auto& s : ds.samples()) CHECK(s.label.has_value());
    CHECK(ds.samples()[0].indices[0] == 9515);
    CHECK(ds.samples()[1].indices[0] ==
          vfl::hash_feature("site_id", vfl::kMissingToken, 100003));
    CHECK(ds.samples()[2].indices[1] == vfl::hash_feature("app_id", "__missing__", 1000));
  }
  SUBCASE("guest projection ignores labels") {
    auto g = guest_schema();
    g.slots = {{"site_id", 100003}};
    const auto ds = vfl::load_csv(path, g);
    REQUIRE(ds.size() == 3);
    for (const auto& s : ds.samples()) CHECK_FALSE(s.label.has_value());
  }
  SUBCASE("missing column") {
    auto s = host_schema();
    s.slots.push_back({"hour", 10});
    try {
      vfl::load_csv(path, s);
      FAIL("expected a schema error");
    } catch (const vfl::SchemaError& e) {
      CHECK(std::string(e.what()).find("hour") != std::string::npos);
    }
  }
  SUBCASE("bad label names the line") {
    vfltest::write_file(path, "key,click,site_id,app_id\na,1,p,q\nb,yes,p,q\n");
    try {
      vfl::load_csv(path, host_schema());
      FAIL("expected a data error");
    } catch (const vfl::DataError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("empty file") {
    vfltest::write_file(path, "");
    CHECK(vfl::load_csv(path, host_schema()).size() == 0);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(vfl::load_csv(dir / "nope.csv", host_schema()), vfl::IoError);
  }
}

TEST_CASE("intersect_keys") {
  const std::vector<std::string> a = {"c", "a", "b"};
  const std::vector<std::string> b = {"d", "c", "b"};
  CHECK(vfl::intersect_keys(a, b) == std::vector<std::string>{"b", "c"});
  CHECK(vfl::intersect_keys(a, std::vector<std::string>{"x", "y"}).empty());

  vfl::Rng rng(21);
  const auto shared = random_keys(rng, 3000, "s");
  auto host = random_keys(rng, 7000, "h");
  auto guest = random_keys(rng, 7000, "g");
  host.insert(host.end(), shared.begin(), shared.end());
  guest.insert(guest.end(), shared.begin(), shared.end());
  std::shuffle(host.begin(), host.end(), std::mt19937_64(1));
  std::shuffle(guest.begin(), guest.end(), std::mt19937_64(2));

  auto hs = host;
  auto gs = guest;
  std::sort(hs.begin(), hs.end());
  std::sort(gs.begin(), gs.end());
  std::vector<std::string> oracle;
  for (std::size_t i = 0, j = 0; i < hs.size() && j < gs.size();) {
    if (hs[i] < gs[j]) {
      ++i;
    } else if (gs[j] < hs[i]) {
      ++j;
    } else {
      oracle.push_back(hs[i]);
      ++i;
      ++j;
    }
  }
  const auto got = vfl::intersect_keys(host, guest);
  CHECK(got.size() == 3000);
  CHECK(got == oracle);
}

TEST_CASE("split_by_alignment") {
  vfl::Rng rng(22);
  std::vector<vfl::Sample> host;
  for (int i = 0; i < 500; ++i) {
    host.push_back({"k" + std::to_string(rng.below(300)), {0, 0}, std::uint8_t{1}});
  }
  std::vector<std::string> all;
  for (const auto& s : host) all.push_back(s.key);

  CHECK(vfl::split_by_alignment(host, all).unaligned.empty());
  CHECK(vfl::split_by_alignment(host, std::vector<std::string>{}).aligned.empty());

  std::set<std::string> members;
  for (int i = 0; i < 300; i += 3) members.insert("k" + std::to_string(i));
  const std::vector<std::string> aligned(members.begin(), members.end());
  const auto part = vfl::split_by_alignment(host, aligned);
  std::vector<vfl::Sample> expect_a;
  std::vector<vfl::Sample> expect_u;
  for (const auto& s : host) (members.count(s.key) ? expect_a : expect_u).push_back(s);
  CHECK(part.aligned == expect_a);
  CHECK(part.unaligned == expect_u);
  CHECK(part.aligned.size() + part.unaligned.size() == host.size());
}

TEST_CASE("batch_iter") {
  const auto one = vfl::batch_iter(10, 64, 5, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 10);

  const auto a = vfl::batch_iter(1003, 100, 9, 3);
  CHECK(a == vfl::batch_iter(1003, 100, 9, 3));
  CHECK(a != vfl::batch_iter(1003, 100, 9, 4));
  REQUIRE(a.size() == 11);
  CHECK(a.back().size() == 3);
  std::multiset<std::size_t> seen;
  for (const auto& b : a) seen.insert(b.begin(), b.end());
  std::multiset<std::size_t> expect;
  for (std::size_t i = 0; i < 1003; ++i) expect.insert(i);
  CHECK(seen == expect);
  CHECK(vfl::batch_iter(0, 4, 1, 0).empty());
  CHECK_THROWS_AS(vfl::batch_iter(5, 0, 1, 0), vfl::ConfigError);
}

TEST_CASE("gen_synthetic") {
  auto cfg = vfltest::small_synthetic(1000);
  SUBCASE("fully aligned") {
    cfg.aligned_fraction = 1.0;
    const auto d = vfl::gen_synthetic(cfg);
    CHECK(vfl::intersect_keys(d.host.keys(), d.guest.keys()).size() == 1000);
  }
  SUBCASE("no overlap") {
    cfg.aligned_fraction = 0.0;
    const auto d = vfl::gen_synthetic(cfg);
    CHECK(vfl::intersect_keys(d.host.keys(), d.guest.keys()).empty());
    CHECK(d.guest.size() == 100);
  }
  SUBCASE("ceil of the aligned fraction") {
    cfg.aligned_fraction = 0.3333;
    const auto d = vfl::gen_synthetic(cfg);
    CHECK(d.n_aligned == 334);
    CHECK(vfl::intersect_keys(d.host.keys(), d.guest.keys()).size() == 334);
  }
  SUBCASE("invalid fraction") {
    cfg.aligned_fraction = 1.5;
    CHECK_THROWS_AS(vfl::gen_synthetic(cfg), vfl::ConfigError);
    cfg.aligned_fraction = 0.5;
    cfg.host_slots = 0;
    CHECK_THROWS_AS(vfl::gen_synthetic(cfg), vfl::ConfigError);
  }
  SUBCASE("seeded") {
    const auto a = vfl::gen_synthetic(cfg);
    const auto b = vfl::gen_synthetic(cfg);
    CHECK(a.host_frame == b.host_frame);
    CHECK(a.guest_frame == b.guest_frame);
    cfg.seed = 2;
    CHECK_FALSE(vfl::gen_synthetic(cfg).host_frame == a.host_frame);
  }
  SUBCASE("guest rows never carry labels") {
    const auto d = vfl::gen_synthetic(cfg);
    for (const auto& s : d.guest.samples()) CHECK_FALSE(s.label.has_value());
    CHECK(std::find(d.guest_frame.header.begin(), d.guest_frame.header.end(), "click") ==
          d.guest_frame.header.end());
  }
}

TEST_CASE("guest features add signal") {
  vfl::SyntheticConfig cfg;
  cfg.n_samples = 12000;
  cfg.aligned_fraction = 1.0;
  cfg.label_noise = 0.0;
  cfg.seed = 5;
  const auto d = vfl::gen_synthetic(cfg);
  const auto split = vfl::split_random(d.host, d.guest, 0, 4000, 6);
  const auto& tr = split.train.aligned;
  const auto& te = split.test.aligned;
  const double host_only =
      logistic_regression_auc({tr.host_x}, tr.labels, {te.host_x}, te.labels, cfg.vocab_size);
  const double both = logistic_regression_auc({tr.host_x, tr.guest_x}, tr.labels,
                                              {te.host_x, te.guest_x}, te.labels, cfg.vocab_size);
  MESSAGE("host-only AUC " << host_only << ", host+guest AUC " << both);
  CHECK(both >= host_only + 0.02);
}

TEST_CASE("split_random partitions keys") {
  const auto syn = vfl::gen_synthetic(vfltest::small_synthetic(2000));
  const auto split = vfl::split_random(syn.host, syn.guest, 300, 400, 3);
  CHECK(split.validation.size() == 300);
  CHECK(split.test.size() == 400);
  CHECK(split.train.size() == 1300);

  std::map<std::string, const vfl::Sample*> guest_by_key;
  for (const auto& s : syn.guest.samples()) guest_by_key[s.key] = &s;
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const vfl::SplitPart* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t i = 0; i < part->aligned.size(); ++i) {
      const auto& key = part->aligned.keys[i];
      REQUIRE(guest_by_key.count(key) == 1);
      for (std::size_t c = 0; c < part->aligned.guest_x.cols; ++c) {
        CHECK(part->aligned.guest_x.at(i, c) == guest_by_key[key]->indices[c]);
      }
      seen.insert(key);
    }
    for (const auto& key : part->unaligned.keys) {
      CHECK(guest_by_key.count(key) == 0);
      seen.insert(key);
    }
    total += part->size();
  }
  CHECK(seen.size() == total);
  CHECK(total == syn.host.size());
}

TEST_CASE("split_by_day is chronological") {
  const auto syn = vfl::gen_synthetic(vfltest::small_synthetic(400));
  std::vector<std::string> day;
  for (std::size_t i = 0; i < syn.host.size(); ++i) day.push_back(i < 200 ? "141021" : i < 300 ? "141022" : "141023");
  const auto split = vfl::split_by_day(syn.host, syn.guest, day);
  CHECK(split.train.size() == 200);
  CHECK(split.validation.size() == 100);
  CHECK(split.test.size() == 100);
  std::vector<std::string> short_day(day.begin(), day.begin() + 10);
  CHECK_THROWS_AS(vfl::split_by_day(syn.host, syn.guest, short_day), vfl::DataError);
}

TEST_CASE("truncate_unaligned keeps a prefix") {
  auto split = vfltest::small_split(1000);
  const auto before = split.train.unaligned.keys;
  REQUIRE(before.size() > 10);
  vfl::truncate_unaligned(split.train, 10);
  CHECK(split.train.unaligned.size() == 10);
  CHECK(split.train.unaligned.host_x.rows == 10);
  CHECK(std::equal(split.train.unaligned.keys.begin(), split.train.unaligned.keys.end(),
                   before.begin()));
}
