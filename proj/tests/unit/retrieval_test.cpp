#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "obsdict/dictionary_io.hpp"
#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/random.hpp"
#include "obsdict/retrieval.hpp"
#include "test_support.hpp"

using namespace obsdict;
using namespace obsdict::retrieval;

namespace {

std::vector<float> unit_vector(SplitMix64& rng, int dim) {
  std::vector<float> v(static_cast<std::size_t>(dim));
  double s = 0;
  for (auto& x : v) {
    x = static_cast<float>(rng.normal());
    s += static_cast<double>(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(s));
  return v;
}

Index random_index(std::uint64_t seed, std::size_t count, int dim, int labels) {
  SplitMix64 rng(seed);
  Index ix;
  ix.embeddings.dim = static_cast<std::uint32_t>(dim);
  for (std::size_t i = 0; i < count; ++i) {
    ix.embeddings.append(unit_vector(rng, dim));
    ix.entry_ids.push_back(rng.next());
    ix.labels.push_back(static_cast<char32_t>(0x4e00 + rng.below(static_cast<std::uint64_t>(labels))));
  }
  ix.encoder_id = "random";
  return ix;
}

std::vector<Match> full_sort_oracle(const Index& ix, const std::vector<float>& q, int k) {
  std::vector<Match> all;
  for (std::size_t i = 0; i < ix.count(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += static_cast<double>(ix.embeddings.row(i)[j]) * q[j];
    all.push_back({ix.entry_ids[i], ix.labels[i], s, 0});
  }
  std::sort(all.begin(), all.end(), [](const Match& a, const Match& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.entry_id < b.entry_id;
  });
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
  for (std::size_t r = 0; r < all.size(); ++r) all[r].rank = static_cast<int>(r);
  return all;
}

std::vector<LabelScore> vote_oracle(const std::vector<Match>& matches) {
  std::map<char32_t, LabelScore> by;
  for (const auto& m : matches) {
    auto& s = by[m.label];
    if (s.supporting_entry_ids.empty()) s.best_similarity = m.similarity;
    s.label = m.label;
    s.score += m.similarity;
    s.best_similarity = std::max(s.best_similarity, m.similarity);
    s.supporting_entry_ids.push_back(m.entry_id);
  }
  std::vector<LabelScore> out;
  for (auto& [l, s] : by) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const LabelScore& a, const LabelScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.best_similarity != b.best_similarity) return a.best_similarity > b.best_similarity;
    return a.label < b.label;
  });
  return out;
}

const Index& small_index() {
  static const Index ix = build_index(test_support::small_dictionary(), encoder::default_encoder(), 0);
  return ix;
}

}  // namespace

TEST(TopK, SelfMatchAtRankZero) {
  const auto& ix = small_index();
  for (std::size_t i = 0; i < ix.count(); i += 7) {
    const auto m = query_topk(ix, ix.embeddings.row(i), 5);
    EXPECT_EQ(m.front().entry_id, ix.entry_ids[i]);
    EXPECT_NEAR(m.front().similarity, 1.0, 1e-6);
  }
}

TEST(TopK, ClampAndErrors) {
  const auto& ix = small_index();
  EXPECT_EQ(query_topk(ix, ix.embeddings.row(0), 100000).size(), ix.count());
  EXPECT_THROW(query_topk(ix, ix.embeddings.row(0), 0), Error);
  const std::vector<float> short_q(5, 0.1f);
  try {
    (void)query_topk(ix, short_q, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(TopK, MatchesFullSortOracle) {
  const Index ix = random_index(1, 2000, 32, 300);
  SplitMix64 rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto q = unit_vector(rng, 32);
    const int k = std::array{1, 10, 50, 100}[static_cast<std::size_t>(t % 4)];
    ASSERT_EQ(query_topk(ix, q, k), full_sort_oracle(ix, q, k)) << "query " << t;
  }
}

TEST(TopK, TiesBrokenByEntryId) {
  Index ix;
  ix.embeddings.dim = 2;
  for (std::uint64_t id : {30, 10, 20}) {
    ix.embeddings.append(std::vector<float>{1.0f, 0.0f});
    ix.entry_ids.push_back(id);
    ix.labels.push_back(U'a');
  }
  const auto m = query_topk(ix, std::vector<float>{1.0f, 0.0f}, 3);
  EXPECT_EQ(m[0].entry_id, 10u);
  EXPECT_EQ(m[1].entry_id, 20u);
  EXPECT_EQ(m[2].entry_id, 30u);
  for (int r = 0; r < 3; ++r) EXPECT_EQ(m[static_cast<std::size_t>(r)].rank, r);
}

TEST(Vote, SumRuleExamples) {
  const std::vector<Match> one = {{1, U'a', 0.5, 0}, {2, U'a', 0.25, 1}};
  const auto r1 = vote_labels(one);
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_DOUBLE_EQ(r1[0].score, 0.75);
  EXPECT_EQ(r1[0].supporting_entry_ids, (std::vector<std::uint64_t>{1, 2}));

  const std::vector<Match> ab = {{1, U'A', 0.9, 0}, {2, U'B', 0.5, 1}, {3, U'B', 0.5, 2}};
  const auto r2 = vote_labels(ab);
  EXPECT_EQ(r2[0].label, U'B');
  EXPECT_EQ(r2[1].label, U'A');
  EXPECT_TRUE(vote_labels({}).empty());
}

TEST(Vote, CountRule) {
  const std::vector<Match> ab = {{1, U'A', 0.9, 0}, {2, U'B', 0.3, 1}, {3, U'B', 0.2, 2}};
  const auto r = vote_labels(ab, VoteRule::Count);
  EXPECT_EQ(r[0].label, U'B');
  EXPECT_DOUBLE_EQ(r[0].score, 2.0);
}

TEST(Vote, MatchesGroupAndSortOracle) {
  SplitMix64 rng(9);
  for (int t = 0; t < 500; ++t) {
    std::vector<Match> m;
    const int n = 1 + static_cast<int>(rng.below(60));
    double sim = 1.0;
    for (int i = 0; i < n; ++i) {
      // coarse similarities so score and best-similarity ties actually occur
      sim -= static_cast<double>(rng.below(3)) * 0.125;
      m.push_back({rng.next(), static_cast<char32_t>(0x4e00 + rng.below(8)), sim, i});
    }
    ASSERT_EQ(vote_labels(m), vote_oracle(m)) << "list " << t;
  }
}

TEST(Vote, PositiveScalingKeepsOrder) {
  SplitMix64 rng(10);
  for (int t = 0; t < 100; ++t) {
    std::vector<Match> m, scaled;
    double sim = 1.0;
    for (int i = 0; i < 40; ++i) {
      sim -= rng.uniform() * 0.02;
      m.push_back({rng.next(), static_cast<char32_t>(0x4e00 + rng.below(10)), sim, i});
      scaled.push_back(m.back());
      scaled.back().similarity *= 4.0;
    }
    const auto a = vote_labels(m), b = vote_labels(scaled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].label, b[i].label);
  }
}

TEST(Vote, TopNSetsAreNested) {
  const auto& ix = small_index();
  const auto r = vote_labels(query_topk(ix, ix.embeddings.row(3), 50));
  std::set<char32_t> seen;
  for (const auto& s : r) EXPECT_TRUE(seen.insert(s.label).second);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r[i - 1].score, r[i].score);
}

TEST(Decipher, EntryImageRetrievesOwnLabel) {
  const auto& d = test_support::small_dictionary();
  const auto& ix = small_index();
  for (std::size_t i = 0; i < d.entries.size(); i += 5) {
    const auto r = decipher(ix, encoder::default_encoder(), glyph::render(d.entries[i].glyph), 50, 7);
    EXPECT_EQ(r.label_ranking.front().label, d.entries[i].label);
    EXPECT_EQ(r.query_id, 7u);
    EXPECT_EQ(r.index_generation, d.generation);
  }
}

TEST(Decipher, DeterministicAndEmptyImageRejected) {
  const auto& d = test_support::small_dictionary();
  const auto bytes = image_io::encode_png(glyph::render(d.entries[9].glyph));
  const auto a = decipher_bytes(small_index(), encoder::default_encoder(), bytes, 50, 1);
  const auto b = decipher_bytes(small_index(), encoder::default_encoder(), bytes, 50, 2);
  EXPECT_EQ(a.label_ranking, b.label_ranking);
  EXPECT_NE(a.query_id, b.query_id);
  EXPECT_EQ(a.query_id, query_id(bytes, 1));
  GrayImage blank{40, 40, std::vector<std::uint8_t>(1600, 255)};
  try {
    (void)decipher(small_index(), encoder::default_encoder(), blank, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyImage);
  }
}

TEST(Index, BuildShapeAndDeterminism) {
  const auto& d = test_support::small_dictionary();
  const auto& ix = small_index();
  EXPECT_EQ(ix.count(), d.entries.size());
  EXPECT_EQ(ix.dim(), 438);
  EXPECT_EQ(ix.dictionary_fingerprint, d.config_fingerprint);
  for (std::size_t i = 0; i < ix.count(); ++i) {
    EXPECT_EQ(ix.entry_ids[i], d.entries[i].entry_id);
    EXPECT_EQ(ix.labels[i], d.entries[i].label);
  }
  EXPECT_EQ(encoder::encode_store(build_index(d, encoder::default_encoder(), 1).embeddings),
            encoder::encode_store(ix.embeddings));
  try {
    (void)build_index(synthesis::Dictionary{}, encoder::default_encoder());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyDictionary);
  }
}

TEST(Index, UpdateReembedsOnlyChangedRows) {
  auto d = test_support::small_dictionary();
  const auto& base = small_index();
  d.entries[4].glyph = d.entries[40].glyph;
  d.generation = 1;
  const auto up = update_index(base, d, {4}, encoder::default_encoder());
  EXPECT_EQ(up.generation, 1);
  const auto full = build_index(d, encoder::default_encoder());
  EXPECT_EQ(up.embeddings, full.embeddings);
}

TEST(Index, SaveLoadRoundTripAndTamper) {
  test_support::TempDir tmp("index_io");
  const auto& d = test_support::small_dictionary();
  save_index(tmp.path() / "index", small_index());
  const auto loaded = load_index(tmp.path() / "index", d);
  EXPECT_EQ(loaded.embeddings, small_index().embeddings);
  EXPECT_EQ(loaded.entry_ids, small_index().entry_ids);
  EXPECT_EQ(loaded.encoder_id, "descriptor-v1");

  auto other = d;
  other.config_fingerprint ^= 1;
  EXPECT_THROW(load_index(tmp.path() / "index", other), Error);
  other = d;
  other.generation = 3;
  EXPECT_THROW(load_index(tmp.path() / "index", other), Error);
  other = d;
  other.entries.pop_back();
  EXPECT_THROW(load_index(tmp.path() / "index", other), Error);
}
