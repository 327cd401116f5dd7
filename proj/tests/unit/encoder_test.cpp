#include <gtest/gtest.h>

#include <cmath>

#include "obsdict/degradation.hpp"
#include "obsdict/encoder.hpp"
#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "test_support.hpp"

using namespace obsdict;
using namespace obsdict::encoder;

namespace {

const std::vector<Glyph>& sample() {
  static const auto g = test_support::corpus_glyphs(200);
  return g;
}

double norm(const Embedding& e) {
  double s = 0;
  for (float v : e) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

}  // namespace

TEST(Encoder, UnitNormAndDim) {
  const auto& enc = default_encoder();
  EXPECT_EQ(enc.dim(), 438);
  EXPECT_EQ(enc.id(), "descriptor-v1");
  for (const auto& g : sample()) {
    const auto e = enc.embed(g);
    ASSERT_EQ(e.size(), 438u);
    EXPECT_NEAR(norm(e), 1.0, 1e-6);
  }
}

TEST(Encoder, EmptyGlyphRejected) {
  try {
    (void)default_encoder().embed(Glyph());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyGlyph);
  }
}

TEST(Encoder, BitStableAcrossThreads) {
  const auto& enc = default_encoder();
  std::vector<Embedding> serial, parallel(sample().size());
  for (const auto& g : sample()) serial.push_back(enc.embed(g));
  parallel_for(sample().size(), 4, [&](std::size_t i) { parallel[i] = enc.embed(sample()[i]); });
  EXPECT_EQ(serial, parallel);
}

TEST(Encoder, AllInkBlockMeansUniform) {
  const auto f = DescriptorEncoder::raw_features(test_support::bar(0, 0, 96, 96));
  for (int i = 0; i < 144; ++i) EXPECT_DOUBLE_EQ(f[static_cast<std::size_t>(i)], 1.0);
}

TEST(Encoder, ShapeStatistics) {
  // a centred square: centroid at the middle, no cross moment
  const auto f = DescriptorEncoder::raw_features(test_support::bar(38, 38, 58, 58));
  const std::size_t s = 432;
  EXPECT_NEAR(f[s + 0], 400.0 / (96 * 96), 1e-12);
  EXPECT_NEAR(f[s + 1], 0.5, 1e-12);
  EXPECT_NEAR(f[s + 2], 0.5, 1e-12);
  EXPECT_NEAR(f[s + 3], f[s + 4], 1e-12);
  EXPECT_NEAR(f[s + 5], 0.0, 1e-12);
}

TEST(Encoder, OrientationIsPolarityFreeAndDirectional) {
  // a horizontal bar has vertical gradients: bins near pi/2 dominate
  const auto f = DescriptorEncoder::raw_features(test_support::bar(20, 40, 76, 50));
  double vertical = 0, horizontal = 0;
  for (int c = 0; c < 36; ++c) {
    const std::size_t base = 144 + static_cast<std::size_t>(c) * 8;
    vertical += f[base + 3] + f[base + 4];
    horizontal += f[base + 0] + f[base + 7];
  }
  EXPECT_GT(vertical, 5 * horizontal);
}

TEST(Encoder, TranslationAudit) {
  const auto& enc = default_encoder();
  SplitMix64 rng(2024);
  int wins = 0;
  for (int t = 0; t < 200; ++t) {
    const auto i = rng.below(sample().size());
    auto j = rng.below(sample().size());
    if (j == i) j = (j + 1) % sample().size();
    const int dx = rng.bernoulli(0.5) ? 2 : -2, dy = rng.bernoulli(0.5) ? 2 : 0;
    const auto e = enc.embed(sample()[i]);
    wins += cosine(e, enc.embed(glyph::translate(sample()[i], dx, dy))) > cosine(e, enc.embed(sample()[j]));
  }
  EXPECT_GE(wins, 180);
}

TEST(Encoder, LightDegradationCloserThanOtherLabels) {
  const auto& enc = default_encoder();
  std::vector<Embedding> e;
  for (const auto& g : sample()) e.push_back(enc.embed(g));
  double self = 0, cross = 0;
  int ns = 0, nc = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    for (auto k : degradation::kAllKinds) {
      const Glyph d = degradation::degrade(sample()[i], {k, 1, i});
      if (d.empty()) continue;
      self += cosine(e[i], enc.embed(d));
      ++ns;
    }
    for (std::size_t j = i + 1; j < 60; ++j, ++nc) cross += cosine(e[i], e[j]);
  }
  EXPECT_GT(self / ns, cross / nc);
}

TEST(Cosine, Basics) {
  const std::vector<float> a = {1, 0}, b = {0, 2}, c = {3, 0};
  EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine(a, c), 1.0);
  EXPECT_THROW(cosine(a, std::vector<float>{1, 2, 3}), Error);
}

TEST(Store, RoundTripAndLayout) {
  EmbeddingMatrix m;
  m.dim = 3;
  m.append(std::vector<float>{1.0f, -2.5f, 0.25f});
  m.append(std::vector<float>{0.0f, 1e-7f, 3.0f});
  const auto bytes = encode_store(m);
  ASSERT_EQ(bytes.size(), 20u + 2 * 3 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "OBSE");
  EXPECT_EQ(bytes[4], kStoreVersion);
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 2);
  // 1.0f little-endian
  EXPECT_EQ(bytes[20], 0x00);
  EXPECT_EQ(bytes[23], 0x3f);
  EXPECT_EQ(decode_store(bytes), m);

  test_support::TempDir tmp("store");
  write_store(tmp.path() / "e.obse", m);
  EXPECT_EQ(read_store(tmp.path() / "e.obse"), m);
}

TEST(Store, CorruptInputRejected) {
  EmbeddingMatrix m;
  m.dim = 2;
  m.append(std::vector<float>{1, 2});
  auto bytes = encode_store(m);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_store(bad_magic), Error);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(decode_store(truncated), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_store(bad_version), Error);
  EXPECT_THROW(m.append(std::vector<float>{1, 2, 3}), Error);
}
