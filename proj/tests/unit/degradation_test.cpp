#include <gtest/gtest.h>

#include "obsdict/degradation.hpp"
#include "obsdict/encoder.hpp"
#include "obsdict/error.hpp"
#include "obsdict/random.hpp"
#include "test_support.hpp"

using namespace obsdict;
using namespace obsdict::degradation;

namespace {

DegradationSpec spec(Kind k, int s, std::uint64_t seed = 0) { return DegradationSpec{k, s, seed}; }

}  // namespace

TEST(Degrade, KindNames) {
  for (Kind k : kAllKinds) EXPECT_EQ(parse_kind(kind_name(k)), k);
  EXPECT_EQ(parse_kind("BLUR"), Kind::Blur);
  EXPECT_THROW(parse_kind("smudge"), Error);
}

TEST(Degrade, SeverityValidated) {
  EXPECT_THROW(spec(Kind::Blur, 0).validate(), Error);
  EXPECT_THROW(spec(Kind::Mask, 4).validate(), Error);
  EXPECT_THROW(degrade(Glyph(), spec(Kind::Noise, 7)), Error);
}

TEST(Degrade, NoiseAndMaskSeeded) {
  const Glyph g = test_support::corpus_glyphs(1).front();
  EXPECT_EQ(degrade(g, spec(Kind::Noise, 1, 9)), degrade(g, spec(Kind::Noise, 1, 9)));
  EXPECT_NE(degrade(g, spec(Kind::Noise, 1, 9)), degrade(g, spec(Kind::Noise, 1, 10)));
  EXPECT_EQ(degrade(g, spec(Kind::Mask, 2, 9)), degrade(g, spec(Kind::Mask, 2, 9)));
}

TEST(Degrade, BlurAndErodeIgnoreSeed) {
  const Glyph g = test_support::corpus_glyphs(2).back();
  for (Kind k : {Kind::Blur, Kind::Erode}) EXPECT_EQ(degrade(g, spec(k, 2, 1)), degrade(g, spec(k, 2, 999)));
}

TEST(Degrade, OutputStaysInUnitRange) {
  const Glyph g = test_support::corpus_glyphs(3).back();
  for (Kind k : kAllKinds)
    for (int s = 1; s <= 3; ++s)
      for (float v : degrade(g, spec(k, s, 5)).pixels()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
      }
}

TEST(Degrade, HeavyErodeRemovesTwoPixelStroke) {
  EXPECT_TRUE(degrade(test_support::bar(10, 40, 80, 42), spec(Kind::Erode, 3)).empty());
}

TEST(Degrade, ErodeInkNonIncreasingPerIteration) {
  for (const auto& g : test_support::corpus_glyphs(20)) {
    long prev = g.ink_count();
    for (int s = 1; s <= 3; ++s) {
      const long now = degrade(g, spec(Kind::Erode, s)).ink_count();
      EXPECT_LE(now, prev);
      prev = now;
    }
  }
}

TEST(Degrade, MaskAreaMatchesSeverity) {
  const Glyph full = test_support::bar(0, 0, 96, 96);
  for (int s = 1; s <= 3; ++s)
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const Rect r = mask_rect(96, s, seed);
      EXPECT_TRUE(full.canvas().contains(r));
      const double aspect = static_cast<double>(r.width()) / r.height();
      EXPECT_GE(aspect, 0.5 - 0.05);
      EXPECT_LE(aspect, 2.0 + 0.05);
      const long covered = full.ink_count() - degrade(full, spec(Kind::Mask, s, seed)).ink_count();
      EXPECT_EQ(covered, r.area());
      EXPECT_NEAR(static_cast<double>(covered) / (96.0 * 96.0), kMaskArea[static_cast<std::size_t>(s - 1)], 0.01);
    }
}

TEST(Degrade, BlurSpreadsInk) {
  const Glyph dot = test_support::bar(48, 48, 49, 49);
  const Glyph b = degrade(dot, spec(Kind::Blur, 1));
  EXPECT_LT(b.at(48, 48), 1.0f);
  EXPECT_GT(b.at(49, 48), 0.0f);
  EXPECT_FLOAT_EQ(b.at(49, 48), b.at(47, 48));
  EXPECT_FLOAT_EQ(b.at(49, 48), b.at(48, 49));
}

// Self-similarity to the clean glyph, averaged over a 100-glyph sample, must
// not rise with severity; tolerated violations <= 2% of (kind, seed, step).
TEST(Degrade, SelfSimilarityNonIncreasingInSeverity) {
  const auto& enc = encoder::default_encoder();
  const auto glyphs = test_support::corpus_glyphs(100);
  std::vector<encoder::Embedding> clean;
  for (const auto& g : glyphs) clean.push_back(enc.embed(g));
  int checks = 0, violations = 0;
  for (Kind k : kAllKinds)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      double prev = 2.0;
      for (int s = 1; s <= 3; ++s) {
        double sum = 0.0;
        for (std::size_t i = 0; i < glyphs.size(); ++i) {
          const Glyph d = degrade(glyphs[i], spec(k, s, hash64({seed, i})));
          if (!d.empty()) sum += encoder::cosine(clean[i], enc.embed(d));
        }
        const double mean = sum / static_cast<double>(glyphs.size());
        if (s > 1) {
          ++checks;
          violations += mean > prev;
        }
        prev = mean;
      }
    }
  EXPECT_LE(violations, checks / 50) << violations << " of " << checks;
}
