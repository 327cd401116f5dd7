#include <gtest/gtest.h>

#include <set>

#include "obsdict/error.hpp"
#include "obsdict/glyph.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/metrics.hpp"
#include "obsdict/random.hpp"
#include "obsdict/synthesis.hpp"
#include "test_support.hpp"

using namespace obsdict;
using namespace obsdict::synthesis;

namespace {

const std::vector<CharSpec>& specs() {
  static const auto s = test_support::small_charset(50);
  return s;
}

std::vector<std::vector<std::uint8_t>> png_bytes(const std::vector<DictionaryEntry>& entries) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& e : entries) out.push_back(image_io::encode_png(glyph::render(e.glyph)));
  return out;
}

}  // namespace

TEST(Draft, SingleFontAlwaysSelected) {
  const auto one = test_support::small_charset(3, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DraftTrace t;
    (void)draft_with_retries(default_generator(), one[1], seed, &t);
    EXPECT_EQ(t.font_index, 0);
  }
}

TEST(Draft, Deterministic) {
  for (std::uint64_t seed : {1ULL, 99ULL, 123456789ULL}) EXPECT_EQ(fad_draft(specs()[4], seed), fad_draft(specs()[4], seed));
}

TEST(Draft, TraceWithinDeclaredRanges) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    DraftTrace t;
    (void)draft_with_retries(default_generator(), specs()[seed % specs().size()], seed, &t);
    EXPECT_LE(std::abs(t.rotation_deg), 6.0);
    EXPECT_LE(std::abs(t.shear), 0.08);
    EXPECT_GE(t.scale, 0.92);
    EXPECT_LE(t.scale, 1.08);
    EXPECT_TRUE(t.stroke_width == 2 || t.stroke_width == 3);
    EXPECT_LT(t.font_index, 3);
  }
}

TEST(Draft, PruneRemovesShortSpursOnly) {
  // a long bar with a 2-px spur and a 10-px branch
  Glyph g = glyph::combine(test_support::bar(10, 50, 80, 51), test_support::bar(30, 48, 31, 50));
  g = glyph::combine(g, test_support::bar(60, 40, 61, 50));
  const Glyph p = glyph::prune(g, kPruneLength);
  EXPECT_FALSE(p.ink(30, 48));
  EXPECT_TRUE(p.ink(60, 40));
  EXPECT_EQ(p.ink_count(), g.ink_count() - 2);
  EXPECT_TRUE(glyph::prune(test_support::bar(10, 10, 12, 11), kPruneLength).empty());
}

TEST(Draft, SkeletonLengthTracksSource) {
  // Thinning the re-stroked draft gives back roughly the source stroke length,
  // scaled by the affine jitter; it never balloons.
  for (std::size_t i = 0; i < 50; ++i) {
    DraftTrace t;
    const Glyph d = draft_with_retries(default_generator(), specs()[i], hash64({7, i}), &t);
    const Glyph& src = specs()[i].font_renders[static_cast<std::size_t>(t.font_index)];
    const double ratio = static_cast<double>(glyph::skeletonize(d).ink_count()) /
                         static_cast<double>(glyph::skeletonize(src).ink_count());
    EXPECT_GT(ratio, 0.75) << "spec " << i;
    EXPECT_LT(ratio, 1.25) << "spec " << i;
  }
}

TEST(Draft, EmptySpecRejected) {
  CharSpec bad{U'木', ids::parse_utf8("木"), {}};
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(fad_draft(bad, 1), Error);
}

TEST(Refine, ZeroParamsIsNormalize) {
  for (std::size_t i = 0; i < 10; ++i) {
    const Glyph d = draft_with_retries(default_generator(), specs()[i], i);
    EXPECT_EQ(sr_refine(d, specs()[i].ids, SrParams{}, 5), glyph::normalize(d));
  }
}

TEST(Refine, Deterministic) {
  const Glyph d = draft_with_retries(default_generator(), specs()[8], 3);
  const SrParams p = schedule(7, 8);
  EXPECT_EQ(sr_refine(d, specs()[8].ids, p, 42), sr_refine(d, specs()[8].ids, p, 42));
}

TEST(Refine, ContainmentAuditOverHundredRefinements) {
  int audited = 0;
  for (std::size_t n = 0; n < 100; ++n) {
    const auto& spec = specs()[n % specs().size()];
    const Glyph d = draft_with_retries(default_generator(), spec, hash64({n, 1}));
    const SrParams p = schedule(1 + static_cast<int>(n % 7), 8);
    std::vector<RegionTrace> trace;
    try {
      (void)sr_refine(d, spec.ids, p, hash64({n, 2}), &trace);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::ContainmentUnsatisfiable);
      continue;
    }
    ASSERT_EQ(trace.size(), spec.ids.leaf_count());
    for (const auto& r : trace) {
      EXPECT_GE(r.refined_fraction + 1e-12, p.containment_min * r.draft_fraction);
      EXPECT_GE(r.attempts, 1);
      EXPECT_LE(r.attempts, kRegionAttempts);
    }
    ++audited;
  }
  EXPECT_GE(audited, 90);
}

TEST(Refine, ImpossibleContainmentFails) {
  const Glyph d = draft_with_retries(default_generator(), specs()[2], 1);
  SrParams p;
  p.region_jitter = 5.0;
  p.warp_amplitude = 6.0;
  p.attrition_prob = 1.0;
  p.containment_min = 1.0;
  try {
    (void)sr_refine(d, specs()[2].ids, p, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ContainmentUnsatisfiable);
  }
}

TEST(SrParams, Validation) {
  EXPECT_NO_THROW(SrParams{}.validate());
  SrParams p;
  p.containment_min = 0.4;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.warp_amplitude = 6.5;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.region_jitter = 5.5;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.attrition_prob = -0.1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Schedule, AnchorThenRamp) {
  EXPECT_EQ(schedule(0, 8).attrition_prob, 0.0);
  EXPECT_EQ(schedule(0, 8).warp_amplitude, 0.0);
  const SrParams lo = schedule(1, 8), hi = schedule(7, 8);
  EXPECT_DOUBLE_EQ(lo.attrition_prob, 0.05);
  EXPECT_DOUBLE_EQ(lo.warp_amplitude, 1.0);
  EXPECT_DOUBLE_EQ(lo.region_jitter, 0.0);
  EXPECT_DOUBLE_EQ(lo.merge_radius, 0.0);
  EXPECT_DOUBLE_EQ(hi.attrition_prob, 0.30);
  EXPECT_DOUBLE_EQ(hi.warp_amplitude, 4.0);
  EXPECT_DOUBLE_EQ(hi.region_jitter, 3.0);
  EXPECT_DOUBLE_EQ(hi.merge_radius, 2.0);
  for (int i = 2; i < 8; ++i) EXPECT_GT(schedule(i, 8).warp_amplitude, schedule(i - 1, 8).warp_amplitude);
}

TEST(Schedule, JitterStaysWithinSpread) {
  const SrParams base = schedule(5, 8);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const SrParams j = jitter_params(base, s);
    EXPECT_NO_THROW(j.validate());
    EXPECT_GE(j.warp_amplitude, base.warp_amplitude * 0.8 - 1e-12);
    EXPECT_LE(j.warp_amplitude, base.warp_amplitude * 1.2 + 1e-12);
    EXPECT_EQ(j.containment_min, base.containment_min);
  }
}

TEST(Variants, SingleVariantIsAnchor) {
  const auto v = generate_variants(specs()[0], 1, 0);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].variant_index, 0);
  EXPECT_EQ(v[0].entry_id, entry_id(specs()[0].label, 0, 0));
}

TEST(Variants, ParallelEqualsSerial) {
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_EQ(png_bytes(generate_variants(specs()[i], 8, 3, 1)), png_bytes(generate_variants(specs()[i], 8, 3, 4)));
}

TEST(Variants, DiversityBeyondAnchor) {
  for (std::size_t i = 0; i < 10; ++i) {
    const auto v = generate_variants(specs()[i], 4, 0);
    double sum = 0;
    int pairs = 0;
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b, ++pairs) sum += metrics::l1(v[a].glyph, v[b].glyph);
    EXPECT_GT(sum / pairs, 0.0);
  }
}

TEST(Variants, SeedsAndIdsFollowTheirDefinition) {
  const auto v = generate_variants(specs()[3], 4, 77);
  for (const auto& e : v) {
    EXPECT_EQ(e.seed, variant_seed(77, e.label, e.variant_index));
    EXPECT_EQ(e.entry_id, entry_id(e.label, e.variant_index, 77));
    EXPECT_EQ(e.ids, ids::serialize_utf8(specs()[3].ids));
    EXPECT_FALSE(e.glyph.empty());
  }
}

TEST(Build, EmptyCharsetGivesEmptyDictionary) {
  const auto d = build_dictionary({}, 8, 0);
  EXPECT_TRUE(d.entries.empty());
  EXPECT_EQ(d.generation, 0);
}

TEST(Build, DuplicateLabelRejected) {
  std::vector<CharSpec> twice = {specs()[0], specs()[0]};
  try {
    (void)build_dictionary(twice, 2, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicateLabel);
  }
}

TEST(Build, RebuildIsByteIdenticalAndSeedSensitive) {
  const std::vector<CharSpec> cs(specs().begin(), specs().begin() + 8);
  const auto a = build_dictionary(cs, 4, 5, nullptr, 1);
  const auto b = build_dictionary(cs, 4, 5, nullptr, 3);
  const auto c = build_dictionary(cs, 4, 6, nullptr, 1);
  EXPECT_EQ(a.config_fingerprint, b.config_fingerprint);
  EXPECT_EQ(png_bytes(a.entries), png_bytes(b.entries));
  EXPECT_NE(a.config_fingerprint, c.config_fingerprint);
  EXPECT_NE(png_bytes(a.entries), png_bytes(c.entries));
}

TEST(Build, StructureAndReport) {
  const std::vector<CharSpec> cs(specs().begin(), specs().begin() + 12);
  BuildReport report;
  const auto d = build_dictionary(cs, 3, 0, &report, 2);
  EXPECT_EQ(d.entries.size(), 36u);
  EXPECT_EQ(report.entry_count, 36u);
  EXPECT_EQ(report.font_count, 3);
  EXPECT_EQ(report.variants_per_label, 3);
  EXPECT_TRUE(report.failures.empty());
  EXPECT_TRUE(std::is_sorted(d.charset.begin(), d.charset.end()));
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    ids.insert(d.entries[i].entry_id);
    if (i) {
      const auto& p = d.entries[i - 1];
      const auto& e = d.entries[i];
      EXPECT_TRUE(p.label < e.label || (p.label == e.label && p.variant_index < e.variant_index));
    }
  }
  EXPECT_EQ(ids.size(), d.entries.size());
}

TEST(Build, StoredTraceSatisfiesContainment) {
  const auto& d = test_support::small_dictionary();
  for (const auto& e : d.entries) {
    EXPECT_EQ(e.trace.sr, e.variant_index == 0 ? SrParams{} : e.trace.sr);
    for (const auto& r : e.trace.regions) EXPECT_GE(r.refined_fraction + 1e-12, e.trace.sr.containment_min * r.draft_fraction);
  }
}
