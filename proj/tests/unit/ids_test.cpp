#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "obsdict/error.hpp"
#include "obsdict/ids.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"
#include "test_support.hpp"

using namespace obsdict;
using namespace obsdict::ids;

namespace {

Errc parse_error(std::u32string_view s) {
  try {
    (void)parse(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::Format;
}

}  // namespace

TEST(IdsOperator, ArityAndKind) {
  for (char32_t c = kFirstOperator; c <= kLastOperator; ++c) {
    const auto o = op(c);
    EXPECT_EQ(o.arity, (c == 0x2FF2 || c == 0x2FF3) ? 3 : 2);
  }
  EXPECT_EQ(op(U'⿰').layout_kind, LayoutKind::Horizontal);
  EXPECT_EQ(op(U'⿴').layout_kind, LayoutKind::SurroundFull);
  EXPECT_EQ(op(U'⿻').layout_kind, LayoutKind::Overlaid);
  EXPECT_THROW(op(U'木'), Error);
}

TEST(IdsParse, Examples) {
  const auto t = parse(U"⿰木木");
  EXPECT_EQ(t, IdsTree::internal(op(U'⿰'), {IdsTree::leaf(U'木'), IdsTree::leaf(U'木')}));
  const auto kids = t.root().children();
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_TRUE(kids[0].is_leaf());
  EXPECT_EQ(kids[1].component(), U'木');

  const auto t3 = parse(U"⿳亠口口");
  EXPECT_EQ(t3, IdsTree::internal(op(U'⿳'), {IdsTree::leaf(U'亠'), IdsTree::leaf(U'口'), IdsTree::leaf(U'口')}));
  EXPECT_EQ(t3.leaf_count(), 3u);

  EXPECT_EQ(parse_error(U"⿰木"), Errc::TruncatedSequence);
  EXPECT_EQ(parse_error(U""), Errc::TruncatedSequence);
  EXPECT_EQ(parse_error(U"⿰木木木"), Errc::TrailingInput);
  EXPECT_EQ(parse_error(U"木木"), Errc::TrailingInput);
  EXPECT_EQ(parse_error(U"⿰木⿼"), Errc::UnknownOperator);

  const auto bare = parse(U"木");
  EXPECT_TRUE(bare.is_leaf());
  EXPECT_EQ(bare.root().component(), U'木');
}

TEST(IdsParse, NestedChildrenNavigation) {
  const auto t = parse_utf8("⿱口⿰口口");
  const auto kids = t.root().children();
  ASSERT_EQ(kids.size(), 2u);
  EXPECT_TRUE(kids[0].is_leaf());
  EXPECT_FALSE(kids[1].is_leaf());
  EXPECT_EQ(kids[1].op().codepoint, U'⿰');
  EXPECT_EQ(kids[1].children().size(), 2u);
  EXPECT_EQ(t.depth(), 3u);
  EXPECT_EQ(t.leaves(), U"口口口");
}

TEST(IdsParse, DeepInputDoesNotRecurse) {
  std::u32string s(200000, U'⿻');
  s += std::u32string(200001, U'木');
  const auto t = parse(s);
  EXPECT_EQ(t.leaf_count(), 200001u);
  EXPECT_EQ(serialize(t), s);
}

TEST(IdsSerialize, Examples) {
  EXPECT_EQ(serialize_utf8(IdsTree::leaf(U'木')), "木");
  EXPECT_EQ(serialize_utf8(IdsTree::internal(op(U'⿱'), {IdsTree::leaf(U'日'), IdsTree::leaf(U'月')})), "⿱日月");
}

TEST(IdsSerialize, BundledCorpusRoundTrip) {
  const auto table = load_table(test_support::data_dir() / "demo_ids.tsv");
  ASSERT_EQ(table.entries.size(), 200u);
  EXPECT_TRUE(table.warnings.empty());
  for (const auto& e : table.entries) {
    EXPECT_EQ(serialize_utf8(parse_utf8(e.ids)), e.ids) << utf8::encode(e.character);
  }
}

TEST(IdsParse, FuzzOnlyDeclaredErrors) {
  SplitMix64 rng(7);
  const char32_t interesting[] = {0x2FF0, 0x2FF1, 0x2FF2, 0x2FF3, 0x2FF4, 0x2FFB, 0x2FFC, 0x2FFF, 0x31EF, U'木', U'口'};
  for (int i = 0; i < 20000; ++i) {
    std::u32string s;
    const auto len = rng.below(9);
    for (std::uint64_t k = 0; k < len; ++k) {
      if (rng.bernoulli(0.6)) {
        s.push_back(interesting[rng.below(std::size(interesting))]);
      } else {
        char32_t c;
        do c = static_cast<char32_t>(rng.below(0x110000));
        while (!utf8::is_scalar(c));
        s.push_back(c);
      }
    }
    try {
      const auto t = parse(s);
      EXPECT_EQ(serialize(t), s);
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::TruncatedSequence || e.code() == Errc::TrailingInput ||
                  e.code() == Errc::UnknownOperator);
    }
  }
}

TEST(IdsTable, SkipsNestedAndMalformedRows) {
  const auto t = parse_table(
      "# comment\n"
      "林\t⿰木木\tgrove\n"
      "X\t⿰(abc)木\n"
      "明\t⿰日\n"
      "林\t⿱木木\n"
      "森\t⿱木林\r\n");
  ASSERT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.entries[0].ids, "⿰木木");
  EXPECT_EQ(t.entries[0].gloss, "grove");
  EXPECT_EQ(t.entries[1].ids, "⿱木林");
  EXPECT_EQ(t.warnings.size(), 2u);
}

TEST(IdsLayout, Examples) {
  const Rect canvas{0, 0, 96, 96};
  LayoutParams p;
  p.three_way_jitter = 0.0;
  auto r = layout(parse(U"⿰木木"), canvas, p);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].box, (Rect{0, 0, 48, 96}));
  EXPECT_EQ(r[1].box, (Rect{48, 0, 96, 96}));

  r = layout(parse(U"⿴囗玉"), canvas, p);
  EXPECT_EQ(r[0].box, canvas);
  EXPECT_EQ(r[1].box, (Rect{24, 24, 72, 72}));

  r = layout(parse(U"⿳亠口口"), canvas, p);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].box, (Rect{0, 0, 96, 32}));
  EXPECT_EQ(r[1].box, (Rect{0, 32, 96, 64}));
  EXPECT_EQ(r[2].box, (Rect{0, 64, 96, 96}));
}

TEST(IdsLayout, PartialSurroundsInsetClosedSidesOnly) {
  const Rect c{0, 0, 96, 96};
  EXPECT_EQ(layout(parse(U"⿵门口"), c)[1].box, (Rect{24, 24, 72, 96}));
  EXPECT_EQ(layout(parse(U"⿶凵乂"), c)[1].box, (Rect{24, 0, 72, 72}));
  EXPECT_EQ(layout(parse(U"⿷匚乂"), c)[1].box, (Rect{24, 24, 96, 72}));
  EXPECT_EQ(layout(parse(U"⿸广木"), c)[1].box, (Rect{24, 24, 96, 96}));
  EXPECT_EQ(layout(parse(U"⿹勹口"), c)[1].box, (Rect{0, 24, 72, 96}));
  EXPECT_EQ(layout(parse(U"⿺辶力"), c)[1].box, (Rect{24, 0, 96, 72}));
  const auto o = layout(parse(U"⿻木一"), c);
  EXPECT_EQ(o[0].box, c);
  EXPECT_EQ(o[1].box, c);
}

TEST(IdsLayout, JitterIsSymmetricAndSeeded) {
  const Rect c{0, 0, 96, 96};
  LayoutParams p;
  p.jitter_seed = 99;
  const auto a = layout(parse(U"⿲木木木"), c, p);
  const auto b = layout(parse(U"⿲木木木"), c, p);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(a[0].box.width(), a[2].box.width(), 1);
  EXPECT_GE(a[1].box.width(), static_cast<int>(96 * (1.0 / 3 - 0.12)) - 1);
}

TEST(IdsLayout, ErrorsAndPreconditions) {
  LayoutParams p;
  p.split_ratio = 0.8;
  EXPECT_THROW(layout(parse(U"⿰木木"), {0, 0, 96, 96}, p), Error);
  try {
    (void)layout(parse(U"⿰⿰⿰⿰木木木木木"), {0, 0, 6, 6});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateBox);
  }
}

TEST(IdsLayout, PropertiesOverCorpus) {
  const auto table = load_table(test_support::data_dir() / "demo_ids.tsv");
  const Rect canvas{0, 0, 96, 96};
  for (const auto& e : table.entries) {
    const auto t = parse_utf8(e.ids);
    LayoutParams p;
    p.jitter_seed = e.character;
    const auto regions = layout(t, canvas, p);
    ASSERT_EQ(regions.size(), t.leaf_count());
    for (std::size_t i = 0; i < regions.size(); ++i) {
      EXPECT_EQ(regions[i].leaf_index, static_cast<int>(i));
      EXPECT_TRUE(canvas.contains(regions[i].box));
      EXPECT_FALSE(regions[i].box.empty());
    }
    EXPECT_EQ(regions, layout(t, canvas, p));
  }
}
