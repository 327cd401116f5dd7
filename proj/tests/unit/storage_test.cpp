#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "obsdict/corpus.hpp"
#include "obsdict/demo.hpp"
#include "obsdict/dictionary_io.hpp"
#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"
#include "test_support.hpp"

using namespace obsdict;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST(DictionaryIo, Hex) {
  EXPECT_EQ(dictionary_io::hex16(0xabcULL), "0000000000000abc");
  EXPECT_EQ(dictionary_io::parse_hex64("0000000000000abc"), 0xabcULL);
  EXPECT_THROW(dictionary_io::parse_hex64("xyz"), Error);
}

TEST(DictionaryIo, SaveLoadRoundTrip) {
  test_support::TempDir tmp("dict_io");
  const auto& d = test_support::small_dictionary();
  dictionary_io::save(tmp.path(), d);
  const auto back = dictionary_io::load(tmp.path());
  ASSERT_EQ(back.entries.size(), d.entries.size());
  EXPECT_EQ(back.config_fingerprint, d.config_fingerprint);
  EXPECT_EQ(back.charset, d.charset);
  EXPECT_EQ(back.global_seed, d.global_seed);
  EXPECT_EQ(back.variants_per_label, 4);
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].entry_id, d.entries[i].entry_id);
    EXPECT_EQ(back.entries[i].glyph, d.entries[i].glyph);
    EXPECT_EQ(back.entries[i].seed, d.entries[i].seed);
    EXPECT_EQ(back.entries[i].ids, d.entries[i].ids);
    EXPECT_EQ(back.entries[i].trace.draft.font_index, d.entries[i].trace.draft.font_index);
    EXPECT_EQ(back.entries[i].trace.regions.size(), d.entries[i].trace.regions.size());
  }
  const auto first = dictionary_io::hex16(d.entries[0].entry_id);
  const auto img = image_io::read(tmp.path() / "images" / (first + ".png"));
  EXPECT_EQ(img.width, 96);

  std::istringstream manifest(slurp(tmp.path() / "manifest.tsv"));
  std::string line;
  int rows = 0;
  while (std::getline(manifest, line)) {
    if (line.empty() || line[0] == '#') continue;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(d.entries.size()));
}

TEST(DictionaryIo, SavingTwiceIsByteIdentical) {
  test_support::TempDir a("dict_io_a"), b("dict_io_b");
  dictionary_io::save(a.path(), test_support::small_dictionary());
  dictionary_io::save(b.path(), test_support::small_dictionary());
  for (const char* f : {"manifest.tsv", "config.json", "stage_trace.jsonl"})
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
}

TEST(DictionaryIo, TamperedConfigRejected) {
  test_support::TempDir tmp("dict_io_tamper");
  dictionary_io::save(tmp.path(), test_support::small_dictionary());
  auto cfg = nlohmann::json::parse(slurp(tmp.path() / "config.json"));
  cfg["global_seed"] = dictionary_io::hex16(12345);
  spit(tmp.path() / "config.json", cfg.dump());
  try {
    (void)dictionary_io::load(tmp.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Format);
  }
  EXPECT_THROW(dictionary_io::load(tmp.path() / "missing"), Error);
}

TEST(DictionaryIo, UnchangedImagesAreHardLinked) {
  test_support::TempDir a("dict_link_a"), b("dict_link_b");
  const auto& d = test_support::small_dictionary();
  dictionary_io::save(a.path(), d);
  auto next = d;
  next.generation = 1;
  next.entries[0].glyph = d.entries[5].glyph;
  std::set<std::uint64_t> unchanged;
  for (std::size_t i = 1; i < d.entries.size(); ++i) unchanged.insert(d.entries[i].entry_id);
  dictionary_io::WriteOptions opts;
  const fs::path from = a.path();
  opts.link_from = &from;
  opts.unchanged = &unchanged;
  dictionary_io::save(b.path(), next, opts);
  auto img = [](const fs::path& dir, std::uint64_t id) { return dir / "images" / (dictionary_io::hex16(id) + ".png"); };
  EXPECT_TRUE(fs::equivalent(img(a.path(), d.entries[1].entry_id), img(b.path(), d.entries[1].entry_id)));
  EXPECT_FALSE(fs::equivalent(img(a.path(), d.entries[0].entry_id), img(b.path(), d.entries[0].entry_id)));
  EXPECT_GE(fs::hard_link_count(img(b.path(), d.entries[1].entry_id)), 2u);
  const auto back = dictionary_io::load(b.path());
  EXPECT_EQ(back.generation, 1);
  EXPECT_EQ(back.entries[0].glyph, d.entries[5].glyph);
}

TEST(DictionaryIo, SourcesRoundTrip) {
  test_support::TempDir tmp("dict_sources");
  const auto cs = test_support::small_charset(24);
  const auto& d = test_support::small_dictionary();
  dictionary_io::save(tmp.path(), d);
  dictionary_io::save_sources(tmp.path(), cs);
  const auto back = dictionary_io::load_sources(tmp.path(), d);
  ASSERT_EQ(back.size(), cs.size());
  for (const auto& s : back) {
    const auto it = std::find_if(cs.begin(), cs.end(), [&](const auto& c) { return c.label == s.label; });
    ASSERT_NE(it, cs.end());
    EXPECT_EQ(s.ids, it->ids);
    EXPECT_EQ(s.font_renders, it->font_renders);
  }
  EXPECT_EQ(synthesis::charset_digest(back), d.charset_digest);
  const auto modern = dictionary_io::modern_renders(back);
  EXPECT_TRUE(std::is_sorted(modern.begin(), modern.end(), [](const auto& a, const auto& b) { return a.first < b.first; }));
  // a missing font render changes the digest
  fs::remove(tmp.path() / "sources" / utf8::codepoint_hex(cs[0].label) / "2.png");
  EXPECT_THROW(dictionary_io::load_sources(tmp.path(), d), Error);
}

TEST(Corpus, ManifestAndTreeRoundTrip) {
  test_support::TempDir tmp("corpus");
  const auto cs = test_support::small_charset(6);
  const auto items = demo::make_exemplars(cs, 2, 5, 2);
  ASSERT_EQ(items.size(), 12u);
  corpus::write_manifest(tmp.path() / "m", items);
  corpus::write_tree(tmp.path() / "t", items);
  const auto m = corpus::load_labeled(tmp.path() / "m");
  const auto m2 = corpus::load_labeled(tmp.path() / "m" / "manifest.tsv");
  const auto t = corpus::load_labeled(tmp.path() / "t");
  ASSERT_EQ(m.size(), 12u);
  ASSERT_EQ(t.size(), 12u);
  EXPECT_EQ(m.size(), m2.size());
  std::multiset<std::uint64_t> digests_in, digests_m, digests_t;
  for (const auto& x : items) digests_in.insert(x.digest);
  for (const auto& x : m) digests_m.insert(x.digest);
  for (const auto& x : t) digests_t.insert(x.digest);
  EXPECT_EQ(digests_in, digests_m);
  EXPECT_EQ(digests_in, digests_t);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t[i - 1].label, t[i].label);
}

TEST(Corpus, BadManifestRejected) {
  test_support::TempDir tmp("corpus_bad");
  spit(tmp.path() / "manifest.tsv", "only-one-field\n");
  EXPECT_THROW(corpus::load_manifest(tmp.path() / "manifest.tsv"), Error);
  spit(tmp.path() / "manifest.tsv", "missing.png\t6728\n");
  EXPECT_THROW(corpus::load_manifest(tmp.path() / "manifest.tsv"), Error);
  EXPECT_THROW(corpus::load_tree(tmp.path() / "nope"), Error);
}

TEST(Corpus, FontTreeIngestion) {
  test_support::TempDir tmp("fonts");
  const auto table = ids::parse_table("木\t木\n林\t⿰木木\tgrove\n森\t⿱木⿰木木\n");
  demo::write_font_tree(table, tmp.path());
  EXPECT_EQ(corpus::list_fonts(tmp.path()), (std::vector<std::string>{"hei", "kai", "song"}));
  fs::remove(tmp.path() / "hei" / (utf8::codepoint_hex(U'森') + ".png"));
  fs::remove(tmp.path() / "kai" / (utf8::codepoint_hex(U'森') + ".png"));
  fs::remove(tmp.path() / "song" / (utf8::codepoint_hex(U'森') + ".png"));
  std::vector<std::string> warnings;
  const auto cs = corpus::load_charset(table, tmp.path(), kGlyphSize, &warnings);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].label, U'木');
  EXPECT_EQ(cs[1].font_renders.size(), 3u);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Demo, TableAndRenders) {
  const auto& t = test_support::demo_table();
  EXPECT_EQ(t.entries.size(), 200u);
  EXPECT_TRUE(t.warnings.empty());
  std::set<char32_t> seen;
  for (const auto& e : t.entries) {
    EXPECT_TRUE(seen.insert(e.character).second);
    const auto tree = ids::parse_utf8(e.ids);
    for (const auto& style : demo::font_styles()) EXPECT_NO_THROW(glyph::normalize(demo::render_modern(tree, style)));
  }
}

TEST(Demo, ExemplarsDeterministicAndSeedSeparated) {
  const auto cs = test_support::small_charset(4);
  const auto a = demo::make_exemplars(cs, 3, 1, 1);
  const auto b = demo::make_exemplars(cs, 3, 1, 3);
  const auto c = demo::make_exemplars(cs, 3, 2, 1);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].id, b[i].id);
  }
  EXPECT_NE(a[0].image, c[0].image);
  EXPECT_EQ(a[0].id, utf8::codepoint_hex(cs[0].label) + "/0.png");
}

TEST(Demo, ValidationSplitIsDisjoint) {
  std::vector<char32_t> train;
  for (char32_t c = 0x4e00; c < 0x4e00 + 180; ++c) train.push_back(c);
  std::vector<char32_t> support, validation;
  demo::split_validation(train, 0.1, 7, support, validation);
  EXPECT_EQ(validation.size(), 18u);
  EXPECT_EQ(support.size(), 162u);
  std::set<char32_t> s(support.begin(), support.end());
  for (char32_t v : validation) EXPECT_FALSE(s.count(v));
}
