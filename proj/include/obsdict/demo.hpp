#pragma once

// Bundled desk-scale benchmark. No CJK fonts ship with the repo, so the
// "modern renders" are drawn procedurally from each character's IDS: every
// component gets a fixed stroke pattern and the layout boxes place it. The
// pseudo-ancient queries come from the synthesis pipeline under a separate
// seed domain, followed by an extra strong refinement pass and a light
// degradation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "obsdict/corpus.hpp"
#include "obsdict/glyph.hpp"
#include "obsdict/ids.hpp"
#include "obsdict/synthesis.hpp"

namespace obsdict::demo {

struct FontStyle {
  std::string name;
  double stroke_width;  // px at 96
  double horizontal_scale;  // width factor for near-horizontal strokes
  double wobble;  // endpoint jitter as a fraction of the component box
  double split_ratio;
};

/// The three procedural faces: "song", "hei", "kai".
const std::vector<FontStyle>& font_styles();

GrayImage render_modern(const ids::IdsTree& tree, const FontStyle& style, int size = kGlyphSize);

/// Writes `<fonts_dir>/<font>/<codepoint_hex>.png` for every table row.
void write_font_tree(const ids::Table& table, const std::filesystem::path& fonts_dir, int size = kGlyphSize);

/// The extra refinement pass applied on top of a scheduled variant.
synthesis::SrParams strong_params();

/// One pseudo-ancient exemplar. Retries derived seeds when refinement cannot
/// satisfy containment.
Glyph pseudo_ancient(const synthesis::CharSpec& spec, std::uint64_t seed);

/// `per_label` exemplars for each spec, ids `<hex>/<j>.png`, seeds drawn from
/// a domain disjoint from dictionary seeds.
std::vector<corpus::LabeledImage> make_exemplars(const std::vector<synthesis::CharSpec>& charset, int per_label,
                                                 std::uint64_t seed, unsigned threads = 1);

struct BenchmarkLayout {
  double ratio = 0.9;
  std::uint64_t split_seed = 7;
  double validation_ratio = 0.1;  // share of train labels held out for early stopping
  int per_label = 8;
  std::uint64_t query_seed = 2024;
};

struct BenchmarkSummary {
  std::size_t labels = 0;
  std::size_t queries = 0;
  std::size_t test_labels = 0;
  std::size_t exemplar_labels = 0;
  std::size_t validation_labels = 0;
};

/// Writes the complete demo tree under `root`:
///   ids.tsv, fonts/<font>/<hex>.png,
///   queries/manifest.tsv (every label; eval selects the test split),
///   exemplars/<hex>/*.png (train labels minus validation),
///   validation/<hex>/*.png (held-out train labels).
BenchmarkSummary write_benchmark(const std::filesystem::path& ids_table, const std::filesystem::path& root,
                                 const BenchmarkLayout& layout = {}, unsigned threads = 1);

/// Splits train labels into (support, validation) label sets, deterministic in seed.
void split_validation(const std::vector<char32_t>& train, double validation_ratio, std::uint64_t seed,
                      std::vector<char32_t>& support, std::vector<char32_t>& validation);

}  // namespace obsdict::demo
