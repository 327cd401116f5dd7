#pragma once

// On-disk inputs: pre-rendered font trees, real or pseudo-ancient exemplar
// trees, and query manifests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "obsdict/glyph.hpp"
#include "obsdict/ids.hpp"
#include "obsdict/synthesis.hpp"

namespace obsdict::corpus {

struct LabeledImage {
  std::string id;  // path relative to the set root
  char32_t label = 0;
  GrayImage image;
  std::uint64_t digest = 0;  // FNV-1a of the file bytes
};

/// Subdirectory names of `fonts_dir`, sorted.
std::vector<std::string> list_fonts(const std::filesystem::path& fonts_dir);

/// One CharSpec per table character that has at least one render under
/// `fonts/<font>/<codepoint_hex>.png`; renders are normalized on ingestion.
/// Characters with no render are skipped and reported in `warnings`.
std::vector<synthesis::CharSpec> load_charset(const ids::Table& table, const std::filesystem::path& fonts_dir,
                                              int size = kGlyphSize, std::vector<std::string>* warnings = nullptr);

/// TSV `image_relpath\ttruth_codepoint_hex`, paths relative to the manifest.
std::vector<LabeledImage> load_manifest(const std::filesystem::path& manifest);
/// `<root>/<codepoint_hex>/<any>.{png,pgm}`, sorted by (label, file name).
std::vector<LabeledImage> load_tree(const std::filesystem::path& root);
/// A manifest file, a directory holding manifest.tsv, or an exemplar tree.
std::vector<LabeledImage> load_labeled(const std::filesystem::path& path);

/// Writes images under `root` plus `root/manifest.tsv`.
void write_manifest(const std::filesystem::path& root, const std::vector<LabeledImage>& items);
/// Writes `<root>/<codepoint_hex>/<basename of id>` for each item.
void write_tree(const std::filesystem::path& root, const std::vector<LabeledImage>& items);

}  // namespace obsdict::corpus
