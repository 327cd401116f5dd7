#pragma once

// Dictionary directory layout:
//   manifest.tsv        entry_id_hex, label_codepoint_hex, variant_index,
//                       seed_hex, ids_string, image_relpath, generation
//   images/<entry_id_hex>.png
//   config.json         K, global seed, schedule, fingerprints, generator id
//   stage_trace.jsonl   one draft/SR record per entry

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "obsdict/synthesis.hpp"

namespace obsdict::dictionary_io {

std::string hex16(std::uint64_t v);
std::uint64_t parse_hex64(const std::string& s);

struct WriteOptions {
  /// Hard-link images of these entries from `link_from` instead of re-encoding.
  const std::filesystem::path* link_from = nullptr;
  const std::set<std::uint64_t>* unchanged = nullptr;
  const synthesis::BuildReport* report = nullptr;
};

void save(const std::filesystem::path& dir, const synthesis::Dictionary& d, const WriteOptions& opts = {});

/// Reads manifest, images and config; re-derives the config fingerprint from
/// the stored parameters and rejects a directory whose fingerprint disagrees.
synthesis::Dictionary load(const std::filesystem::path& dir);

}  // namespace obsdict::dictionary_io

namespace obsdict::dictionary_io {

/// Normalized font renders kept beside the dictionary as
/// `sources/<codepoint_hex>/<font_index>.png`, so refinement can regenerate
/// entries and the direct-retrieval baseline can use the first font.
void save_sources(const std::filesystem::path& dir, const std::vector<synthesis::CharSpec>& charset);
/// Rebuilds the charset from sources/ and the manifest's IDS column; throws
/// Format when its digest disagrees with config.json.
std::vector<synthesis::CharSpec> load_sources(const std::filesystem::path& dir, const synthesis::Dictionary& d);
/// First-font render per label, sorted by label.
std::vector<std::pair<char32_t, Glyph>> modern_renders(const std::vector<synthesis::CharSpec>& charset);

}  // namespace obsdict::dictionary_io
