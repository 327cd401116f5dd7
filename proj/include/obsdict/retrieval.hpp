#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "obsdict/encoder.hpp"
#include "obsdict/glyph.hpp"
#include "obsdict/synthesis.hpp"

namespace obsdict::retrieval {

struct Index {
  encoder::EmbeddingMatrix embeddings;  // unit rows, manifest order
  std::vector<std::uint64_t> entry_ids;
  std::vector<char32_t> labels;
  int generation = 0;
  std::string encoder_id;
  std::uint64_t dictionary_fingerprint = 0;

  std::size_t count() const noexcept { return entry_ids.size(); }
  int dim() const noexcept { return static_cast<int>(embeddings.dim); }
};

/// Embeds every entry in manifest order. Throws EmptyDictionary, or
/// EmptyGlyph naming the entry.
Index build_index(const synthesis::Dictionary& d, const encoder::Encoder& enc, unsigned threads = 1);

/// Re-embeds only the listed rows of `previous`; every other row is copied.
/// `d` must list the same entry ids in the same order.
Index update_index(const Index& previous, const synthesis::Dictionary& d, const std::vector<std::size_t>& changed_rows,
                   const encoder::Encoder& enc, unsigned threads = 1);

struct Match {
  std::uint64_t entry_id = 0;
  char32_t label = 0;
  double similarity = 0.0;
  int rank = 0;
  friend bool operator==(const Match&, const Match&) = default;
};

/// Dot product accumulated in double, fixed order.
double similarity(std::span<const float> a, std::span<const float> b);

/// Exact top-k by cosine; ties by entry_id ascending; k clamped to count.
/// Throws DimensionMismatch, InvalidArgument for k < 1.
std::vector<Match> query_topk(const Index& ix, std::span<const float> q, int k);

enum class VoteRule { Sum, Count };

struct LabelScore {
  char32_t label = 0;
  double score = 0.0;
  double best_similarity = 0.0;
  std::vector<std::uint64_t> supporting_entry_ids;  // in match rank order
  friend bool operator==(const LabelScore&, const LabelScore&) = default;
};

/// Groups matches by label; order (score desc, best_similarity desc, codepoint asc).
std::vector<LabelScore> vote_labels(const std::vector<Match>& matches, VoteRule rule = VoteRule::Sum);

struct RetrievalResult {
  std::uint64_t query_id = 0;
  std::vector<Match> matches;
  std::vector<LabelScore> label_ranking;
  int index_generation = 0;
};

inline constexpr int kDefaultK = 50;

std::uint64_t query_id(std::span<const std::uint8_t> image_bytes, std::uint64_t salt);

/// normalize -> embed -> query_topk -> vote_labels. Throws EmptyImage.
RetrievalResult decipher(const Index& ix, const encoder::Encoder& enc, const GrayImage& image, int k,
                         std::uint64_t query_id = 0, VoteRule rule = VoteRule::Sum);
/// Same from a glyph (re-normalized on entry, as files would be).
RetrievalResult decipher(const Index& ix, const encoder::Encoder& enc, const Glyph& g, int k,
                         std::uint64_t query_id = 0, VoteRule rule = VoteRule::Sum);
/// Decodes the bytes first; the query id is derived from them and `salt`.
RetrievalResult decipher_bytes(const Index& ix, const encoder::Encoder& enc, std::span<const std::uint8_t> bytes,
                               int k, std::uint64_t salt = 0, VoteRule rule = VoteRule::Sum);

/// `<dir>/embeddings.obse` + `<dir>/index_meta.json`.
void save_index(const std::filesystem::path& dir, const Index& ix);
/// Loads the store and checks it against the dictionary it indexes. Throws
/// Format on any disagreement.
Index load_index(const std::filesystem::path& dir, const synthesis::Dictionary& d);

}  // namespace obsdict::retrieval
