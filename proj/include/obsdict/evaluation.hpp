#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "obsdict/corpus.hpp"
#include "obsdict/degradation.hpp"
#include "obsdict/encoder.hpp"
#include "obsdict/metrics.hpp"
#include "obsdict/retrieval.hpp"
#include "obsdict/synthesis.hpp"

namespace obsdict::evaluation {

struct Split {
  std::vector<char32_t> train_labels;  // sorted
  std::vector<char32_t> test_labels;   // sorted
  std::uint64_t seed = 0;
  double ratio = 0.0;
};

/// Sort, Fisher-Yates with a splitmix64 stream, first ceil(ratio * n) to train.
/// Throws EmptyCharset, DuplicateLabel, InvalidArgument for ratio outside (0, 1).
Split split_characters(std::vector<char32_t> charset, double ratio, std::uint64_t seed);

/// Size of the train side: ceil(ratio * n), robust to representation error.
std::size_t train_count(std::size_t n, double ratio);

/// One entry per label built from plain modern renders, for the DR baseline.
synthesis::Dictionary modern_dictionary(const std::vector<std::pair<char32_t, Glyph>>& renders);

struct EvalConfig {
  int k = 0;  // entry matches feeding the vote; 0 means 100 * K
  retrieval::VoteRule rule = retrieval::VoteRule::Sum;
  std::uint64_t split_seed = 7;
  double ratio = 0.9;
  std::uint64_t suite_seed = 0;
  unsigned threads = 1;
};

struct Condition {
  std::string name;  // "clean" or "<kind>-<severity>"
  std::optional<degradation::DegradationSpec> spec;  // seed unused; per-query seeds derive from suite_seed
  metrics::TopNCurve curve;
  std::array<metrics::Interval, metrics::kTopN.size()> ci{};
  std::vector<int> truth_ranks;
};

struct MethodResult {
  std::string name;  // "dictionary" or "dr"
  std::uint64_t fingerprint = 0;
  std::size_t entry_count = 0;
  int generation = 0;
  std::vector<Condition> conditions;
};

struct Failure {
  std::string method;
  std::string condition;
  std::string query;
  std::uint64_t query_id = 0;
  std::string error;
};

struct EvalReport {
  EvalConfig config;
  int k_used = 0;
  int variants_per_label = 0;
  std::string encoder_id;
  std::size_t query_count = 0;
  std::size_t test_label_count = 0;
  std::vector<MethodResult> methods;
  std::vector<Failure> failures;

  const MethodResult* method(const std::string& name) const;
  std::string to_json() const;
  std::string to_tsv() const;
  std::string to_svg() const;
};

/// Queries whose truth label lies in the split's test side.
std::vector<corpus::LabeledImage> test_queries(const std::vector<corpus::LabeledImage>& all, const Split& split);

/// Deciphers every query against the dictionary and, when `dr` is given,
/// against the direct-retrieval index. Per-query failures are recorded.
EvalReport run_benchmark(const synthesis::Dictionary& d, const retrieval::Index& ix, const retrieval::Index* dr,
                         const std::vector<corpus::LabeledImage>& queries, const encoder::Encoder& enc,
                         const EvalConfig& config, std::size_t test_label_count = 0);

/// The 12 standard conditions (4 kinds x 3 severities), kind-major.
std::vector<degradation::DegradationSpec> standard_suite();

/// Clean row followed by one row per spec, dictionary method only.
EvalReport run_degradation_suite(const synthesis::Dictionary& d, const retrieval::Index& ix,
                                 const std::vector<corpus::LabeledImage>& queries,
                                 const std::vector<degradation::DegradationSpec>& specs, const encoder::Encoder& enc,
                                 const EvalConfig& config, std::size_t test_label_count = 0);

/// Per-query truth ranks of label rankings for glyphs already normalized.
std::vector<int> rank_glyphs(const retrieval::Index& ix, const encoder::Encoder& enc, const std::vector<Glyph>& glyphs,
                             const std::vector<char32_t>& truths, int k, retrieval::VoteRule rule, unsigned threads);

}  // namespace obsdict::evaluation
