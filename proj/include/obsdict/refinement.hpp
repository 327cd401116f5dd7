#pragma once

// Iterative dictionary refinement: keep entries that real (or pseudo-ancient)
// exemplars retrieve, regenerate the rest, and stop early on a validation set
// of held-out labels. Test inputs never enter the loop.

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "obsdict/corpus.hpp"
#include "obsdict/encoder.hpp"
#include "obsdict/metrics.hpp"
#include "obsdict/retrieval.hpp"
#include "obsdict/synthesis.hpp"

namespace obsdict::refinement {

struct Support {
  bool supported = false;
  bool supervised = false;  // the label has own-label exemplars
  std::vector<std::string> evidence;  // exemplar ids that retrieved the entry (supervised)
  double score = -1.0;  // best cosine to any exemplar (unsupervised); -1 without exemplars
};

struct SupportMap {
  std::vector<std::uint64_t> entry_ids;  // index order
  std::vector<Support> entries;
  double median = -1.0;  // unsupervised threshold
  std::vector<std::string> skipped;  // exemplars that could not be normalized

  std::size_t supported_count() const;
};

/// Supervised for labels with exemplars (top-k own-label retrieval), median
/// rule on best cosine to any exemplar otherwise.
SupportMap compute_support(const retrieval::Index& ix, const std::vector<corpus::LabeledImage>& exemplars,
                           const encoder::Encoder& enc, int k = retrieval::kDefaultK, unsigned threads = 1);

struct StepResult {
  synthesis::Dictionary dictionary;
  std::vector<std::size_t> changed_rows;
  std::vector<std::string> failures;  // regeneration errors; prior entries kept
};

std::uint64_t regeneration_seed(std::uint64_t global_seed, char32_t label, int variant_index, int iteration);

/// Copies supported entries verbatim and regenerates the others with
/// iteration-specific seeds and schedule params jittered by +-20%.
StepResult refine_step(const synthesis::Dictionary& d, const SupportMap& s,
                       const std::vector<synthesis::CharSpec>& charset, std::uint64_t global_seed, int iteration,
                       unsigned threads = 1, const synthesis::Generator& gen = synthesis::default_generator());

struct IterationRecord {
  int iteration = 0;
  int generation = 0;
  std::size_t supported = 0;
  std::size_t regenerated = 0;
  std::vector<std::string> failures;
  metrics::TopNCurve validation;
  std::string stop_reason;  // empty unless the loop ended here
};

struct RefinementTrace {
  std::vector<IterationRecord> iterations;  // iteration 0 is the input dictionary
  int best_generation = 0;
  std::string stop_reason;

  std::string to_json() const;
};

struct RefineConfig {
  int iterations = 20;
  int patience = 3;
  int support_k = retrieval::kDefaultK;
  int eval_k = 0;  // 0 means 100 * K
  std::uint64_t global_seed = 0;
  unsigned threads = 1;
  /// Digests and labels of the test set; any overlap with the inputs aborts.
  std::set<std::uint64_t> test_digests;
  std::set<char32_t> test_labels;
};

/// Strictly better on (Top-100, Top-50, Top-20, Top-10, Top-1), compared lexicographically.
bool improves(const metrics::TopNCurve& candidate, const metrics::TopNCurve& incumbent);

struct RefineResult {
  synthesis::Dictionary dictionary;  // best generation observed
  retrieval::Index index;
  RefinementTrace trace;
};

using SnapshotFn = std::function<void(const synthesis::Dictionary&, const std::vector<std::size_t>& changed_rows)>;

/// Throws TestLeakage when exemplars or validation touch the test set, and
/// InvalidArgument when validation labels overlap support labels.
RefineResult refine_loop(const synthesis::Dictionary& d, const std::vector<synthesis::CharSpec>& charset,
                         const std::vector<corpus::LabeledImage>& exemplars,
                         const std::vector<corpus::LabeledImage>& validation, const RefineConfig& config,
                         const encoder::Encoder& enc = encoder::default_encoder(),
                         const synthesis::Generator& gen = synthesis::default_generator(),
                         const SnapshotFn& snapshot = {});

}  // namespace obsdict::refinement
