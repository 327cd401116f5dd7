#pragma once

// Two-stage variant generator: a drafting stage that turns a multi-font
// modern render into a thin incised-style draft, then a structure-guided
// refinement stage that perturbs strokes region by region while keeping each
// IDS component inside its layout box.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "obsdict/error.hpp"
#include "obsdict/glyph.hpp"
#include "obsdict/ids.hpp"

namespace obsdict::synthesis {

struct CharSpec {
  char32_t label = 0;
  ids::IdsTree ids;
  std::vector<Glyph> font_renders;

  /// Throws InvalidArgument when font_renders is empty.
  void validate() const;
};

struct SrParams {
  double attrition_prob = 0.0;
  double merge_radius = 0.0;
  double warp_amplitude = 0.0;
  double region_jitter = 0.0;
  double containment_min = 0.7;

  /// containment_min >= 0.5, warp_amplitude <= 6, region_jitter <= 5, all
  /// values non-negative, attrition_prob <= 1.
  void validate() const;
  friend bool operator==(const SrParams&, const SrParams&) = default;
};

struct DraftTrace {
  std::uint64_t seed = 0;
  int font_index = 0;
  double rotation_deg = 0.0;
  double shear = 0.0;
  double scale = 1.0;
  int stroke_width = 0;
  int attempts = 1;
};

struct RegionTrace {
  int leaf_index = 0;
  Rect box;
  double draft_fraction = 0.0;
  double refined_fraction = 0.0;  // before the final re-normalization
  int attempts = 0;
};

struct StageTrace {
  DraftTrace draft;
  SrParams sr;
  std::uint64_t sr_seed = 0;
  std::vector<RegionTrace> regions;
};

struct DictionaryEntry {
  std::uint64_t entry_id = 0;
  char32_t label = 0;
  int variant_index = 0;
  Glyph glyph;
  std::uint64_t seed = 0;
  std::string ids;  // UTF-8 serialized IDS of the label
  StageTrace trace;
};

struct Dictionary {
  std::vector<DictionaryEntry> entries;  // sorted by (label, variant_index)
  int generation = 0;
  std::vector<char32_t> charset;  // sorted
  std::uint64_t config_fingerprint = 0;
  std::uint64_t charset_digest = 0;
  int variants_per_label = 0;
  std::uint64_t global_seed = 0;
  std::string generator_id;
};

/// Errors from one (label, variant) slot, carrying the slot's variant index.
class VariantError : public Error {
 public:
  VariantError(const Error& cause, char32_t label, int variant_index);
  char32_t label() const noexcept { return label_; }
  int variant_index() const noexcept { return variant_index_; }

 private:
  char32_t label_;
  int variant_index_;
};

inline constexpr int kDefaultVariants = 8;
inline constexpr int kDraftRetries = 8;
inline constexpr int kRegionAttempts = 8;
inline constexpr int kPruneLength = 4;

/// Pluggable two-stage backend. The procedural reference implementation below
/// is the default; a learned generator can slot in without touching retrieval.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string id() const = 0;
  virtual Glyph draft(const CharSpec& spec, std::uint64_t seed, DraftTrace* trace) const = 0;
  virtual Glyph refine(const Glyph& draft, const ids::IdsTree& ids, const SrParams& params, std::uint64_t seed,
                       std::vector<RegionTrace>* trace) const = 0;
};

class ProceduralGenerator final : public Generator {
 public:
  std::string id() const override { return "procedural-v1"; }
  Glyph draft(const CharSpec& spec, std::uint64_t seed, DraftTrace* trace) const override;
  Glyph refine(const Glyph& draft, const ids::IdsTree& ids, const SrParams& params, std::uint64_t seed,
               std::vector<RegionTrace>* trace) const override;
};

const Generator& default_generator();

/// One drafting attempt: pick a font, affine-jitter it, thin, prune short
/// branches, re-stroke and normalize. Throws EmptyDraft when pruning leaves nothing.
Glyph fad_draft(const CharSpec& spec, std::uint64_t seed, DraftTrace* trace = nullptr);

/// fad_draft with up to kDraftRetries derived seeds.
Glyph draft_with_retries(const Generator& gen, const CharSpec& spec, std::uint64_t seed, DraftTrace* trace = nullptr);

/// IDS-guided perturbation with per-region reject-and-resample, then
/// re-normalization. Throws ContainmentUnsatisfiable.
Glyph sr_refine(const Glyph& draft, const ids::IdsTree& ids, const SrParams& params, std::uint64_t seed,
                std::vector<RegionTrace>* trace = nullptr);

/// Per-index perturbation schedule: index 0 is the unperturbed anchor, then a
/// linear ramp from mild to strong over indices 1..K-1.
SrParams schedule(int variant_index, int variants_per_label);

/// Scales every perturbation parameter by an independent factor in
/// [1 - spread, 1 + spread], clamped back into the valid range.
SrParams jitter_params(const SrParams& base, std::uint64_t seed, double spread = 0.2);

std::uint64_t entry_id(char32_t label, int variant_index, std::uint64_t global_seed);
std::uint64_t variant_seed(std::uint64_t global_seed, char32_t label, int variant_index);

/// Generates slot `variant_index` of `spec` from an explicit seed and params.
DictionaryEntry generate_entry(const CharSpec& spec, int variant_index, std::uint64_t global_seed, std::uint64_t seed,
                               const SrParams& params, const Generator& gen = default_generator());

/// K entries, order-independent of scheduling. Throws VariantError.
std::vector<DictionaryEntry> generate_variants(const CharSpec& spec, int variants_per_label, std::uint64_t global_seed,
                                               unsigned threads = 1, const Generator& gen = default_generator());

struct BuildFailure {
  char32_t label;
  int variant_index;
  std::string error;
};

struct BuildReport {
  int variants_per_label = 0;
  int font_count = 0;
  std::size_t entry_count = 0;
  std::vector<BuildFailure> failures;
  std::vector<char32_t> failed_labels;  // labels with zero surviving variants
};

/// Hash of everything that determines the dictionary's contents.
std::uint64_t charset_digest(const std::vector<CharSpec>& charset);
std::uint64_t config_fingerprint(int variants_per_label, std::uint64_t global_seed, const std::string& generator_id,
                                 std::uint64_t charset_digest);

/// Throws DuplicateLabel, or BuildFailed when any label has no surviving variant.
Dictionary build_dictionary(const std::vector<CharSpec>& charset, int variants_per_label, std::uint64_t global_seed,
                            BuildReport* report = nullptr, unsigned threads = 1,
                            const Generator& gen = default_generator());

}  // namespace obsdict::synthesis
