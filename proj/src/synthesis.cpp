#include "obsdict/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace obsdict::synthesis {

namespace {

int round_px(double v) { return static_cast<int>(std::floor(v + 0.5)); }

double bilinear(const Glyph& g, double sx, double sy) {
  const int n = g.size();
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  auto v = [&](int x, int y) -> double {
    return (x >= 0 && y >= 0 && x < n && y < n) ? static_cast<double>(g.at(x, y)) : 0.0;
  };
  const double top = v(x0, y0) * (1.0 - fx) + v(x0 + 1, y0) * fx;
  const double bot = v(x0, y0 + 1) * (1.0 - fx) + v(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

/// Forward map p' = c + A (p - c), sampled backwards.
Glyph affine(const Glyph& src, double rotation_deg, double shear, double scale) {
  const int n = src.size();
  const double c = (n - 1) / 2.0;
  const double th = rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(th);
  const double sn = std::sin(th);
  // A = scale * R * Sh, Sh = [[1, shear], [0, 1]]
  const double a = scale * cs;
  const double b = scale * (cs * shear - sn);
  const double cc = scale * sn;
  const double d = scale * (sn * shear + cs);
  const double det = a * d - b * cc;
  const double ia = d / det, ib = -b / det, ic = -cc / det, id = a / det;
  Glyph out(n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double u = x - c;
      const double v = y - c;
      const double sx = c + ia * u + ib * v;
      const double sy = c + ic * u + id * v;
      out.at(x, y) = bilinear(src, sx, sy) >= 0.5 ? 1.0f : 0.0f;
    }
  return out;
}

/// Removes whole skeleton branches with probability p, erasing the stroke
/// pixels that only the removed branches account for.
Glyph attrite(const Glyph& piece, double p, SplitMix64& rng) {
  if (p <= 0.0 || piece.empty()) return piece;
  const int n = piece.size();
  const Glyph skel = glyph::skeletonize(piece);
  Glyph branches(n);
  long skel_count = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!skel.ink(x, y)) continue;
      ++skel_count;
      if (glyph::neighbour_count(skel, x, y) < 3) branches.at(x, y) = 1.0f;
    }
  int count = 0;
  const auto labels = glyph::label_components(branches, count);
  std::vector<char> drop(static_cast<std::size_t>(count));
  for (auto& dflag : drop) dflag = rng.bernoulli(p) ? 1 : 0;
  Glyph removed(n), kept(n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (skel.pixels()[i] < 0.5f) continue;
    const bool is_removed = labels[i] >= 0 && drop[static_cast<std::size_t>(labels[i])];
    (is_removed ? removed : kept).pixels()[i] = 1.0f;
  }
  // Attrition thins a component; it never takes the larger part of it.
  if (removed.empty() || kept.ink_count() < removed.ink_count()) return piece;
  const double half_width = static_cast<double>(piece.ink_count()) / static_cast<double>(std::max(1L, skel_count)) / 2.0;
  const double reach = std::max(2.0, half_width + 1.0);
  const Glyph removed_zone = glyph::dilate(removed, reach);
  const Glyph kept_zone = glyph::dilate(kept, reach);
  Glyph out = glyph::binarize(piece);
  for (std::size_t i = 0; i < out.pixels().size(); ++i) {
    if (removed_zone.pixels()[i] >= 0.5f && kept_zone.pixels()[i] < 0.5f) out.pixels()[i] = 0.0f;
  }
  return out;
}

/// Smooth displacement field bounded by amplitude in each axis.
Glyph warp(const Glyph& piece, double amplitude, SplitMix64& rng) {
  const int n = piece.size();
  double k[8], phase[4];
  for (double& f : k) f = rng.uniform(0.3, 1.2) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  for (double& ph : phase) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (amplitude <= 0.0) return piece;
  const double w = 2.0 * std::numbers::pi / n;
  Glyph out(n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double dx = amplitude * (0.6 * std::sin(w * (k[0] * x + k[1] * y) + phase[0]) +
                                     0.4 * std::sin(w * (k[2] * x + k[3] * y) + phase[1]));
      const double dy = amplitude * (0.6 * std::sin(w * (k[4] * x + k[5] * y) + phase[2]) +
                                     0.4 * std::sin(w * (k[6] * x + k[7] * y) + phase[3]));
      out.at(x, y) = bilinear(piece, x - dx, y - dy) >= 0.5 ? 1.0f : 0.0f;
    }
  return out;
}

Glyph perturb(const Glyph& piece, const SrParams& params, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Glyph g = attrite(piece, params.attrition_prob, rng);
  g = glyph::dilate(g, params.merge_radius);
  g = warp(g, params.warp_amplitude, rng);
  const int tx = round_px(rng.uniform(-params.region_jitter, params.region_jitter));
  const int ty = round_px(rng.uniform(-params.region_jitter, params.region_jitter));
  if (tx != 0 || ty != 0) g = glyph::translate(g, tx, ty);
  return g;
}

std::uint8_t quantize(float v) { return static_cast<std::uint8_t>(round_px(255.0 * v)); }

}  // namespace

void CharSpec::validate() const {
  if (font_renders.empty()) throw Error(Errc::InvalidArgument, "CharSpec needs at least one font render");
}

void SrParams::validate() const {
  if (!(attrition_prob >= 0.0 && attrition_prob <= 1.0)) throw Error(Errc::InvalidArgument, "attrition_prob outside [0, 1]");
  if (!(merge_radius >= 0.0)) throw Error(Errc::InvalidArgument, "merge_radius must be >= 0");
  if (!(warp_amplitude >= 0.0 && warp_amplitude <= 6.0)) throw Error(Errc::InvalidArgument, "warp_amplitude outside [0, 6]");
  if (!(region_jitter >= 0.0 && region_jitter <= 5.0)) throw Error(Errc::InvalidArgument, "region_jitter outside [0, 5]");
  if (!(containment_min >= 0.5 && containment_min <= 1.0)) {
    throw Error(Errc::InvalidArgument, "containment_min outside [0.5, 1]");
  }
}

VariantError::VariantError(const Error& cause, char32_t label, int variant_index)
    : Error(cause.code(), "label U+" + utf8::codepoint_hex(label) + " variant " + std::to_string(variant_index) + ": " +
                              cause.what()),
      label_(label),
      variant_index_(variant_index) {}

Glyph fad_draft(const CharSpec& spec, std::uint64_t seed, DraftTrace* trace) {
  spec.validate();
  SplitMix64 rng(seed);
  DraftTrace t;
  t.seed = seed;
  t.font_index = static_cast<int>(rng.below(spec.font_renders.size()));
  t.rotation_deg = rng.uniform(-6.0, 6.0);
  t.shear = rng.uniform(-0.08, 0.08);
  t.scale = rng.uniform(0.92, 1.08);
  t.stroke_width = 2 + static_cast<int>(rng.below(2));
  if (trace) *trace = t;

  const Glyph& src = spec.font_renders[static_cast<std::size_t>(t.font_index)];
  const Glyph moved = affine(glyph::binarize(src), t.rotation_deg, t.shear, t.scale);
  const Glyph skeleton = glyph::prune(glyph::skeletonize(moved), kPruneLength);
  if (skeleton.empty()) throw Error(Errc::EmptyDraft, "pruning removed all ink");
  return glyph::normalize(glyph::restroke(skeleton, t.stroke_width));
}

Glyph draft_with_retries(const Generator& gen, const CharSpec& spec, std::uint64_t seed, DraftTrace* trace) {
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : hash64({seed, static_cast<std::uint64_t>(attempt)});
    try {
      Glyph g = gen.draft(spec, s, trace);
      if (trace) trace->attempts = attempt + 1;
      return g;
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyDraft && e.code() != Errc::EmptyImage) throw;
      if (attempt >= kDraftRetries) throw Error(Errc::EmptyDraft, "no draft after retries: " + std::string(e.what()));
    }
  }
}

Glyph sr_refine(const Glyph& draft, const ids::IdsTree& tree, const SrParams& params, std::uint64_t seed,
                std::vector<RegionTrace>* trace) {
  params.validate();
  if (draft.empty()) throw Error(Errc::EmptyDraft, "refinement needs a non-empty draft");
  const int n = draft.size();
  ids::LayoutParams lp;
  lp.jitter_seed = hash64({seed, tag("layout")});
  const auto regions = ids::layout(tree, draft.canvas(), lp);
  const std::size_t r_count = regions.size();

  // Each ink pixel belongs to the smallest leaf box containing it.
  std::vector<Glyph> pieces(r_count, Glyph(n));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      if (!draft.ink(x, y)) continue;
      std::size_t best = 0;
      long best_area = -1;
      for (std::size_t r = 0; r < r_count; ++r) {
        if (!regions[r].box.contains(x, y)) continue;
        if (best_area < 0 || regions[r].box.area() < best_area) {
          best = r;
          best_area = regions[r].box.area();
        }
      }
      pieces[best].at(x, y) = 1.0f;
    }

  std::vector<double> draft_fraction(r_count);
  for (std::size_t r = 0; r < r_count; ++r) draft_fraction[r] = glyph::ink_fraction(draft, regions[r].box);

  std::vector<int> attempts(r_count, 1);
  std::vector<Glyph> perturbed(r_count);
  for (std::size_t r = 0; r < r_count; ++r) perturbed[r] = perturb(pieces[r], params, hash64({seed, r, 0}));

  Glyph composite(n);
  std::vector<double> fraction(r_count);
  for (;;) {
    composite = Glyph(n);
    for (const auto& p : perturbed) composite = glyph::combine(composite, p);
    std::vector<std::size_t> failing;
    for (std::size_t r = 0; r < r_count; ++r) {
      fraction[r] = glyph::ink_fraction(composite, regions[r].box);
      if (fraction[r] < params.containment_min * draft_fraction[r]) failing.push_back(r);
    }
    if (failing.empty()) break;
    for (std::size_t r : failing) {
      if (attempts[r] >= kRegionAttempts) {
        throw Error(Errc::ContainmentUnsatisfiable,
                    "region " + std::to_string(r) + " kept " + std::to_string(fraction[r]) + " of required " +
                        std::to_string(params.containment_min * draft_fraction[r]));
      }
      perturbed[r] = perturb(pieces[r], params, hash64({seed, r, static_cast<std::uint64_t>(attempts[r])}));
      ++attempts[r];
    }
  }

  if (trace) {
    trace->clear();
    for (std::size_t r = 0; r < r_count; ++r) {
      trace->push_back(RegionTrace{regions[r].leaf_index, regions[r].box, draft_fraction[r], fraction[r], attempts[r]});
    }
  }
  return glyph::normalize(composite);
}

Glyph ProceduralGenerator::draft(const CharSpec& spec, std::uint64_t seed, DraftTrace* trace) const {
  return fad_draft(spec, seed, trace);
}

Glyph ProceduralGenerator::refine(const Glyph& draft, const ids::IdsTree& tree, const SrParams& params,
                                  std::uint64_t seed, std::vector<RegionTrace>* trace) const {
  return sr_refine(draft, tree, params, seed, trace);
}

const Generator& default_generator() {
  static const ProceduralGenerator gen;
  return gen;
}

SrParams schedule(int variant_index, int variants_per_label) {
  SrParams p;
  if (variant_index <= 0) return p;
  const double t = variants_per_label > 2 ? static_cast<double>(variant_index - 1) / (variants_per_label - 2) : 0.0;
  p.attrition_prob = 0.05 + 0.25 * t;
  p.warp_amplitude = 1.0 + 3.0 * t;
  p.region_jitter = 3.0 * t;
  p.merge_radius = 2.0 * t;
  return p;
}

SrParams jitter_params(const SrParams& base, std::uint64_t seed, double spread) {
  SplitMix64 rng(seed);
  auto j = [&](double v) { return v * rng.uniform(1.0 - spread, 1.0 + spread); };
  SrParams p = base;
  p.attrition_prob = std::clamp(j(base.attrition_prob), 0.0, 1.0);
  p.merge_radius = std::max(0.0, j(base.merge_radius));
  p.warp_amplitude = std::clamp(j(base.warp_amplitude), 0.0, 6.0);
  p.region_jitter = std::clamp(j(base.region_jitter), 0.0, 5.0);
  return p;
}

std::uint64_t entry_id(char32_t label, int variant_index, std::uint64_t global_seed) {
  return hash64({tag("entry"), label, static_cast<std::uint64_t>(variant_index), global_seed});
}

std::uint64_t variant_seed(std::uint64_t global_seed, char32_t label, int variant_index) {
  return hash64({tag("variant"), global_seed, label, static_cast<std::uint64_t>(variant_index)});
}

DictionaryEntry generate_entry(const CharSpec& spec, int variant_index, std::uint64_t global_seed, std::uint64_t seed,
                               const SrParams& params, const Generator& gen) {
  try {
    DictionaryEntry e;
    e.entry_id = entry_id(spec.label, variant_index, global_seed);
    e.label = spec.label;
    e.variant_index = variant_index;
    e.seed = seed;
    e.ids = ids::serialize_utf8(spec.ids);
    e.trace.sr = params;
    e.trace.sr_seed = hash64({seed, tag("sr")});
    const Glyph draft = draft_with_retries(gen, spec, hash64({seed, tag("fad")}), &e.trace.draft);
    e.glyph = gen.refine(draft, spec.ids, params, e.trace.sr_seed, &e.trace.regions);
    return e;
  } catch (const VariantError&) {
    throw;
  } catch (const Error& err) {
    throw VariantError(err, spec.label, variant_index);
  }
}

std::vector<DictionaryEntry> generate_variants(const CharSpec& spec, int variants_per_label, std::uint64_t global_seed,
                                               unsigned threads, const Generator& gen) {
  if (variants_per_label < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");
  spec.validate();
  std::vector<DictionaryEntry> out(static_cast<std::size_t>(variants_per_label));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const int vi = static_cast<int>(i);
    out[i] = generate_entry(spec, vi, global_seed, variant_seed(global_seed, spec.label, vi),
                            schedule(vi, variants_per_label), gen);
  });
  return out;
}

std::uint64_t charset_digest(const std::vector<CharSpec>& charset) {
  std::vector<const CharSpec*> sorted;
  for (const auto& s : charset) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->label < b->label; });
  std::uint64_t h = tag("charset");
  for (const CharSpec* s : sorted) {
    h = fnv1a64(utf8::encode(s->label), h);
    h = fnv1a64(ids::serialize_utf8(s->ids), h);
    for (const Glyph& g : s->font_renders) {
      std::vector<unsigned char> q(g.pixels().size());
      for (std::size_t i = 0; i < q.size(); ++i) q[i] = quantize(g.pixels()[i]);
      h = fnv1a64(q, hash64({h, static_cast<std::uint64_t>(g.size())}));
    }
  }
  return h;
}

std::uint64_t config_fingerprint(int variants_per_label, std::uint64_t global_seed, const std::string& generator_id,
                                 std::uint64_t digest) {
  std::uint64_t h = hash64({tag("config"), static_cast<std::uint64_t>(variants_per_label), global_seed, digest});
  h = fnv1a64(generator_id, h);
  for (int i = 0; i < variants_per_label; ++i) {
    const SrParams p = schedule(i, variants_per_label);
    for (double v : {p.attrition_prob, p.merge_radius, p.warp_amplitude, p.region_jitter, p.containment_min}) {
      h = hash64({h, static_cast<std::uint64_t>(std::llround(v * 1e9))});
    }
  }
  return hash64({h, kDraftRetries, kRegionAttempts, kPruneLength});
}

Dictionary build_dictionary(const std::vector<CharSpec>& charset, int variants_per_label, std::uint64_t global_seed,
                            BuildReport* report, unsigned threads, const Generator& gen) {
  if (variants_per_label < 1) throw Error(Errc::InvalidArgument, "K must be >= 1");
  std::vector<const CharSpec*> specs;
  std::set<char32_t> seen;
  for (const auto& s : charset) {
    if (!seen.insert(s.label).second) throw Error(Errc::DuplicateLabel, "U+" + utf8::codepoint_hex(s.label));
    s.validate();
    specs.push_back(&s);
  }
  std::sort(specs.begin(), specs.end(), [](auto* a, auto* b) { return a->label < b->label; });

  Dictionary d;
  d.generation = 0;
  d.variants_per_label = variants_per_label;
  d.global_seed = global_seed;
  d.generator_id = gen.id();
  d.charset_digest = charset_digest(charset);
  d.config_fingerprint = config_fingerprint(variants_per_label, global_seed, d.generator_id, d.charset_digest);
  for (const CharSpec* s : specs) d.charset.push_back(s->label);

  const std::size_t k = static_cast<std::size_t>(variants_per_label);
  std::vector<std::optional<DictionaryEntry>> slots(specs.size() * k);
  std::vector<std::string> errors(slots.size());
  parallel_for(slots.size(), threads, [&](std::size_t i) {
    const CharSpec& spec = *specs[i / k];
    const int vi = static_cast<int>(i % k);
    try {
      slots[i] = generate_entry(spec, vi, global_seed, variant_seed(global_seed, spec.label, vi),
                                schedule(vi, variants_per_label), gen);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  BuildReport local;
  BuildReport& rep = report ? *report : local;
  rep = BuildReport{};
  rep.variants_per_label = variants_per_label;
  rep.font_count = specs.empty() ? 0 : static_cast<int>(specs.front()->font_renders.size());
  std::set<std::uint64_t> ids_seen;
  for (std::size_t li = 0; li < specs.size(); ++li) {
    int survivors = 0;
    for (std::size_t vi = 0; vi < k; ++vi) {
      auto& slot = slots[li * k + vi];
      if (!slot) {
        rep.failures.push_back(BuildFailure{specs[li]->label, static_cast<int>(vi), errors[li * k + vi]});
        continue;
      }
      if (!ids_seen.insert(slot->entry_id).second) {
        throw Error(Errc::BuildFailed, "entry id collision for U+" + utf8::codepoint_hex(slot->label));
      }
      ++survivors;
      d.entries.push_back(std::move(*slot));
    }
    if (survivors == 0) rep.failed_labels.push_back(specs[li]->label);
  }
  rep.entry_count = d.entries.size();
  if (!rep.failed_labels.empty()) {
    throw Error(Errc::BuildFailed, std::to_string(rep.failed_labels.size()) + " label(s) produced no variants");
  }
  return d;
}

}  // namespace obsdict::synthesis
