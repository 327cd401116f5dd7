#include "obsdict/refinement.hpp"

#include <algorithm>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>

#include "obsdict/error.hpp"
#include "obsdict/evaluation.hpp"
#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

using nlohmann::ordered_json;

namespace obsdict::refinement {

std::size_t SupportMap::supported_count() const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const Support& s) { return s.supported; }));
}

SupportMap compute_support(const retrieval::Index& ix, const std::vector<corpus::LabeledImage>& exemplars,
                           const encoder::Encoder& enc, int k, unsigned threads) {
  const std::size_t n = ix.count();
  SupportMap map;
  map.entry_ids = ix.entry_ids;
  map.entries.resize(n);

  std::vector<std::optional<encoder::Embedding>> emb(exemplars.size());
  std::vector<std::vector<retrieval::Match>> hits(exemplars.size());
  parallel_for(exemplars.size(), threads, [&](std::size_t i) {
    try {
      emb[i] = enc.embed(glyph::normalize(exemplars[i].image));
      hits[i] = retrieval::query_topk(ix, *emb[i], k);
    } catch (const Error&) {
    }
  });

  std::set<char32_t> covered;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (!emb[i]) {
      map.skipped.push_back(exemplars[i].id);
      continue;
    }
    covered.insert(exemplars[i].label);
  }
  std::map<std::uint64_t, std::size_t> row_of;
  for (std::size_t r = 0; r < n; ++r) row_of[ix.entry_ids[r]] = r;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    if (!emb[i]) continue;
    for (const auto& m : hits[i]) {
      if (m.label != exemplars[i].label) continue;
      auto& s = map.entries[row_of.at(m.entry_id)];
      s.supported = true;
      s.evidence.push_back(exemplars[i].id);
    }
  }

  // Best cosine of every entry to any exemplar, then the median over the corpus.
  std::vector<double> best(n, -1.0);
  parallel_for(n, threads, [&](std::size_t r) {
    double b = -1.0;
    for (const auto& e : emb)
      if (e) b = std::max(b, retrieval::similarity(ix.embeddings.row(r), *e));
    best[r] = b;
  });
  std::vector<double> sorted = best;
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    const std::size_t mid = sorted.size() / 2;
    map.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
  }
  for (std::size_t r = 0; r < n; ++r) {
    auto& s = map.entries[r];
    s.score = best[r];
    s.supervised = covered.count(ix.labels[r]) > 0;
    if (!s.supervised) s.supported = best[r] >= map.median;
  }
  return map;
}

std::uint64_t regeneration_seed(std::uint64_t global_seed, char32_t label, int variant_index, int iteration) {
  return hash64({global_seed, label, static_cast<std::uint64_t>(variant_index), static_cast<std::uint64_t>(iteration)});
}

StepResult refine_step(const synthesis::Dictionary& d, const SupportMap& s,
                       const std::vector<synthesis::CharSpec>& charset, std::uint64_t global_seed, int iteration,
                       unsigned threads, const synthesis::Generator& gen) {
  if (s.entries.size() != d.entries.size()) throw Error(Errc::InvalidArgument, "support map does not cover the dictionary");
  for (std::size_t i = 0; i < d.entries.size(); ++i)
    if (s.entry_ids[i] != d.entries[i].entry_id) throw Error(Errc::InvalidArgument, "support map order differs from the dictionary");
  std::map<char32_t, const synthesis::CharSpec*> spec_of;
  for (const auto& c : charset) spec_of[c.label] = &c;

  StepResult out;
  out.dictionary = d;
  out.dictionary.generation = d.generation + 1;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < d.entries.size(); ++i)
    if (!s.entries[i].supported) todo.push_back(i);

  std::vector<std::optional<synthesis::DictionaryEntry>> fresh(todo.size());
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), threads, [&](std::size_t t) {
    const auto& e = d.entries[todo[t]];
    try {
      const auto it = spec_of.find(e.label);
      if (it == spec_of.end()) throw Error(Errc::InvalidArgument, "no source renders for U+" + utf8::codepoint_hex(e.label));
      const std::uint64_t seed = regeneration_seed(global_seed, e.label, e.variant_index, iteration);
      const auto params = synthesis::jitter_params(synthesis::schedule(e.variant_index, d.variants_per_label),
                                                   hash64({seed, tag("jitter")}));
      auto entry = synthesis::generate_entry(*it->second, e.variant_index, d.global_seed, seed, params, gen);
      entry.entry_id = e.entry_id;
      fresh[t] = std::move(entry);
    } catch (const Error& err) {
      errors[t] = err.what();
    }
  });
  for (std::size_t t = 0; t < todo.size(); ++t) {
    if (!fresh[t]) {
      out.failures.push_back(errors[t]);
      continue;
    }
    out.dictionary.entries[todo[t]] = std::move(*fresh[t]);
    out.changed_rows.push_back(todo[t]);
  }
  return out;
}

bool improves(const metrics::TopNCurve& a, const metrics::TopNCurve& b) {
  for (std::size_t i = metrics::kTopN.size(); i-- > 0;) {
    if (a.accuracy[i] != b.accuracy[i]) return a.accuracy[i] > b.accuracy[i];
  }
  return false;
}

namespace {

metrics::TopNCurve validation_curve(const retrieval::Index& ix, const encoder::Encoder& enc,
                                    const std::vector<std::optional<Glyph>>& glyphs,
                                    const std::vector<char32_t>& truths, int k, unsigned threads) {
  std::vector<metrics::Ranking> rankings(glyphs.size());
  parallel_for(glyphs.size(), threads, [&](std::size_t i) {
    if (!glyphs[i]) return;
    try {
      const auto r = retrieval::decipher(ix, enc, *glyphs[i], k);
      for (const auto& ls : r.label_ranking) rankings[i].push_back(ls.label);
    } catch (const Error&) {
    }
  });
  return metrics::topn_curve(rankings, truths);
}

void check_inputs(const std::vector<corpus::LabeledImage>& exemplars, const std::vector<corpus::LabeledImage>& validation,
                  const RefineConfig& config) {
  for (const auto* set : {&exemplars, &validation})
    for (const auto& item : *set)
      if (config.test_digests.count(item.digest) || config.test_labels.count(item.label)) {
        throw Error(Errc::TestLeakage, "test input passed to refinement: " + item.id);
      }
  std::set<char32_t> support_labels;
  for (const auto& e : exemplars) support_labels.insert(e.label);
  for (const auto& v : validation)
    if (support_labels.count(v.label)) {
      throw Error(Errc::InvalidArgument, "validation label U+" + utf8::codepoint_hex(v.label) + " also has support exemplars");
    }
}

}  // namespace

RefineResult refine_loop(const synthesis::Dictionary& d, const std::vector<synthesis::CharSpec>& charset,
                         const std::vector<corpus::LabeledImage>& exemplars,
                         const std::vector<corpus::LabeledImage>& validation, const RefineConfig& config,
                         const encoder::Encoder& enc, const synthesis::Generator& gen, const SnapshotFn& snapshot) {
  if (config.iterations < 1) throw Error(Errc::InvalidArgument, "iterations must be >= 1");
  check_inputs(exemplars, validation, config);
  const int eval_k = config.eval_k > 0 ? config.eval_k : 100 * std::max(1, d.variants_per_label);

  std::vector<std::optional<Glyph>> val_glyphs(validation.size());
  std::vector<char32_t> val_truths(validation.size());
  for (std::size_t i = 0; i < validation.size(); ++i) {
    val_truths[i] = validation[i].label;
    try {
      val_glyphs[i] = glyph::normalize(validation[i].image);
    } catch (const Error&) {
    }
  }

  RefineResult result;
  retrieval::Index ix = retrieval::build_index(d, enc, config.threads);
  synthesis::Dictionary current = d;
  IterationRecord rec0;
  rec0.generation = d.generation;
  rec0.validation = validation_curve(ix, enc, val_glyphs, val_truths, eval_k, config.threads);
  rec0.supported = d.entries.size();
  result.trace.iterations.push_back(rec0);
  result.dictionary = d;
  result.index = ix;
  result.trace.best_generation = d.generation;
  metrics::TopNCurve best_curve = rec0.validation;

  int stale = 0;
  std::string stop = "iteration limit";
  for (int t = 1; t <= config.iterations; ++t) {
    const SupportMap support = compute_support(ix, exemplars, enc, config.support_k, config.threads);
    StepResult step = refine_step(current, support, charset, config.global_seed, t, config.threads, gen);
    ix = retrieval::update_index(ix, step.dictionary, step.changed_rows, enc, config.threads);
    current = std::move(step.dictionary);
    if (snapshot) snapshot(current, step.changed_rows);

    IterationRecord rec;
    rec.iteration = t;
    rec.generation = current.generation;
    rec.supported = support.supported_count();
    rec.regenerated = step.changed_rows.size();
    rec.failures = std::move(step.failures);
    rec.validation = validation_curve(ix, enc, val_glyphs, val_truths, eval_k, config.threads);
    if (improves(rec.validation, best_curve)) {
      best_curve = rec.validation;
      result.dictionary = current;
      result.index = ix;
      result.trace.best_generation = current.generation;
      stale = 0;
    } else {
      ++stale;
    }
    const bool no_change = rec.regenerated == 0;
    result.trace.iterations.push_back(std::move(rec));
    if (no_change) {
      stop = "all entries supported";
      break;
    }
    if (stale >= config.patience) {
      stop = "no validation improvement for " + std::to_string(config.patience) + " iterations";
      break;
    }
  }
  result.trace.stop_reason = stop;
  result.trace.iterations.back().stop_reason = stop;
  return result;
}

std::string RefinementTrace::to_json() const {
  ordered_json its = ordered_json::array();
  for (const auto& r : iterations) {
    ordered_json topn;
    for (std::size_t i = 0; i < metrics::kTopN.size(); ++i) topn[std::to_string(metrics::kTopN[i])] = r.validation.accuracy[i];
    its.push_back({{"iteration", r.iteration},
                   {"generation", r.generation},
                   {"supported", r.supported},
                   {"regenerated", r.regenerated},
                   {"failures", r.failures},
                   {"validation_topn", topn},
                   {"validation_samples", r.validation.sample_count},
                   {"stop_reason", r.stop_reason}});
  }
  ordered_json j = {{"iterations", its}, {"best_generation", best_generation}, {"stop_reason", stop_reason}};
  return j.dump(2) + "\n";
}

}  // namespace obsdict::refinement
