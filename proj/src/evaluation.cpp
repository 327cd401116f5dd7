#include "obsdict/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "obsdict/dictionary_io.hpp"
#include "obsdict/error.hpp"
#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

using nlohmann::ordered_json;

namespace obsdict::evaluation {

std::size_t train_count(std::size_t n, double ratio) {
  // 0.9 * 1590 is 1431.0000000000002 in binary floating point.
  return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
}

Split split_characters(std::vector<char32_t> charset, double ratio, std::uint64_t seed) {
  if (charset.empty()) throw Error(Errc::EmptyCharset, "cannot split an empty charset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error(Errc::InvalidArgument, "ratio must lie in (0, 1)");
  std::sort(charset.begin(), charset.end());
  if (std::adjacent_find(charset.begin(), charset.end()) != charset.end()) {
    throw Error(Errc::DuplicateLabel, "charset labels must be unique");
  }
  SplitMix64 rng(seed);
  for (std::size_t i = charset.size() - 1; i > 0; --i) std::swap(charset[i], charset[rng.below(i + 1)]);
  const std::size_t cut = std::min(train_count(charset.size(), ratio), charset.size());
  Split s;
  s.seed = seed;
  s.ratio = ratio;
  s.train_labels.assign(charset.begin(), charset.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test_labels.assign(charset.begin() + static_cast<std::ptrdiff_t>(cut), charset.end());
  std::sort(s.train_labels.begin(), s.train_labels.end());
  std::sort(s.test_labels.begin(), s.test_labels.end());
  return s;
}

synthesis::Dictionary modern_dictionary(const std::vector<std::pair<char32_t, Glyph>>& renders) {
  synthesis::Dictionary d;
  d.variants_per_label = 1;
  d.generator_id = "modern-render";
  std::uint64_t h = tag("modern");
  for (const auto& [label, g] : renders) {
    synthesis::DictionaryEntry e;
    e.entry_id = hash64({tag("modern"), label});
    e.label = label;
    e.glyph = g;
    d.entries.push_back(std::move(e));
    d.charset.push_back(label);
    std::vector<unsigned char> q(g.pixels().size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = g.pixels()[i] >= 0.5f ? 1 : 0;
    h = fnv1a64(q, hash64({h, label}));
  }
  d.config_fingerprint = h;
  return d;
}

std::vector<corpus::LabeledImage> test_queries(const std::vector<corpus::LabeledImage>& all, const Split& split) {
  const std::set<char32_t> test(split.test_labels.begin(), split.test_labels.end());
  std::vector<corpus::LabeledImage> out;
  for (const auto& q : all)
    if (test.count(q.label)) out.push_back(q);
  return out;
}

std::vector<degradation::DegradationSpec> standard_suite() {
  std::vector<degradation::DegradationSpec> out;
  for (auto kind : degradation::kAllKinds)
    for (int s = 1; s <= 3; ++s) out.push_back(degradation::DegradationSpec{kind, s, 0});
  return out;
}

const MethodResult* EvalReport::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

std::string condition_name(const std::optional<degradation::DegradationSpec>& spec) {
  if (!spec) return "clean";
  return std::string(degradation::kind_name(spec->kind)) + "-" + std::to_string(spec->severity);
}

int resolve_k(const EvalConfig& c, const synthesis::Dictionary& d) {
  if (c.k > 0) return c.k;
  return 100 * std::max(1, d.variants_per_label);
}

struct QueryRun {
  std::vector<std::optional<Glyph>> glyphs;  // normalized; nullopt when normalization failed
  std::vector<std::string> errors;
};

QueryRun prepare(const std::vector<corpus::LabeledImage>& queries, unsigned threads) {
  QueryRun run;
  run.glyphs.resize(queries.size());
  run.errors.resize(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    try {
      run.glyphs[i] = glyph::normalize(queries[i].image);
    } catch (const Error& e) {
      run.errors[i] = e.what();
    }
  });
  return run;
}

std::uint64_t eval_query_id(const corpus::LabeledImage& q, const std::string& condition) {
  return hash64({tag("eval"), q.digest, fnv1a64(condition)});
}

Condition evaluate(const std::string& method, const retrieval::Index& ix, const encoder::Encoder& enc,
                   const std::vector<corpus::LabeledImage>& queries, const QueryRun& prepared,
                   const std::optional<degradation::DegradationSpec>& spec, int k, const EvalConfig& config,
                   std::vector<Failure>& failures) {
  Condition c;
  c.name = condition_name(spec);
  c.spec = spec;
  const std::size_t n = queries.size();
  std::vector<metrics::Ranking> rankings(n);
  std::vector<std::string> errors(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    if (!prepared.glyphs[i]) {
      errors[i] = prepared.errors[i];
      return;
    }
    try {
      Glyph g = *prepared.glyphs[i];
      if (spec) {
        degradation::DegradationSpec s = *spec;
        s.seed = hash64({tag("suite"), config.suite_seed, queries[i].digest, static_cast<std::uint64_t>(i),
                         static_cast<std::uint64_t>(s.kind), static_cast<std::uint64_t>(s.severity)});
        g = degradation::degrade(g, s);
      }
      const auto r = retrieval::decipher(ix, enc, g, k, 0, config.rule);
      for (const auto& ls : r.label_ranking) rankings[i].push_back(ls.label);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  std::vector<char32_t> truths(n);
  for (std::size_t i = 0; i < n; ++i) {
    truths[i] = queries[i].label;
    if (!errors[i].empty()) failures.push_back(Failure{method, c.name, queries[i].id, eval_query_id(queries[i], c.name), errors[i]});
  }
  c.curve = metrics::topn_curve(rankings, truths);
  c.truth_ranks = metrics::truth_ranks(rankings, truths);
  c.ci = metrics::bootstrap_topn(c.truth_ranks, hash64({config.suite_seed, fnv1a64(method), fnv1a64(c.name)}));
  return c;
}

void check_fingerprint(const synthesis::Dictionary& d) {
  // The fingerprint depends only on build inputs; recomputing it here shows
  // no query was involved in producing the dictionary under test.
  if (d.variants_per_label > 0 && !d.generator_id.empty() && d.generator_id != "modern-render" &&
      synthesis::config_fingerprint(d.variants_per_label, d.global_seed, d.generator_id, d.charset_digest) !=
          d.config_fingerprint) {
    throw Error(Errc::InvalidArgument, "dictionary fingerprint does not match its build parameters");
  }
}

MethodResult method_header(const std::string& name, const synthesis::Dictionary& d, const retrieval::Index& ix) {
  MethodResult m;
  m.name = name;
  m.fingerprint = d.config_fingerprint;
  m.entry_count = ix.count();
  m.generation = ix.generation;
  return m;
}

}  // namespace

std::vector<int> rank_glyphs(const retrieval::Index& ix, const encoder::Encoder& enc, const std::vector<Glyph>& glyphs,
                             const std::vector<char32_t>& truths, int k, retrieval::VoteRule rule, unsigned threads) {
  std::vector<metrics::Ranking> rankings(glyphs.size());
  parallel_for(glyphs.size(), threads, [&](std::size_t i) {
    try {
      const auto r = retrieval::decipher(ix, enc, glyphs[i], k, 0, rule);
      for (const auto& ls : r.label_ranking) rankings[i].push_back(ls.label);
    } catch (const Error&) {
    }
  });
  return metrics::truth_ranks(rankings, truths);
}

EvalReport run_benchmark(const synthesis::Dictionary& d, const retrieval::Index& ix, const retrieval::Index* dr,
                         const std::vector<corpus::LabeledImage>& queries, const encoder::Encoder& enc,
                         const EvalConfig& config, std::size_t test_label_count) {
  if (queries.empty()) throw Error(Errc::InvalidArgument, "no queries to evaluate");
  check_fingerprint(d);
  EvalReport rep;
  rep.config = config;
  rep.k_used = resolve_k(config, d);
  rep.variants_per_label = d.variants_per_label;
  rep.encoder_id = enc.id();
  rep.query_count = queries.size();
  rep.test_label_count = test_label_count;
  const QueryRun prepared = prepare(queries, config.threads);

  MethodResult m = method_header("dictionary", d, ix);
  m.conditions.push_back(evaluate("dictionary", ix, enc, queries, prepared, std::nullopt, rep.k_used, config, rep.failures));
  rep.methods.push_back(std::move(m));
  if (dr) {
    MethodResult b;
    b.name = "dr";
    b.fingerprint = dr->dictionary_fingerprint;
    b.entry_count = dr->count();
    b.generation = dr->generation;
    // One entry per label, so 100 matches already cover Top-100.
    b.conditions.push_back(evaluate("dr", *dr, enc, queries, prepared, std::nullopt, 100, config, rep.failures));
    rep.methods.push_back(std::move(b));
  }
  return rep;
}

EvalReport run_degradation_suite(const synthesis::Dictionary& d, const retrieval::Index& ix,
                                 const std::vector<corpus::LabeledImage>& queries,
                                 const std::vector<degradation::DegradationSpec>& specs, const encoder::Encoder& enc,
                                 const EvalConfig& config, std::size_t test_label_count) {
  if (queries.empty()) throw Error(Errc::InvalidArgument, "no queries to evaluate");
  check_fingerprint(d);
  EvalReport rep;
  rep.config = config;
  rep.k_used = resolve_k(config, d);
  rep.variants_per_label = d.variants_per_label;
  rep.encoder_id = enc.id();
  rep.query_count = queries.size();
  rep.test_label_count = test_label_count;
  const QueryRun prepared = prepare(queries, config.threads);
  MethodResult m = method_header("dictionary", d, ix);
  m.conditions.push_back(evaluate("dictionary", ix, enc, queries, prepared, std::nullopt, rep.k_used, config, rep.failures));
  for (const auto& s : specs) {
    s.validate();
    m.conditions.push_back(evaluate("dictionary", ix, enc, queries, prepared, s, rep.k_used, config, rep.failures));
  }
  rep.methods.push_back(std::move(m));
  return rep;
}

std::string EvalReport::to_json() const {
  ordered_json j;
  j["config"] = {
      {"k", k_used},
      {"variants_per_label", variants_per_label},
      {"voting_rule", config.rule == retrieval::VoteRule::Sum ? "similarity-sum" : "count"},
      {"encoder_id", encoder_id},
      {"split_seed", config.split_seed},
      {"ratio", config.ratio},
      {"suite_seed", config.suite_seed},
      {"bootstrap_resamples", metrics::kBootstrapResamples},
      {"ci_level", 0.95},
  };
  j["query_count"] = query_count;
  j["test_label_count"] = test_label_count;
  ordered_json methods_j = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json conds = ordered_json::array();
    for (const auto& c : m.conditions) {
      ordered_json topn, ci;
      for (std::size_t i = 0; i < metrics::kTopN.size(); ++i) {
        const std::string key = std::to_string(metrics::kTopN[i]);
        topn[key] = c.curve.accuracy[i];
        ci[key] = {c.ci[i].lo, c.ci[i].hi};
      }
      ordered_json cj = {{"name", c.name}};
      if (c.spec) {
        cj["kind"] = std::string(degradation::kind_name(c.spec->kind));
        cj["severity"] = c.spec->severity;
      } else {
        cj["kind"] = nullptr;
        cj["severity"] = 0;
      }
      cj["sample_count"] = c.curve.sample_count;
      cj["topn"] = topn;
      cj["ci95"] = ci;
      conds.push_back(cj);
    }
    methods_j.push_back({{"name", m.name},
                         {"fingerprint", dictionary_io::hex16(m.fingerprint)},
                         {"entry_count", m.entry_count},
                         {"index_generation", m.generation},
                         {"conditions", conds}});
  }
  j["methods"] = methods_j;
  ordered_json fails = ordered_json::array();
  for (const auto& f : failures)
    fails.push_back({{"method", f.method},
                     {"condition", f.condition},
                     {"query", f.query},
                     {"query_id", dictionary_io::hex16(f.query_id)},
                     {"error", f.error}});
  j["failures"] = fails;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_tsv() const {
  std::ostringstream out;
  out << "method\tcondition\tN\taccuracy\tci95_lo\tci95_hi\tsamples\n";
  char buf[64];
  for (const auto& m : methods)
    for (const auto& c : m.conditions)
      for (std::size_t i = 0; i < metrics::kTopN.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.4f\t%.4f\t%.4f", c.curve.accuracy[i], c.ci[i].lo, c.ci[i].hi);
        out << m.name << '\t' << c.name << '\t' << metrics::kTopN[i] << '\t' << buf << '\t' << c.curve.sample_count
            << '\n';
      }
  return out.str();
}

std::string EvalReport::to_svg() const {
  constexpr int kW = 640, kH = 400, kL = 60, kR = 160, kT = 20, kB = 50;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                            "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#843c39"};
  auto px = [&](std::size_t i) { return kL + static_cast<double>(i) * (kW - kL - kR) / (metrics::kTopN.size() - 1); };
  auto py = [&](double a) { return kT + (1.0 - a) * (kH - kT - kB); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double a = t / 4.0;
    s << "<line x1=\"" << kL << "\" x2=\"" << kW - kR << "\" y1=\"" << py(a) << "\" y2=\"" << py(a)
      << "\" stroke=\"#ddd\"/><text x=\"" << kL - 8 << "\" y=\"" << py(a) + 4 << "\" text-anchor=\"end\">" << t * 25
      << "%</text>\n";
  }
  for (std::size_t i = 0; i < metrics::kTopN.size(); ++i)
    s << "<text x=\"" << px(i) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">Top-" << metrics::kTopN[i]
      << "</text>\n";
  std::size_t series = 0;
  for (const auto& m : methods)
    for (const auto& c : m.conditions) {
      const char* color = kColors[series % std::size(kColors)];
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < metrics::kTopN.size(); ++i) s << px(i) << ',' << py(c.curve.accuracy[i]) << ' ';
      s << "\"/>\n<text x=\"" << kW - kR + 8 << "\" y=\"" << kT + 12 + 14 * series << "\" fill=\"" << color << "\">"
        << m.name << ' ' << c.name << "</text>\n";
      ++series;
    }
  s << "</svg>\n";
  return s.str();
}

}  // namespace obsdict::evaluation
