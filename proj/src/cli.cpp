#include "obsdict/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "obsdict/corpus.hpp"
#include "obsdict/degradation.hpp"
#include "obsdict/dictionary_io.hpp"
#include "obsdict/encoder.hpp"
#include "obsdict/error.hpp"
#include "obsdict/evaluation.hpp"
#include "obsdict/ids.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/random.hpp"
#include "obsdict/refinement.hpp"
#include "obsdict/retrieval.hpp"
#include "obsdict/service.hpp"
#include "obsdict/synthesis.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;

namespace obsdict::cli {

namespace {

struct Logger {
  std::ostream& err;
  bool quiet = false;

  void config(const std::string& cmd, const std::vector<std::pair<std::string, std::string>>& kv) const {
    if (quiet) return;
    err << "config: cmd=" << cmd;
    for (const auto& [k, v] : kv) err << ' ' << k << '=' << v;
    err << '\n';
  }
  void info(const std::string& msg) const {
    if (!quiet) err << msg << '\n';
  }
};

void write_text(const fs::path& p, const std::string& text) {
  image_io::write_bytes(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

retrieval::VoteRule parse_rule(const std::string& s) {
  if (s == "sum") return retrieval::VoteRule::Sum;
  if (s == "count") return retrieval::VoteRule::Count;
  throw Error(Errc::InvalidArgument, "unknown voting rule '" + s + "'");
}

retrieval::Index index_for(const fs::path& dict_dir, const synthesis::Dictionary& d, const std::string& index_dir,
                           unsigned threads, const Logger& log) {
  const fs::path dir = index_dir.empty() ? dict_dir / "index" : fs::path(index_dir);
  if (fs::exists(dir / "index_meta.json")) {
    auto ix = retrieval::load_index(dir, d);
    if (ix.encoder_id != encoder::default_encoder().id()) throw Error(Errc::Format, "index encoder " + ix.encoder_id + " is not available");
    return ix;
  }
  if (!index_dir.empty()) throw Error(Errc::Io, "no index at " + dir.string());
  log.info("no stored index; embedding " + std::to_string(d.entries.size()) + " entries");
  return retrieval::build_index(d, encoder::default_encoder(), threads);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// --- subcommands ------------------------------------------------------------

struct BuildDictArgs {
  std::string ids, fonts, out;
  int k = synthesis::kDefaultVariants;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

int build_dict(const BuildDictArgs& a, std::ostream& out, const Logger& log) {
  log.config("build-dict", {{"ids", a.ids}, {"fonts", a.fonts}, {"k", std::to_string(a.k)}, {"seed", std::to_string(a.seed)},
                            {"out", a.out}, {"threads", std::to_string(a.threads)}});
  const auto table = ids::load_table(a.ids);
  for (const auto& w : table.warnings) log.info("warning: " + w);
  std::vector<std::string> warnings;
  const auto charset = corpus::load_charset(table, a.fonts, kGlyphSize, &warnings);
  for (const auto& w : warnings) log.info("warning: " + w);
  synthesis::BuildReport report;
  synthesis::Dictionary d;
  try {
    d = synthesis::build_dictionary(charset, a.k, a.seed, &report, a.threads);
  } catch (const Error& e) {
    for (const auto& f : report.failures)
      log.info("failure: U+" + utf8::codepoint_hex(f.label) + " variant " + std::to_string(f.variant_index) + ": " + f.error);
    throw;
  }
  dictionary_io::WriteOptions opts;
  opts.report = &report;
  dictionary_io::save(a.out, d, opts);
  dictionary_io::save_sources(a.out, charset);
  log.info("fingerprint=" + dictionary_io::hex16(d.config_fingerprint) + " charset_digest=" + dictionary_io::hex16(d.charset_digest));
  out << "labels\t" << d.charset.size() << "\nentries\t" << d.entries.size() << "\nfonts\t" << report.font_count
      << "\nfailures\t" << report.failures.size() << "\nfingerprint\t" << dictionary_io::hex16(d.config_fingerprint)
      << "\n";
  return kExitOk;
}

struct IndexArgs {
  std::string dict, out;
  unsigned threads = 0;
};

int index_cmd(const IndexArgs& a, std::ostream& out, const Logger& log) {
  const fs::path dir = a.out.empty() ? fs::path(a.dict) / "index" : fs::path(a.out);
  log.config("index", {{"dict", a.dict}, {"out", dir.string()}, {"threads", std::to_string(a.threads)},
                       {"encoder", encoder::default_encoder().id()}});
  const auto d = dictionary_io::load(a.dict);
  const auto ix = retrieval::build_index(d, encoder::default_encoder(), a.threads);
  retrieval::save_index(dir, ix);
  out << "count\t" << ix.count() << "\ndim\t" << ix.dim() << "\ngeneration\t" << ix.generation << "\n";
  return kExitOk;
}

struct QueryArgs {
  std::string dict, index, image, vote = "sum";
  int k = retrieval::kDefaultK;
  int n = 10;
  unsigned threads = 0;
};

int query_cmd(const QueryArgs& a, std::ostream& out, const Logger& log) {
  log.config("query", {{"dict", a.dict}, {"index", a.index}, {"image", a.image}, {"k", std::to_string(a.k)},
                       {"n", std::to_string(a.n)}, {"vote", a.vote}});
  const auto d = dictionary_io::load(a.dict);
  const auto ix = index_for(a.dict, d, a.index, a.threads, log);
  const auto bytes = image_io::read_bytes(a.image);
  const auto r = retrieval::decipher_bytes(ix, encoder::default_encoder(), bytes, a.k, 0, parse_rule(a.vote));
  for (std::size_t i = 0; i < r.label_ranking.size() && static_cast<int>(i) < a.n; ++i) {
    const auto& ls = r.label_ranking[i];
    out << utf8::encode(ls.label) << '\t' << fmt6(ls.score) << '\t' << fmt6(ls.best_similarity) << '\n';
  }
  return kExitOk;
}

struct EvalArgs {
  std::string dict, queries, index, out, vote = "sum";
  std::uint64_t split_seed = 7, suite_seed = 0;
  double ratio = 0.9;
  int k = 0;
  bool svg = false, all_labels = false, degradation = false, no_dr = false;
  unsigned threads = 0;
};

int eval_cmd(const EvalArgs& a, std::ostream& out, const Logger& log) {
  evaluation::EvalConfig cfg;
  cfg.k = a.k;
  cfg.rule = parse_rule(a.vote);
  cfg.split_seed = a.split_seed;
  cfg.ratio = a.ratio;
  cfg.suite_seed = a.suite_seed;
  cfg.threads = a.threads;
  const auto d = dictionary_io::load(a.dict);
  // The fingerprint is fixed before any query is read.
  log.config("eval", {{"dict", a.dict}, {"queries", a.queries}, {"split_seed", std::to_string(a.split_seed)},
                      {"ratio", fmt6(a.ratio)}, {"k", std::to_string(a.k)}, {"vote", a.vote}, {"out", a.out},
                      {"suite", a.degradation ? "12" : "0"}, {"suite_seed", std::to_string(a.suite_seed)},
                      {"fingerprint", dictionary_io::hex16(d.config_fingerprint)}});
  const auto ix = index_for(a.dict, d, a.index, a.threads, log);
  const auto all = corpus::load_labeled(a.queries);
  const auto split = evaluation::split_characters(d.charset, a.ratio, a.split_seed);
  const auto queries = a.all_labels ? all : evaluation::test_queries(all, split);
  const std::size_t label_count = a.all_labels ? d.charset.size() : split.test_labels.size();
  log.info("queries: " + std::to_string(queries.size()) + " of " + std::to_string(all.size()));

  evaluation::EvalReport rep;
  if (a.degradation) {
    rep = evaluation::run_degradation_suite(d, ix, queries, evaluation::standard_suite(), encoder::default_encoder(), cfg,
                                            label_count);
  } else {
    std::optional<retrieval::Index> dr;
    if (!a.no_dr && fs::is_directory(fs::path(a.dict) / "sources")) {
      const auto charset = dictionary_io::load_sources(a.dict, d);
      dr = retrieval::build_index(evaluation::modern_dictionary(dictionary_io::modern_renders(charset)),
                                  encoder::default_encoder(), a.threads);
    }
    rep = evaluation::run_benchmark(d, ix, dr ? &*dr : nullptr, queries, encoder::default_encoder(), cfg, label_count);
  }
  const fs::path out_path(a.out);
  write_text(out_path, rep.to_json());
  fs::path tsv = out_path;
  tsv.replace_extension(".tsv");
  write_text(tsv, rep.to_tsv());
  if (a.svg) {
    fs::path svg = out_path;
    svg.replace_extension(".svg");
    write_text(svg, rep.to_svg());
  }
  out << rep.to_tsv();
  return kExitOk;
}

struct DegradeArgs {
  std::string input, out, kinds = "blur,noise,erode,mask", severities = "1,2,3";
  std::uint64_t seed = 0;
};

int degrade_cmd(const DegradeArgs& a, std::ostream& out, const Logger& log) {
  log.config("degrade-suite", {{"input", a.input}, {"kinds", a.kinds}, {"severities", a.severities},
                               {"seed", std::to_string(a.seed)}, {"out", a.out}});
  std::vector<degradation::Kind> kinds;
  for (const auto& k : split_list(a.kinds)) kinds.push_back(degradation::parse_kind(k));
  std::vector<int> sev;
  for (const auto& s : split_list(a.severities)) {
    int v = 0;
    try {
      v = std::stoi(s);
    } catch (const std::exception&) {
      throw Error(Errc::InvalidArgument, "bad severity '" + s + "'");
    }
    sev.push_back(v);
  }
  if (kinds.empty() || sev.empty()) throw Error(Errc::InvalidArgument, "need at least one kind and one severity");
  const auto items = corpus::load_labeled(a.input);
  std::ostringstream tsv;
  tsv << "src\tkind\tseverity\tseed\tdst\n";
  std::size_t written = 0;
  for (auto kind : kinds)
    for (int s : sev) {
      const std::string cond = std::string(degradation::kind_name(kind)) + "-" + std::to_string(s);
      std::vector<corpus::LabeledImage> degraded;
      for (const auto& item : items) {
        degradation::DegradationSpec spec{kind, s, hash64({tag("degrade-suite"), a.seed, fnv1a64(item.id)})};
        spec.validate();
        corpus::LabeledImage d = item;
        d.image = glyph::render(degradation::degrade(glyph::normalize(item.image), spec));
        degraded.push_back(std::move(d));
        tsv << item.id << '\t' << degradation::kind_name(kind) << '\t' << s << '\t' << dictionary_io::hex16(spec.seed)
            << '\t' << cond << '/' << item.id << '\n';
        ++written;
      }
      corpus::write_manifest(fs::path(a.out) / cond, degraded);
    }
  write_text(fs::path(a.out) / "suite.tsv", tsv.str());
  out << "images\t" << written << "\n";
  return kExitOk;
}

struct RefineArgs {
  std::string dict, exemplars, validation, out, queries;
  int iters = 20, k = retrieval::kDefaultK, patience = 3;
  std::optional<std::uint64_t> seed;
  std::uint64_t split_seed = 7;
  double ratio = 0.9;
  unsigned threads = 0;
};

int refine_cmd(const RefineArgs& a, std::ostream& out, const Logger& log) {
  const auto d = dictionary_io::load(a.dict);
  refinement::RefineConfig cfg;
  cfg.iterations = a.iters;
  cfg.patience = a.patience;
  cfg.support_k = a.k;
  cfg.global_seed = a.seed.value_or(d.global_seed);
  cfg.threads = a.threads;
  log.config("refine", {{"dict", a.dict}, {"exemplars", a.exemplars}, {"validation", a.validation},
                        {"iters", std::to_string(a.iters)}, {"k", std::to_string(a.k)}, {"patience", std::to_string(a.patience)},
                        {"seed", std::to_string(cfg.global_seed)}, {"out", a.out},
                        {"fingerprint", dictionary_io::hex16(d.config_fingerprint)}});
  if (!a.queries.empty()) {
    const auto split = evaluation::split_characters(d.charset, a.ratio, a.split_seed);
    for (const auto& q : evaluation::test_queries(corpus::load_labeled(a.queries), split)) cfg.test_digests.insert(q.digest);
    cfg.test_labels.insert(split.test_labels.begin(), split.test_labels.end());
  }
  const auto charset = dictionary_io::load_sources(a.dict, d);
  const auto exemplars = corpus::load_labeled(a.exemplars);
  const auto validation = corpus::load_labeled(a.validation);

  const fs::path out_dir(a.out);
  fs::path previous = a.dict;
  int snapshot_no = 0;
  std::map<int, fs::path> snapshot_of{{d.generation, fs::path(a.dict)}};
  auto snapshot = [&](const synthesis::Dictionary& g, const std::vector<std::size_t>& changed) {
    std::set<std::uint64_t> unchanged;
    std::set<std::size_t> changed_set(changed.begin(), changed.end());
    for (std::size_t i = 0; i < g.entries.size(); ++i)
      if (!changed_set.count(i)) unchanged.insert(g.entries[i].entry_id);
    const fs::path dir = out_dir / "snapshots" / ("gen-" + std::to_string(g.generation));
    dictionary_io::WriteOptions opts;
    opts.link_from = &previous;
    opts.unchanged = &unchanged;
    dictionary_io::save(dir, g, opts);
    previous = dir;
    snapshot_of[g.generation] = dir;
    ++snapshot_no;
    log.info("generation " + std::to_string(g.generation) + ": regenerated " + std::to_string(changed.size()));
  };
  const auto result =
      refinement::refine_loop(d, charset, exemplars, validation, cfg, encoder::default_encoder(),
                              synthesis::default_generator(), snapshot);

  std::set<std::uint64_t> all_ids;
  for (const auto& e : result.dictionary.entries) all_ids.insert(e.entry_id);
  const fs::path best_src = snapshot_of.at(result.dictionary.generation);
  dictionary_io::WriteOptions opts;
  opts.link_from = &best_src;
  opts.unchanged = &all_ids;
  dictionary_io::save(out_dir, result.dictionary, opts);
  dictionary_io::save_sources(out_dir, charset);
  retrieval::save_index(out_dir / "index", result.index);
  write_text(out_dir / "trace.json", result.trace.to_json());
  out << "iterations\t" << result.trace.iterations.size() - 1 << "\nbest_generation\t" << result.trace.best_generation
      << "\nstop_reason\t" << result.trace.stop_reason << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string addr = "127.0.0.1:8080", dict, data, ui, ids;
  int k = retrieval::kDefaultK;
  unsigned threads = 0;
};

int serve_cmd(const ServeArgs& a, std::ostream& out, const Logger& log) {
  const auto colon = a.addr.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::InvalidArgument, "--addr must be host:port");
  const std::string host = a.addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::InvalidArgument, "bad port in --addr");
  }
  log.config("serve", {{"addr", a.addr}, {"dict", a.dict}, {"data", a.data}, {"ui", a.ui.empty() ? "none" : a.ui},
                       {"k", std::to_string(a.k)}});
  service::ServiceConfig cfg;
  cfg.data_dir = a.data;
  cfg.default_k = a.k;
  if (!a.ui.empty()) cfg.ui_dir = fs::path(a.ui);
  if (!a.ids.empty()) {
    for (const auto& e : ids::load_table(a.ids).entries)
      if (!e.gloss.empty()) cfg.glosses[e.character] = e.gloss;
  }
  service::Service svc(cfg);
  svc.load_dictionary(a.dict, a.threads);
  out << "listening on " << a.addr << std::endl;
  return service::serve(svc, host, port);
}

struct ExportArgs {
  std::string dict, index, out;
  unsigned threads = 0;
};

int export_cmd(const ExportArgs& a, std::ostream& out, const Logger& log) {
  log.config("export-embeddings", {{"dict", a.dict}, {"index", a.index}, {"out", a.out}});
  const auto d = dictionary_io::load(a.dict);
  const auto ix = index_for(a.dict, d, a.index, a.threads, log);
  encoder::write_store(a.out, ix.embeddings);
  fs::path side(a.out);
  side.replace_extension(".tsv");
  std::ostringstream tsv;
  tsv << "entry_id\tlabel\tcodepoint\n";
  for (std::size_t i = 0; i < ix.count(); ++i)
    tsv << dictionary_io::hex16(ix.entry_ids[i]) << '\t' << utf8::encode(ix.labels[i]) << '\t'
        << utf8::codepoint_hex(ix.labels[i]) << '\n';
  write_text(side, tsv.str());
  out << "rows\t" << ix.count() << "\ndim\t" << ix.dim() << "\nsidecar\t" << side.string() << "\n";
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dictionary-based glyph decipherment", "obsdict"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "info or quiet")->check(CLI::IsMember({"info", "quiet"}));

  BuildDictArgs bd;
  auto* c_build = app.add_subcommand("build-dict", "synthesize the dictionary from font renders");
  c_build->add_option("--ids", bd.ids, "IDS table")->required();
  c_build->add_option("--fonts", bd.fonts, "font render tree fonts/<font>/<hex>.png")->required();
  c_build->add_option("--k", bd.k, "variants per label")->check(CLI::Range(1, 1000));
  c_build->add_option("--seed", bd.seed, "global seed");
  c_build->add_option("--out", bd.out, "dictionary directory")->required();
  c_build->add_option("--threads", bd.threads, "worker threads (0 = all cores)");

  IndexArgs ia;
  auto* c_index = app.add_subcommand("index", "embed the dictionary");
  c_index->add_option("--dict", ia.dict)->required();
  c_index->add_option("--out", ia.out, "index directory (default <dict>/index)");
  c_index->add_option("--threads", ia.threads);

  QueryArgs qa;
  auto* c_query = app.add_subcommand("query", "rank candidate labels for one image");
  c_query->add_option("--dict", qa.dict)->required();
  c_query->add_option("--index", qa.index, "index directory (default <dict>/index)");
  c_query->add_option("--image", qa.image)->required();
  c_query->add_option("--k", qa.k, "entry matches feeding the vote")->check(CLI::Range(1, 1000000));
  c_query->add_option("--n", qa.n, "labels to print")->check(CLI::Range(1, 100000));
  c_query->add_option("--vote", qa.vote, "sum or count")->check(CLI::IsMember({"sum", "count"}));

  EvalArgs ea;
  auto* c_eval = app.add_subcommand("eval", "zero-shot benchmark");
  c_eval->add_option("--dict", ea.dict)->required();
  c_eval->add_option("--queries", ea.queries, "query manifest, directory with manifest.tsv, or exemplar tree")->required();
  c_eval->add_option("--index", ea.index);
  c_eval->add_option("--split-seed", ea.split_seed);
  c_eval->add_option("--ratio", ea.ratio)->check(CLI::Range(0.0, 1.0));
  c_eval->add_option("--k", ea.k, "entry matches per query (0 = 100 * K)")->check(CLI::NonNegativeNumber);
  c_eval->add_option("--vote", ea.vote)->check(CLI::IsMember({"sum", "count"}));
  c_eval->add_option("--out", ea.out, "report.json path")->required();
  c_eval->add_flag("--svg", ea.svg, "also write an SVG chart of the Top-N curves");
  c_eval->add_flag("--all-labels", ea.all_labels, "evaluate every query, not only the test split");
  c_eval->add_flag("--degradation", ea.degradation, "run the 12-condition degradation suite");
  c_eval->add_option("--suite-seed", ea.suite_seed);
  c_eval->add_flag("--no-dr", ea.no_dr, "skip the direct-retrieval baseline");
  c_eval->add_option("--threads", ea.threads);

  DegradeArgs da;
  auto* c_degrade = app.add_subcommand("degrade-suite", "write degraded copies of an image set");
  c_degrade->add_option("--input", da.input, "manifest, directory with manifest.tsv, or exemplar tree")->required();
  c_degrade->add_option("--kinds", da.kinds);
  c_degrade->add_option("--severities", da.severities);
  c_degrade->add_option("--seed", da.seed);
  c_degrade->add_option("--out", da.out)->required();

  RefineArgs ra;
  auto* c_refine = app.add_subcommand("refine", "iterative dictionary refinement");
  c_refine->add_option("--dict", ra.dict)->required();
  c_refine->add_option("--exemplars", ra.exemplars)->required();
  c_refine->add_option("--validation", ra.validation)->required();
  c_refine->add_option("--iters", ra.iters)->check(CLI::Range(1, 1000));
  c_refine->add_option("--patience", ra.patience)->check(CLI::Range(1, 1000));
  c_refine->add_option("--k", ra.k, "support top-k")->check(CLI::Range(1, 1000000));
  c_refine->add_option("--seed", ra.seed, "regeneration seed (default: the dictionary's)");
  c_refine->add_option("--queries", ra.queries, "query set whose test split must not reach the loop");
  c_refine->add_option("--split-seed", ra.split_seed);
  c_refine->add_option("--ratio", ra.ratio)->check(CLI::Range(0.0, 1.0));
  c_refine->add_option("--out", ra.out)->required();
  c_refine->add_option("--threads", ra.threads);

  ServeArgs sa;
  auto* c_serve = app.add_subcommand("serve", "HTTP workbench API");
  c_serve->add_option("--addr", sa.addr, "host:port");
  c_serve->add_option("--dict", sa.dict)->required();
  c_serve->add_option("--data", sa.data, "sessions and annotations directory")->required();
  c_serve->add_option("--ui", sa.ui, "static UI directory");
  c_serve->add_option("--ids", sa.ids, "IDS table providing glosses");
  c_serve->add_option("--k", sa.k)->check(CLI::Range(1, 1000000));
  c_serve->add_option("--threads", sa.threads);

  ExportArgs xa;
  auto* c_export = app.add_subcommand("export-embeddings", "write embeddings plus an id/label sidecar");
  c_export->add_option("--dict", xa.dict)->required();
  c_export->add_option("--index", xa.index);
  c_export->add_option("--out", xa.out, "embedding store path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const Logger log{err, log_level == "quiet"};
  try {
    if (*c_build) return build_dict(bd, out, log);
    if (*c_index) return index_cmd(ia, out, log);
    if (*c_query) return query_cmd(qa, out, log);
    if (*c_eval) return eval_cmd(ea, out, log);
    if (*c_degrade) return degrade_cmd(da, out, log);
    if (*c_refine) return refine_cmd(ra, out, log);
    if (*c_serve) return serve_cmd(sa, out, log);
    if (*c_export) return export_cmd(xa, out, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "error: Io: " << e.what() << "\n";
    return kExitDomain;
  } catch (const nlohmann::json::exception& e) {
    err << "error: Format: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace obsdict::cli
