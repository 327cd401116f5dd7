#include "obsdict/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace obsdict::retrieval {

namespace {

encoder::Embedding embed_entry(const encoder::Encoder& enc, const synthesis::DictionaryEntry& e) {
  try {
    return enc.embed(e.glyph);
  } catch (const Error& err) {
    throw Error(err.code(), "entry " + std::to_string(e.entry_id) + ": " + err.what());
  }
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Index build_index(const synthesis::Dictionary& d, const encoder::Encoder& enc, unsigned threads) {
  if (d.entries.empty()) throw Error(Errc::EmptyDictionary, "cannot index an empty dictionary");
  std::vector<encoder::Embedding> rows(d.entries.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) { rows[i] = embed_entry(enc, d.entries[i]); });
  Index ix;
  ix.embeddings.dim = static_cast<std::uint32_t>(enc.dim());
  ix.embeddings.data.reserve(rows.size() * static_cast<std::size_t>(enc.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ix.embeddings.append(rows[i]);
    ix.entry_ids.push_back(d.entries[i].entry_id);
    ix.labels.push_back(d.entries[i].label);
  }
  ix.generation = d.generation;
  ix.encoder_id = enc.id();
  ix.dictionary_fingerprint = d.config_fingerprint;
  return ix;
}

Index update_index(const Index& previous, const synthesis::Dictionary& d, const std::vector<std::size_t>& changed_rows,
                   const encoder::Encoder& enc, unsigned threads) {
  if (previous.count() != d.entries.size() || previous.encoder_id != enc.id()) {
    throw Error(Errc::InvalidArgument, "index does not match the dictionary or encoder");
  }
  for (std::size_t i = 0; i < d.entries.size(); ++i) {
    if (previous.entry_ids[i] != d.entries[i].entry_id) throw Error(Errc::InvalidArgument, "entry order changed");
  }
  Index ix = previous;
  std::vector<encoder::Embedding> rows(changed_rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) { rows[i] = embed_entry(enc, d.entries[changed_rows[i]]); });
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), ix.embeddings.data.begin() + static_cast<std::ptrdiff_t>(changed_rows[i] * ix.embeddings.dim));
  ix.generation = d.generation;
  return ix;
}

double similarity(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

std::vector<Match> query_topk(const Index& ix, std::span<const float> q, int k) {
  if (k < 1) throw Error(Errc::InvalidArgument, "k must be >= 1");
  if (q.size() != ix.embeddings.dim) {
    throw Error(Errc::DimensionMismatch,
                "query has " + std::to_string(q.size()) + " dims, index has " + std::to_string(ix.embeddings.dim));
  }
  const std::size_t n = ix.count();
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) sims[i] = similarity(ix.embeddings.row(i), q);
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), n);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return ix.entry_ids[a] < ix.entry_ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(), better);
  std::vector<Match> out;
  out.reserve(kk);
  for (std::size_t r = 0; r < kk; ++r) {
    const auto i = order[r];
    out.push_back(Match{ix.entry_ids[i], ix.labels[i], sims[i], static_cast<int>(r)});
  }
  return out;
}

std::vector<LabelScore> vote_labels(const std::vector<Match>& matches, VoteRule rule) {
  std::map<char32_t, LabelScore> groups;
  for (const auto& m : matches) {
    auto [it, fresh] = groups.try_emplace(m.label);
    auto& g = it->second;
    if (fresh) {
      g.label = m.label;
      g.best_similarity = m.similarity;
    }
    g.score += rule == VoteRule::Sum ? m.similarity : 1.0;
    g.best_similarity = std::max(g.best_similarity, m.similarity);
    g.supporting_entry_ids.push_back(m.entry_id);
  }
  std::vector<LabelScore> out;
  out.reserve(groups.size());
  for (auto& [label, g] : groups) out.push_back(std::move(g));
  std::sort(out.begin(), out.end(), [](const LabelScore& a, const LabelScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.best_similarity != b.best_similarity) return a.best_similarity > b.best_similarity;
    return a.label < b.label;
  });
  return out;
}

std::uint64_t query_id(std::span<const std::uint8_t> image_bytes, std::uint64_t salt) {
  return hash64({tag("query"), fnv1a64(image_bytes), salt});
}

RetrievalResult decipher(const Index& ix, const encoder::Encoder& enc, const GrayImage& image, int k,
                         std::uint64_t qid, VoteRule rule) {
  const Glyph g = glyph::normalize(image);
  RetrievalResult r;
  r.query_id = qid;
  r.index_generation = ix.generation;
  r.matches = query_topk(ix, enc.embed(g), k);
  r.label_ranking = vote_labels(r.matches, rule);
  return r;
}

RetrievalResult decipher(const Index& ix, const encoder::Encoder& enc, const Glyph& g, int k, std::uint64_t qid,
                         VoteRule rule) {
  return decipher(ix, enc, glyph::render(g), k, qid, rule);
}

RetrievalResult decipher_bytes(const Index& ix, const encoder::Encoder& enc, std::span<const std::uint8_t> bytes, int k,
                               std::uint64_t salt, VoteRule rule) {
  return decipher(ix, enc, image_io::decode(bytes), k, query_id(bytes, salt), rule);
}

void save_index(const fs::path& dir, const Index& ix) {
  fs::create_directories(dir);
  encoder::write_store(dir / "embeddings.obse", ix.embeddings);
  json meta = {
      {"generation", ix.generation},
      {"dim", ix.dim()},
      {"count", ix.count()},
      {"encoder_id", ix.encoder_id},
      {"dictionary_fingerprint", hex16(ix.dictionary_fingerprint)},
      {"store", "embeddings.obse"},
  };
  const std::string text = meta.dump(2) + "\n";
  image_io::write_bytes(dir / "index_meta.json",
                        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Index load_index(const fs::path& dir, const synthesis::Dictionary& d) {
  std::ifstream in(dir / "index_meta.json");
  if (!in) throw Error(Errc::Io, "cannot open " + (dir / "index_meta.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::Format, std::string("index_meta.json: ") + e.what());
  }
  Index ix;
  ix.embeddings = encoder::read_store(dir / meta.value("store", std::string("embeddings.obse")));
  ix.generation = meta.at("generation").get<int>();
  ix.encoder_id = meta.at("encoder_id").get<std::string>();
  ix.dictionary_fingerprint = std::stoull(meta.at("dictionary_fingerprint").get<std::string>(), nullptr, 16);
  if (ix.embeddings.count() != d.entries.size() || ix.dictionary_fingerprint != d.config_fingerprint ||
      ix.generation != d.generation) {
    throw Error(Errc::Format, "index in " + dir.string() + " was built from a different dictionary");
  }
  for (const auto& e : d.entries) {
    ix.entry_ids.push_back(e.entry_id);
    ix.labels.push_back(e.label);
  }
  return ix;
}

}  // namespace obsdict::retrieval
