#include "obsdict/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <set>

#include "obsdict/dictionary_io.hpp"
#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using nlohmann::json;

namespace obsdict::service {

namespace {

Response json_response(int status, const ordered_json& j) { return Response{status, j.dump(), "application/json"}; }

Response error_response(int status, const std::string& message) {
  return json_response(status, ordered_json{{"error", message}});
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

/// Writes via a temporary file, fsyncs and renames into place.
void durable_write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error(Errc::Io, "cannot write " + tmp.string());
  const bool ok = ::write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw Error(Errc::Io, "short write to " + tmp.string());
  fs::rename(tmp, path);
}

void durable_append(const fs::path& path, const std::string& line) {
  fs::create_directories(path.parent_path());
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error(Errc::Io, "cannot open " + path.string());
  const bool ok = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw Error(Errc::Io, "short write to " + path.string());
}

std::optional<std::uint64_t> parse_id(const std::string& s) {
  try {
    return dictionary_io::parse_hex64(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

ordered_json annotation_json(const Annotation& a) {
  ordered_json j = {{"annotation_id", dictionary_io::hex16(a.annotation_id)},
                    {"query_id", dictionary_io::hex16(a.query_id)}};
  j["chosen_label"] = a.chosen_label ? ordered_json(utf8::encode(*a.chosen_label)) : ordered_json(nullptr);
  j["verdict"] = verdict_name(a.verdict);
  j["confidence"] = a.confidence;
  j["created_at"] = a.created_at;
  j["index_generation"] = a.index_generation;
  j["note"] = a.note;
  return j;
}

std::optional<Verdict> parse_verdict(const std::string& s) {
  if (s == "confirmed") return Verdict::Confirmed;
  if (s == "rejected") return Verdict::Rejected;
  if (s == "uncertain") return Verdict::Uncertain;
  return std::nullopt;
}

Annotation annotation_from(const json& j) {
  Annotation a;
  a.annotation_id = dictionary_io::parse_hex64(j.at("annotation_id").get<std::string>());
  a.query_id = dictionary_io::parse_hex64(j.at("query_id").get<std::string>());
  if (!j.at("chosen_label").is_null()) a.chosen_label = utf8::decode(j.at("chosen_label").get<std::string>()).at(0);
  a.verdict = parse_verdict(j.at("verdict").get<std::string>()).value_or(Verdict::Uncertain);
  a.confidence = j.at("confidence").get<int>();
  a.created_at = j.at("created_at").get<std::string>();
  a.index_generation = j.at("index_generation").get<int>();
  a.note = j.value("note", std::string());
  return a;
}

const char* sniff_extension(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G') return ".png";
  return ".pgm";
}

}  // namespace

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Confirmed: return "confirmed";
    case Verdict::Rejected: return "rejected";
    case Verdict::Uncertain: return "uncertain";
  }
  return "uncertain";
}

Service::Service(ServiceConfig config, const encoder::Encoder& enc) : config_(std::move(config)), enc_(enc) {
  fs::create_directories(config_.data_dir / "sessions");
  load_annotations();
}

void Service::load_annotations() {
  std::ifstream in(config_.data_dir / "annotations.ndjson");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      log_.push_back(annotation_from(json::parse(line)));
    } catch (const std::exception&) {
      // A torn final line from a crash is ignored; earlier records stay valid.
    }
  }
}

void Service::swap_index(std::shared_ptr<const retrieval::Index> index, fs::path dict_dir) {
  auto next = std::make_shared<Loaded>();
  next->index = std::move(index);
  next->dict_dir = std::move(dict_dir);
  std::set<char32_t> labels(next->index->labels.begin(), next->index->labels.end());
  next->label_count = labels.size();
  for (std::size_t i = 0; i < next->index->count(); ++i) next->row_of[next->index->entry_ids[i]] = i;
  std::lock_guard lock(index_mu_);
  loaded_ = std::move(next);
}

void Service::load_dictionary(const fs::path& dict_dir, unsigned threads) {
  const auto d = dictionary_io::load(dict_dir);
  std::shared_ptr<const retrieval::Index> ix;
  if (fs::exists(dict_dir / "index" / "index_meta.json")) {
    ix = std::make_shared<const retrieval::Index>(retrieval::load_index(dict_dir / "index", d));
  } else {
    ix = std::make_shared<const retrieval::Index>(retrieval::build_index(d, enc_, threads));
  }
  if (ix->encoder_id != enc_.id()) throw Error(Errc::Format, "index was built with encoder " + ix->encoder_id);
  swap_index(std::move(ix), dict_dir);
}

std::shared_ptr<const Service::Loaded> Service::current() const {
  std::lock_guard lock(index_mu_);
  return loaded_;
}

Response Service::query(std::span<const std::uint8_t> image, std::optional<int> k, std::optional<int> n) {
  const auto state = current();
  if (!state) return error_response(503, "index not loaded");
  const int kk = k.value_or(config_.default_k);
  const int nn = n.value_or(config_.default_n);
  if (kk < 1) return error_response(400, "k must be >= 1");
  if (nn < 1 || nn > kMaxN) return error_response(400, "n must lie in [1, 100]");

  std::uint64_t salt;
  {
    std::lock_guard lock(log_mu_);
    salt = hash64({static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count()), ++counter_});
  }
  retrieval::RetrievalResult r;
  try {
    r = retrieval::decipher_bytes(*state->index, enc_, image, kk, salt);
  } catch (const Error& e) {
    return error_response(400, e.what());
  }

  std::map<std::uint64_t, double> sim_of;
  for (const auto& m : r.matches) sim_of[m.entry_id] = m.similarity;
  ordered_json candidates = ordered_json::array();
  for (std::size_t i = 0; i < r.label_ranking.size() && static_cast<int>(i) < nn; ++i) {
    const auto& ls = r.label_ranking[i];
    ordered_json variants = ordered_json::array();
    for (std::size_t v = 0; v < ls.supporting_entry_ids.size() && v < 3; ++v) {
      const std::string id = dictionary_io::hex16(ls.supporting_entry_ids[v]);
      variants.push_back({{"entry_id", id},
                          {"similarity", sim_of[ls.supporting_entry_ids[v]]},
                          {"image", "/api/entries/" + id + "/image"}});
    }
    ordered_json c = {{"rank", i},
                      {"label", utf8::encode(ls.label)},
                      {"codepoint", utf8::codepoint_hex(ls.label)},
                      {"vote_score", ls.score},
                      {"best_similarity", ls.best_similarity},
                      {"support_count", ls.supporting_entry_ids.size()}};
    const auto g = config_.glosses.find(ls.label);
    c["gloss"] = g == config_.glosses.end() ? ordered_json(nullptr) : ordered_json(g->second);
    c["variants"] = variants;
    candidates.push_back(c);
  }
  ordered_json matches = ordered_json::array();
  for (const auto& m : r.matches)
    matches.push_back({{"rank", m.rank},
                       {"entry_id", dictionary_io::hex16(m.entry_id)},
                       {"label", utf8::encode(m.label)},
                       {"similarity", m.similarity}});

  const std::string qid = dictionary_io::hex16(r.query_id);
  const std::string image_name = qid + sniff_extension(image);
  ordered_json session = {{"query_id", qid},
                          {"created_at", utc_now()},
                          {"image", "sessions/" + image_name},
                          {"k", kk},
                          {"n", nn},
                          {"index_generation", r.index_generation},
                          {"encoder_id", state->index->encoder_id},
                          {"voting_rule", "similarity-sum"},
                          {"candidates", candidates},
                          {"matches", matches}};
  try {
    durable_write(config_.data_dir / "sessions" / image_name,
                  std::string(reinterpret_cast<const char*>(image.data()), image.size()));
    durable_write(config_.data_dir / "sessions" / (qid + ".json"), session.dump() + "\n");
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
  session["annotations"] = ordered_json::array();
  return json_response(201, session);
}

Response Service::session(const std::string& query_id_hex) const {
  const auto id = parse_id(query_id_hex);
  if (!id) return error_response(404, "unknown query_id");
  const fs::path p = config_.data_dir / "sessions" / (dictionary_io::hex16(*id) + ".json");
  std::ifstream in(p);
  if (!in) return error_response(404, "unknown query_id");
  ordered_json s = ordered_json::parse(in);
  ordered_json notes = ordered_json::array();
  {
    std::lock_guard lock(log_mu_);
    for (const auto& a : log_)
      if (a.query_id == *id) notes.push_back(annotation_json(a));
  }
  s["annotations"] = notes;
  return json_response(200, s);
}

Response Service::entry_image(const std::string& entry_id_hex) const {
  const auto state = current();
  if (!state) return error_response(503, "index not loaded");
  const auto id = parse_id(entry_id_hex);
  if (!id || !state->row_of.count(*id)) return error_response(404, "unknown entry_id");
  try {
    const auto bytes = image_io::read_bytes(state->dict_dir / "images" / (dictionary_io::hex16(*id) + ".png"));
    return Response{200, std::string(bytes.begin(), bytes.end()), "image/png"};
  } catch (const Error& e) {
    return error_response(404, e.what());
  }
}

Response Service::post_annotation(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) return error_response(400, "expected a JSON object");
  if (!j.contains("query_id") || !j["query_id"].is_string()) return error_response(422, "query_id is required");
  const auto qid = parse_id(j["query_id"].get<std::string>());
  const fs::path session_file = config_.data_dir / "sessions" / (qid ? dictionary_io::hex16(*qid) + ".json" : "");
  if (!qid || !fs::exists(session_file)) return error_response(404, "unknown query_id");

  Annotation a;
  a.query_id = *qid;
  const auto verdict = j.contains("verdict") && j["verdict"].is_string()
                           ? parse_verdict(j["verdict"].get<std::string>())
                           : std::nullopt;
  if (!verdict) return error_response(422, "verdict must be confirmed, rejected or uncertain");
  a.verdict = *verdict;
  if (!j.contains("confidence") || !j["confidence"].is_number_integer()) return error_response(422, "confidence must be an integer");
  a.confidence = j["confidence"].get<int>();
  if (a.confidence < 1 || a.confidence > 5) return error_response(422, "confidence must lie in [1, 5]");
  if (j.contains("chosen_label") && !j["chosen_label"].is_null()) {
    if (!j["chosen_label"].is_string()) return error_response(422, "chosen_label must be a string");
    std::u32string s;
    try {
      s = utf8::decode(j["chosen_label"].get<std::string>());
    } catch (const Error&) {
      return error_response(422, "chosen_label is not valid UTF-8");
    }
    if (s.size() != 1) return error_response(422, "chosen_label must be one character");
    a.chosen_label = s[0];
  }
  if (a.verdict == Verdict::Confirmed && !a.chosen_label) return error_response(422, "confirmed needs chosen_label");
  if (a.verdict != Verdict::Confirmed && a.chosen_label) return error_response(422, "only confirmed carries chosen_label");
  if (j.contains("note")) {
    if (!j["note"].is_string()) return error_response(422, "note must be a string");
    a.note = j["note"].get<std::string>();
  }
  {
    std::ifstream in(session_file);
    a.index_generation = json::parse(in).at("index_generation").get<int>();
  }
  std::lock_guard lock(log_mu_);
  a.created_at = utc_now();
  a.annotation_id = hash64({tag("annotation"), a.query_id, log_.size(), ++counter_,
                            static_cast<std::uint64_t>(std::chrono::system_clock::now().time_since_epoch().count())});
  try {
    durable_append(config_.data_dir / "annotations.ndjson", annotation_json(a).dump() + "\n");
  } catch (const Error& e) {
    return error_response(500, e.what());
  }
  log_.push_back(a);
  return json_response(201, annotation_json(a));
}

Response Service::annotations(const std::optional<std::string>& query_id_hex) const {
  std::optional<std::uint64_t> filter;
  if (query_id_hex) {
    filter = parse_id(*query_id_hex);
    if (!filter) return json_response(200, ordered_json::array());
  }
  ordered_json out = ordered_json::array();
  std::lock_guard lock(log_mu_);
  for (const auto& a : log_)
    if (!filter || a.query_id == *filter) out.push_back(annotation_json(a));
  return json_response(200, out);
}

Response Service::stats() const {
  const auto state = current();
  if (!state) return error_response(503, "index not loaded");
  return json_response(200, ordered_json{{"label_count", state->label_count},
                                         {"entry_count", state->index->count()},
                                         {"index_generation", state->index->generation},
                                         {"encoder_id", state->index->encoder_id},
                                         {"dim", state->index->dim()}});
}

void Service::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto int_param = [](const httplib::Request& req, const char* name) -> std::optional<int> {
    if (!req.has_param(name)) return std::nullopt;
    try {
      return std::stoi(req.get_param_value(name));
    } catch (const std::exception&) {
      return -1;
    }
  };
  server.Post("/api/query", [this, send, int_param](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image")) return send(res, error_response(400, "multipart field 'image' is required"));
    const auto file = req.get_file_value("image");
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(file.content.data()), file.content.size());
    send(res, query(bytes, int_param(req, "k"), int_param(req, "n")));
  });
  server.Get(R"(/api/sessions/([0-9a-fA-F]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, session(req.matches[1])); });
  server.Get(R"(/api/entries/([0-9a-fA-F]+)/image)",
             [this, send](const httplib::Request& req, httplib::Response& res) { send(res, entry_image(req.matches[1])); });
  server.Post("/api/annotations",
              [this, send](const httplib::Request& req, httplib::Response& res) { send(res, post_annotation(req.body)); });
  server.Get("/api/annotations", [this, send](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> q;
    if (req.has_param("query_id")) q = req.get_param_value("query_id");
    send(res, annotations(q));
  });
  server.Get("/api/stats", [this, send](const httplib::Request&, httplib::Response& res) { send(res, stats()); });
  if (config_.ui_dir) server.set_mount_point("/", config_.ui_dir->string());
}

int serve(Service& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port)) throw Error(Errc::Io, "cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace obsdict::service
