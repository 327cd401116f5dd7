#pragma once

// HTTP workbench backend: query, evidence images, sessions and an append-only
// annotation log. Handlers are plain methods so tests can drive them without
// a socket; mount() wires them to an httplib server.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsdict/encoder.hpp"
#include "obsdict/retrieval.hpp"

namespace httplib {
class Server;
}

namespace obsdict::service {

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

enum class Verdict { Confirmed, Rejected, Uncertain };

struct Annotation {
  std::uint64_t annotation_id = 0;
  std::uint64_t query_id = 0;
  std::optional<char32_t> chosen_label;
  Verdict verdict = Verdict::Uncertain;
  int confidence = 3;
  std::string created_at;  // UTC, ISO 8601
  int index_generation = 0;
  std::string note;
};

inline constexpr int kMaxN = 100;

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> ui_dir;
  int default_k = retrieval::kDefaultK;
  int default_n = 10;
  std::map<char32_t, std::string> glosses;
};

class Service {
 public:
  explicit Service(ServiceConfig config, const encoder::Encoder& enc = encoder::default_encoder());

  /// Installs a new index generation; in-flight queries finish on the old one.
  void swap_index(std::shared_ptr<const retrieval::Index> index, std::filesystem::path dict_dir);
  /// Loads dictionary + index (building the index when none is stored).
  void load_dictionary(const std::filesystem::path& dict_dir, unsigned threads = 1);

  Response query(std::span<const std::uint8_t> image, std::optional<int> k, std::optional<int> n);
  Response session(const std::string& query_id_hex) const;
  Response entry_image(const std::string& entry_id_hex) const;
  Response post_annotation(const std::string& json_body);
  Response annotations(const std::optional<std::string>& query_id_hex) const;
  Response stats() const;

  void mount(httplib::Server& server);

 private:
  struct Loaded {
    std::shared_ptr<const retrieval::Index> index;
    std::filesystem::path dict_dir;
    std::map<std::uint64_t, std::size_t> row_of;
    std::size_t label_count = 0;
  };

  std::shared_ptr<const Loaded> current() const;
  void append_annotation(const Annotation& a);
  void load_annotations();

  ServiceConfig config_;
  const encoder::Encoder& enc_;
  mutable std::mutex index_mu_;
  std::shared_ptr<const Loaded> loaded_;
  mutable std::mutex log_mu_;
  std::vector<Annotation> log_;
  std::uint64_t counter_ = 0;
};

std::string verdict_name(Verdict v);

/// Blocks serving on host:port until the process is stopped.
int serve(Service& service, const std::string& host, int port);

}  // namespace obsdict::service
