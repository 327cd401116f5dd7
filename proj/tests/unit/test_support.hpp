#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "obsdict/demo.hpp"
#include "obsdict/glyph.hpp"
#include "obsdict/ids.hpp"
#include "obsdict/synthesis.hpp"

#ifndef OBSDICT_DATA_DIR
#error "OBSDICT_DATA_DIR must point at the bundled data directory"
#endif

namespace test_support {

inline std::filesystem::path data_dir() { return OBSDICT_DATA_DIR; }

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("obsdict_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const obsdict::ids::Table& demo_table() {
  static const auto table = obsdict::ids::load_table(data_dir() / "demo_ids.tsv");
  return table;
}

/// First `n` demo characters with in-memory procedural font renders.
inline std::vector<obsdict::synthesis::CharSpec> small_charset(std::size_t n, std::size_t fonts = 3) {
  std::vector<obsdict::synthesis::CharSpec> out;
  const auto& styles = obsdict::demo::font_styles();
  for (const auto& e : demo_table().entries) {
    if (out.size() == n) break;
    obsdict::synthesis::CharSpec s{e.character, obsdict::ids::parse_utf8(e.ids), {}};
    for (std::size_t f = 0; f < fonts && f < styles.size(); ++f)
      s.font_renders.push_back(obsdict::glyph::normalize(obsdict::demo::render_modern(s.ids, styles[f])));
    out.push_back(std::move(s));
  }
  return out;
}

/// Normalized first-font renders of the first `n` demo characters.
inline std::vector<obsdict::Glyph> corpus_glyphs(std::size_t n) {
  std::vector<obsdict::Glyph> out;
  for (const auto& s : small_charset(n, 1)) out.push_back(s.font_renders.front());
  return out;
}

/// Cached 24-label, K=4 dictionary shared by the retrieval-level tests.
inline const obsdict::synthesis::Dictionary& small_dictionary() {
  static const auto d = obsdict::synthesis::build_dictionary(small_charset(24), 4, 11, nullptr, 0);
  return d;
}

inline obsdict::Glyph bar(int x0, int y0, int x1, int y1, int size = obsdict::kGlyphSize) {
  obsdict::Glyph g(size);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) g.at(x, y) = 1.0f;
  return g;
}

}  // namespace test_support
