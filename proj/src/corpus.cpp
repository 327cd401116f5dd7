#include "obsdict/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;

namespace obsdict::corpus {

namespace {

bool is_image(const fs::path& p) { return p.extension() == ".png" || p.extension() == ".pgm"; }

LabeledImage read_labeled(const fs::path& file, std::string id, char32_t label) {
  const auto bytes = image_io::read_bytes(file);
  LabeledImage item;
  item.id = std::move(id);
  item.label = label;
  item.digest = fnv1a64(bytes);
  try {
    item.image = image_io::decode(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), file.string() + ": " + e.what());
  }
  return item;
}

}  // namespace

std::vector<std::string> list_fonts(const fs::path& fonts_dir) {
  if (!fs::is_directory(fonts_dir)) throw Error(Errc::Io, "not a directory: " + fonts_dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(fonts_dir))
    if (e.is_directory()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

std::vector<synthesis::CharSpec> load_charset(const ids::Table& table, const fs::path& fonts_dir, int size,
                                              std::vector<std::string>* warnings) {
  const auto fonts = list_fonts(fonts_dir);
  if (fonts.empty()) throw Error(Errc::Io, "no font directories under " + fonts_dir.string());
  std::vector<synthesis::CharSpec> specs;
  for (const auto& entry : table.entries) {
    synthesis::CharSpec spec{entry.character, ids::parse_utf8(entry.ids), {}};
    const std::string hex = utf8::codepoint_hex(entry.character);
    for (const auto& font : fonts) {
      for (const char* ext : {".png", ".pgm"}) {
        const fs::path p = fonts_dir / font / (hex + ext);
        if (!fs::exists(p)) continue;
        try {
          spec.font_renders.push_back(glyph::normalize(image_io::read(p), size));
        } catch (const Error& e) {
          if (warnings) warnings->push_back(p.string() + ": " + e.what());
        }
        break;
      }
    }
    if (spec.font_renders.empty()) {
      if (warnings) warnings->push_back("no render for U+" + hex + "; skipped");
      continue;
    }
    specs.push_back(std::move(spec));
  }
  std::sort(specs.begin(), specs.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  return specs;
}

std::vector<LabeledImage> load_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(Errc::Io, "cannot open " + manifest.string());
  const fs::path root = manifest.parent_path();
  std::vector<LabeledImage> items;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(Errc::Format, manifest.string() + ":" + std::to_string(line_no) + ": expected two tab-separated fields");
    }
    const std::string rel = line.substr(0, tab);
    const char32_t label = utf8::parse_codepoint_hex(line.substr(tab + 1));
    items.push_back(read_labeled(root / rel, rel, label));
  }
  return items;
}

std::vector<LabeledImage> load_tree(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(Errc::Io, "not a directory: " + root.string());
  std::vector<std::pair<char32_t, fs::path>> files;
  for (const auto& dir : fs::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    char32_t label;
    try {
      label = utf8::parse_codepoint_hex(dir.path().filename().string());
    } catch (const Error&) {
      continue;
    }
    for (const auto& f : fs::directory_iterator(dir.path()))
      if (f.is_regular_file() && is_image(f.path())) files.emplace_back(label, f.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LabeledImage> items;
  for (const auto& [label, path] : files) items.push_back(read_labeled(path, fs::relative(path, root).generic_string(), label));
  return items;
}

std::vector<LabeledImage> load_labeled(const fs::path& path) {
  if (fs::is_regular_file(path)) return load_manifest(path);
  if (fs::is_regular_file(path / "manifest.tsv")) return load_manifest(path / "manifest.tsv");
  return load_tree(path);
}

void write_manifest(const fs::path& root, const std::vector<LabeledImage>& items) {
  fs::create_directories(root);
  std::ostringstream manifest;
  manifest << "# image_relpath\ttruth_codepoint_hex\n";
  for (const auto& item : items) {
    image_io::write(root / item.id, item.image);
    manifest << item.id << '\t' << utf8::codepoint_hex(item.label) << '\n';
  }
  const std::string text = manifest.str();
  image_io::write_bytes(root / "manifest.tsv",
                        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_tree(const fs::path& root, const std::vector<LabeledImage>& items) {
  for (const auto& item : items) {
    image_io::write(root / utf8::codepoint_hex(item.label) / fs::path(item.id).filename(), item.image);
  }
}

}  // namespace obsdict::corpus
