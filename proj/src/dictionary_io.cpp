#include "obsdict/dictionary_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace obsdict::dictionary_io {

namespace {

void write_text(const fs::path& p, const std::string& text) {
  image_io::write_bytes(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json params_json(const synthesis::SrParams& p) {
  return {{"attrition_prob", p.attrition_prob},
          {"merge_radius", p.merge_radius},
          {"warp_amplitude", p.warp_amplitude},
          {"region_jitter", p.region_jitter},
          {"containment_min", p.containment_min}};
}

synthesis::SrParams params_from(const json& j) {
  synthesis::SrParams p;
  p.attrition_prob = j.at("attrition_prob").get<double>();
  p.merge_radius = j.at("merge_radius").get<double>();
  p.warp_amplitude = j.at("warp_amplitude").get<double>();
  p.region_jitter = j.at("region_jitter").get<double>();
  p.containment_min = j.at("containment_min").get<double>();
  return p;
}

json trace_json(const synthesis::DictionaryEntry& e) {
  const auto& t = e.trace;
  json regions = json::array();
  for (const auto& r : t.regions) {
    regions.push_back({{"leaf_index", r.leaf_index},
                       {"box", {r.box.x0, r.box.y0, r.box.x1, r.box.y1}},
                       {"draft_fraction", r.draft_fraction},
                       {"refined_fraction", r.refined_fraction},
                       {"attempts", r.attempts}});
  }
  return {{"entry_id", hex16(e.entry_id)},
          {"draft",
           {{"seed", hex16(t.draft.seed)},
            {"font_index", t.draft.font_index},
            {"rotation_deg", t.draft.rotation_deg},
            {"shear", t.draft.shear},
            {"scale", t.draft.scale},
            {"stroke_width", t.draft.stroke_width},
            {"attempts", t.draft.attempts}}},
          {"sr", params_json(t.sr)},
          {"sr_seed", hex16(t.sr_seed)},
          {"regions", regions}};
}

void trace_from(const json& j, synthesis::StageTrace& t) {
  const auto& d = j.at("draft");
  t.draft.seed = parse_hex64(d.at("seed").get<std::string>());
  t.draft.font_index = d.at("font_index").get<int>();
  t.draft.rotation_deg = d.at("rotation_deg").get<double>();
  t.draft.shear = d.at("shear").get<double>();
  t.draft.scale = d.at("scale").get<double>();
  t.draft.stroke_width = d.at("stroke_width").get<int>();
  t.draft.attempts = d.at("attempts").get<int>();
  t.sr = params_from(j.at("sr"));
  t.sr_seed = parse_hex64(j.at("sr_seed").get<std::string>());
  t.regions.clear();
  for (const auto& r : j.at("regions")) {
    const auto b = r.at("box");
    t.regions.push_back(synthesis::RegionTrace{r.at("leaf_index").get<int>(),
                                               Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()},
                                               r.at("draft_fraction").get<double>(),
                                               r.at("refined_fraction").get<double>(), r.at("attempts").get<int>()});
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.empty() || s.size() > 16 || s.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
    throw Error(Errc::Format, "bad 64-bit hex value '" + s + "'");
  }
  return std::stoull(s, nullptr, 16);
}

void save(const fs::path& dir, const synthesis::Dictionary& d, const WriteOptions& opts) {
  fs::create_directories(dir / "images");
  std::ostringstream manifest, traces;
  manifest << "# entry_id_hex\tlabel_codepoint_hex\tvariant_index\tseed_hex\tids_string\timage_relpath\tgeneration\n";
  for (const auto& e : d.entries) {
    const std::string rel = "images/" + hex16(e.entry_id) + ".png";
    manifest << hex16(e.entry_id) << '\t' << utf8::codepoint_hex(e.label) << '\t' << e.variant_index << '\t'
             << hex16(e.seed) << '\t' << e.ids << '\t' << rel << '\t' << d.generation << '\n';
    traces << trace_json(e).dump() << '\n';
    const fs::path target = dir / rel;
    std::error_code ec;
    fs::remove(target, ec);
    if (opts.link_from && opts.unchanged && opts.unchanged->count(e.entry_id)) {
      fs::create_hard_link(*opts.link_from / rel, target, ec);
      if (!ec) continue;
    }
    image_io::write_glyph(target, e.glyph);
  }
  write_text(dir / "manifest.tsv", manifest.str());
  write_text(dir / "stage_trace.jsonl", traces.str());

  json schedule = json::array();
  for (int i = 0; i < d.variants_per_label; ++i) schedule.push_back(params_json(synthesis::schedule(i, d.variants_per_label)));
  json config = {{"variants_per_label", d.variants_per_label},
                 {"global_seed", hex16(d.global_seed)},
                 {"generator_id", d.generator_id},
                 {"generation", d.generation},
                 {"charset_size", d.charset.size()},
                 {"charset_digest", hex16(d.charset_digest)},
                 {"config_fingerprint", hex16(d.config_fingerprint)},
                 {"schedule", schedule}};
  if (opts.report) {
    json failures = json::array();
    for (const auto& f : opts.report->failures)
      failures.push_back({{"label", utf8::codepoint_hex(f.label)}, {"variant_index", f.variant_index}, {"error", f.error}});
    config["build_report"] = {{"font_count", opts.report->font_count},
                              {"entry_count", opts.report->entry_count},
                              {"failures", failures}};
  }
  write_text(dir / "config.json", config.dump(2) + "\n");
}

synthesis::Dictionary load(const fs::path& dir) {
  std::ifstream cin(dir / "config.json");
  if (!cin) throw Error(Errc::Io, "cannot open " + (dir / "config.json").string());
  synthesis::Dictionary d;
  json config;
  try {
    config = json::parse(cin);
    d.variants_per_label = config.at("variants_per_label").get<int>();
    d.global_seed = parse_hex64(config.at("global_seed").get<std::string>());
    d.generator_id = config.at("generator_id").get<std::string>();
    d.generation = config.at("generation").get<int>();
    d.charset_digest = parse_hex64(config.at("charset_digest").get<std::string>());
    d.config_fingerprint = parse_hex64(config.at("config_fingerprint").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(Errc::Format, "config.json: " + std::string(e.what()));
  }
  if (synthesis::config_fingerprint(d.variants_per_label, d.global_seed, d.generator_id, d.charset_digest) !=
      d.config_fingerprint) {
    throw Error(Errc::Format, "config fingerprint does not match the stored build parameters");
  }

  std::ifstream min(dir / "manifest.tsv");
  if (!min) throw Error(Errc::Io, "cannot open " + (dir / "manifest.tsv").string());
  std::string line;
  int line_no = 0;
  std::set<char32_t> labels;
  while (std::getline(min, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto f = split_tabs(line);
    if (f.size() != 7) throw Error(Errc::Format, "manifest.tsv:" + std::to_string(line_no) + ": expected 7 fields");
    synthesis::DictionaryEntry e;
    e.entry_id = parse_hex64(f[0]);
    e.label = utf8::parse_codepoint_hex(f[1]);
    e.variant_index = std::stoi(f[2]);
    e.seed = parse_hex64(f[3]);
    e.ids = f[4];
    e.glyph = image_io::read_glyph(dir / f[5]);
    if (std::stoi(f[6]) != d.generation) {
      throw Error(Errc::Format, "manifest.tsv:" + std::to_string(line_no) + ": generation disagrees with config.json");
    }
    labels.insert(e.label);
    d.entries.push_back(std::move(e));
  }
  d.charset.assign(labels.begin(), labels.end());

  std::ifstream tin(dir / "stage_trace.jsonl");
  if (tin) {
    std::size_t i = 0;
    while (std::getline(tin, line) && i < d.entries.size()) {
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        if (parse_hex64(j.at("entry_id").get<std::string>()) == d.entries[i].entry_id) trace_from(j, d.entries[i].trace);
      } catch (const json::exception& e) {
        throw Error(Errc::Format, "stage_trace.jsonl: " + std::string(e.what()));
      }
      ++i;
    }
  }
  return d;
}

}  // namespace obsdict::dictionary_io

namespace obsdict::dictionary_io {

void save_sources(const fs::path& dir, const std::vector<synthesis::CharSpec>& charset) {
  for (const auto& spec : charset) {
    spec.validate();
    const fs::path sub = dir / "sources" / utf8::codepoint_hex(spec.label);
    for (std::size_t i = 0; i < spec.font_renders.size(); ++i)
      image_io::write_glyph(sub / (std::to_string(i) + ".png"), spec.font_renders[i]);
  }
}

std::vector<synthesis::CharSpec> load_sources(const fs::path& dir, const synthesis::Dictionary& d) {
  std::vector<synthesis::CharSpec> out;
  for (char32_t label : d.charset) {
    const auto it = std::find_if(d.entries.begin(), d.entries.end(), [&](const auto& e) { return e.label == label; });
    synthesis::CharSpec spec{label, ids::parse_utf8(it->ids), {}};
    const fs::path sub = dir / "sources" / utf8::codepoint_hex(label);
    for (int i = 0;; ++i) {
      const fs::path p = sub / (std::to_string(i) + ".png");
      if (!fs::exists(p)) break;
      spec.font_renders.push_back(image_io::read_glyph(p));
    }
    if (spec.font_renders.empty()) throw Error(Errc::Format, "no source renders under " + sub.string());
    out.push_back(std::move(spec));
  }
  if (synthesis::charset_digest(out) != d.charset_digest) {
    throw Error(Errc::Format, "source renders in " + dir.string() + " do not match the dictionary's charset digest");
  }
  return out;
}

std::vector<std::pair<char32_t, Glyph>> modern_renders(const std::vector<synthesis::CharSpec>& charset) {
  std::vector<std::pair<char32_t, Glyph>> out;
  for (const auto& s : charset) out.emplace_back(s.label, s.font_renders.front());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

}  // namespace obsdict::dictionary_io
