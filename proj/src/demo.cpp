#include "obsdict/demo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>

#include "obsdict/degradation.hpp"
#include "obsdict/error.hpp"
#include "obsdict/evaluation.hpp"
#include "obsdict/image_io.hpp"
#include "obsdict/parallel.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace fs = std::filesystem;

namespace obsdict::demo {

namespace {

struct Stroke {
  double x0, y0, x1, y1;  // unit coordinates inside a component box
};

using Shape = std::vector<Stroke>;

void add_box(Shape& s, double x0, double y0, double x1, double y1) {
  s.push_back({x0, y0, x1, y0});
  s.push_back({x0, y1, x1, y1});
  s.push_back({x0, y0, x0, y1});
  s.push_back({x1, y0, x1, y1});
}

const std::map<char32_t, Shape>& primitives() {
  static const std::map<char32_t, Shape> table = [] {
    std::map<char32_t, Shape> t;
    t[U'一'] = {{0.05, 0.5, 0.95, 0.5}};
    t[U'丨'] = {{0.5, 0.05, 0.5, 0.95}};
    t[U'丿'] = {{0.75, 0.1, 0.2, 0.9}};
    t[U'丶'] = {{0.4, 0.35, 0.6, 0.6}};
    t[U'十'] = {{0.08, 0.45, 0.92, 0.45}, {0.5, 0.05, 0.5, 0.95}};
    t[U'人'] = {{0.5, 0.08, 0.12, 0.92}, {0.48, 0.35, 0.88, 0.92}};
    t[U'大'] = {{0.1, 0.35, 0.9, 0.35}, {0.5, 0.05, 0.12, 0.95}, {0.5, 0.35, 0.88, 0.95}};
    t[U'木'] = {{0.08, 0.3, 0.92, 0.3}, {0.5, 0.05, 0.5, 0.95}, {0.5, 0.32, 0.12, 0.8}, {0.5, 0.32, 0.88, 0.8}};
    t[U'土'] = {{0.2, 0.4, 0.8, 0.4}, {0.08, 0.9, 0.92, 0.9}, {0.5, 0.1, 0.5, 0.9}};
    t[U'山'] = {{0.5, 0.08, 0.5, 0.9}, {0.12, 0.35, 0.12, 0.9}, {0.88, 0.35, 0.88, 0.9}, {0.12, 0.9, 0.88, 0.9}};
    t[U'小'] = {{0.5, 0.05, 0.5, 0.9}, {0.3, 0.35, 0.12, 0.7}, {0.7, 0.35, 0.88, 0.7}};
    Shape kou;
    add_box(kou, 0.15, 0.2, 0.85, 0.85);
    t[U'口'] = kou;
    Shape wei;
    add_box(wei, 0.05, 0.05, 0.95, 0.95);
    t[U'囗'] = wei;
    Shape ri;
    add_box(ri, 0.2, 0.05, 0.8, 0.95);
    ri.push_back({0.2, 0.5, 0.8, 0.5});
    t[U'日'] = ri;
    Shape mu;
    add_box(mu, 0.22, 0.05, 0.78, 0.95);
    mu.push_back({0.22, 0.35, 0.78, 0.35});
    mu.push_back({0.22, 0.65, 0.78, 0.65});
    t[U'目'] = mu;
    Shape tian;
    add_box(tian, 0.1, 0.1, 0.9, 0.9);
    tian.push_back({0.1, 0.5, 0.9, 0.5});
    tian.push_back({0.5, 0.1, 0.5, 0.9});
    t[U'田'] = tian;
    Shape yue;
    yue.push_back({0.25, 0.05, 0.2, 0.95});
    yue.push_back({0.25, 0.05, 0.8, 0.05});
    yue.push_back({0.8, 0.05, 0.8, 0.95});
    yue.push_back({0.25, 0.38, 0.8, 0.38});
    yue.push_back({0.25, 0.65, 0.8, 0.65});
    t[U'月'] = yue;
    return t;
  }();
  return table;
}

/// Fixed pseudo-random stroke pattern for components without a primitive.
Shape hashed_shape(char32_t c) {
  SplitMix64 rng(hash64({tag("component"), c}));
  static constexpr double grid[] = {0.15, 0.32, 0.5, 0.68, 0.85};
  auto g = [&] { return grid[rng.below(5)]; };
  Shape s;
  const int n = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < n; ++i) {
    switch (rng.below(6)) {
      case 0: {
        const double y = g();
        s.push_back({rng.uniform(0.05, 0.3), y, rng.uniform(0.7, 0.95), y});
        break;
      }
      case 1: {
        const double x = g();
        s.push_back({x, rng.uniform(0.05, 0.3), x, rng.uniform(0.7, 0.95)});
        break;
      }
      case 2:
        s.push_back({rng.uniform(0.55, 0.85), rng.uniform(0.05, 0.3), rng.uniform(0.1, 0.35), rng.uniform(0.7, 0.95)});
        break;
      case 3:
        s.push_back({rng.uniform(0.2, 0.45), rng.uniform(0.2, 0.45), rng.uniform(0.75, 0.92), rng.uniform(0.75, 0.92)});
        break;
      case 4: {
        const double x0 = rng.uniform(0.1, 0.45);
        const double y0 = rng.uniform(0.1, 0.45);
        add_box(s, x0, y0, x0 + rng.uniform(0.3, 0.5), y0 + rng.uniform(0.3, 0.5));
        break;
      }
      default: {
        const double x = g();
        const double y1 = rng.uniform(0.7, 0.92);
        s.push_back({x, rng.uniform(0.05, 0.3), x, y1});
        s.push_back({x, y1, std::max(0.05, x - 0.25), y1 - 0.1});
        break;
      }
    }
  }
  return s;
}

const Shape& shape_of(char32_t c) {
  static std::map<char32_t, Shape> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  if (auto it = primitives().find(c); it != primitives().end()) return it->second;
  auto it = cache.find(c);
  if (it == cache.end()) it = cache.emplace(c, hashed_shape(c)).first;
  return it->second;
}

// Closed sides of each enclosure: top, bottom, left, right.
struct Sides {
  bool t, b, l, r;
};

std::optional<Sides> frame_sides(ids::LayoutKind k) {
  using K = ids::LayoutKind;
  switch (k) {
    case K::SurroundFull: return Sides{true, true, true, true};
    case K::SurroundAbove: return Sides{true, false, true, true};
    case K::SurroundBelow: return Sides{false, true, true, true};
    case K::SurroundLeftOpenRight: return Sides{true, true, true, false};
    case K::SurroundUpperLeft: return Sides{true, false, true, false};
    case K::SurroundUpperRight: return Sides{true, false, false, true};
    case K::SurroundLowerLeft: return Sides{false, true, true, false};
    default: return std::nullopt;
  }
}

Shape frame_shape(char32_t c, const Sides& s) {
  constexpr double e = 0.08;
  Shape out;
  if (s.t) out.push_back({e, e, 1 - e, e});
  if (s.b) out.push_back({e, 1 - e, 1 - e, 1 - e});
  if (s.l) out.push_back({e, e, e, 1 - e});
  if (s.r) out.push_back({1 - e, e, 1 - e, 1 - e});
  // A per-component tick in the frame band tells enclosures apart.
  SplitMix64 rng(hash64({tag("frame"), c}));
  if (c != U'囗' && rng.below(4) != 0) {
    const double x = rng.uniform(0.3, 0.7);
    if (s.t)
      out.push_back({x, 0.0, x + rng.uniform(-0.1, 0.1), e + 0.06});
    else
      out.push_back({e, x, e + 0.1, x + 0.08});
  }
  return out;
}

struct PlacedStroke {
  double x0, y0, x1, y1, width;
};

double segment_distance(double px, double py, const PlacedStroke& s) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = s.x0 + t * dx - px;
  const double ey = s.y0 + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

void place(const Shape& shape, const Rect& box, const FontStyle& style, std::uint64_t wobble_seed,
           std::vector<PlacedStroke>& out) {
  const double w = box.width();
  const double h = box.height();
  const double pad_x = std::min(2.0, 0.06 * w);
  const double pad_y = std::min(2.0, 0.06 * h);
  SplitMix64 rng(wobble_seed);
  auto jit = [&](double extent) { return style.wobble * extent * rng.uniform(-1.0, 1.0); };
  for (const auto& s : shape) {
    PlacedStroke p;
    p.x0 = box.x0 + pad_x + s.x0 * (w - 2 * pad_x) + jit(w);
    p.y0 = box.y0 + pad_y + s.y0 * (h - 2 * pad_y) + jit(h);
    p.x1 = box.x0 + pad_x + s.x1 * (w - 2 * pad_x) + jit(w);
    p.y1 = box.y0 + pad_y + s.y1 * (h - 2 * pad_y) + jit(h);
    const bool horizontal = std::abs(p.x1 - p.x0) > 2.0 * std::abs(p.y1 - p.y0);
    p.width = style.stroke_width * (horizontal ? style.horizontal_scale : 1.0);
    out.push_back(p);
  }
}

}  // namespace

const std::vector<FontStyle>& font_styles() {
  static const std::vector<FontStyle> styles = {
      {"song", 3.4, 0.7, 0.0, 0.5},
      {"hei", 5.0, 1.0, 0.0, 0.48},
      {"kai", 4.2, 0.85, 0.035, 0.52},
  };
  return styles;
}

GrayImage render_modern(const ids::IdsTree& tree, const FontStyle& style, int size) {
  const int margin = std::max(1, size / 24);
  ids::LayoutParams lp;
  lp.split_ratio = style.split_ratio;
  lp.three_way_jitter = 0.0;
  const auto regions = ids::layout(tree, {margin, margin, size - margin, size - margin}, lp);

  // Frame flags per leaf: the first child of an enclosure, when it is a leaf.
  std::vector<std::optional<Sides>> frames(regions.size());
  {
    std::vector<int> leaf_at(tree.tokens().size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < tree.tokens().size(); ++i)
      if (!ids::is_operator(tree.tokens()[i])) leaf_at[i] = next++;
    std::vector<ids::IdsTree::Node> stack{tree.root()};
    while (!stack.empty()) {
      const auto node = stack.back();
      stack.pop_back();
      if (node.is_leaf()) continue;
      const auto kids = node.children();
      if (auto sides = frame_sides(node.op().layout_kind); sides && kids[0].is_leaf())
        frames[static_cast<std::size_t>(leaf_at[kids[0].position()])] = sides;
      for (const auto& k : kids) stack.push_back(k);
    }
  }

  const std::u32string leaves = tree.leaves();
  std::vector<PlacedStroke> strokes;
  for (const auto& region : regions) {
    const auto li = static_cast<std::size_t>(region.leaf_index);
    const char32_t c = leaves[li];
    const std::uint64_t wseed = hash64({tag("wobble"), fnv1a64(style.name), c, li});
    if (frames[li])
      place(frame_shape(c, *frames[li]), region.box, style, wseed, strokes);
    else
      place(shape_of(c), region.box, style, wseed, strokes);
  }

  GrayImage img{size, size, std::vector<std::uint8_t>(static_cast<std::size_t>(size) * size, 255)};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double cover = 0.0;
      for (const auto& s : strokes) {
        const double d = segment_distance(x + 0.5, y + 0.5, s);
        cover = std::max(cover, std::clamp(s.width / 2.0 + 0.5 - d, 0.0, 1.0));
        if (cover >= 1.0) break;
      }
      img.pixels[static_cast<std::size_t>(y) * size + x] =
          static_cast<std::uint8_t>(std::floor(255.0 * (1.0 - cover) + 0.5));
    }
  return img;
}

void write_font_tree(const ids::Table& table, const fs::path& fonts_dir, int size) {
  for (const auto& style : font_styles()) {
    for (const auto& e : table.entries) {
      const auto tree = ids::parse_utf8(e.ids);
      image_io::write(fonts_dir / style.name / (utf8::codepoint_hex(e.character) + ".png"),
                      render_modern(tree, style, size));
    }
  }
}

synthesis::SrParams strong_params() {
  synthesis::SrParams p;
  p.attrition_prob = 0.3;
  p.merge_radius = 2.0;
  p.warp_amplitude = 4.0;
  p.region_jitter = 3.0;
  return p;
}

Glyph pseudo_ancient(const synthesis::CharSpec& spec, std::uint64_t seed) {
  const auto& gen = synthesis::default_generator();
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : hash64({seed, tag("retry"), static_cast<std::uint64_t>(attempt)});
    SplitMix64 rng(hash64({s, tag("pick")}));
    try {
      const Glyph draft = synthesis::draft_with_retries(gen, spec, hash64({s, tag("fad")}));
      const int idx = 1 + static_cast<int>(rng.below(synthesis::kDefaultVariants - 1));
      const auto params = synthesis::jitter_params(synthesis::schedule(idx, synthesis::kDefaultVariants),
                                                   hash64({s, tag("jitter")}));
      Glyph g = gen.refine(draft, spec.ids, params, hash64({s, tag("sr")}), nullptr);
      g = gen.refine(g, spec.ids, strong_params(), hash64({s, tag("strong")}), nullptr);
      degradation::DegradationSpec d;
      d.kind = degradation::kAllKinds[rng.below(degradation::kAllKinds.size())];
      d.severity = 1;
      d.seed = hash64({s, tag("degrade")});
      return degradation::degrade(g, d);
    } catch (const Error& e) {
      if (e.code() != Errc::ContainmentUnsatisfiable && e.code() != Errc::EmptyDraft) throw;
      if (attempt + 1 >= 8) throw;
    }
  }
}

std::vector<corpus::LabeledImage> make_exemplars(const std::vector<synthesis::CharSpec>& charset, int per_label,
                                                 std::uint64_t seed, unsigned threads) {
  if (per_label < 1) throw Error(Errc::InvalidArgument, "per_label must be >= 1");
  std::vector<corpus::LabeledImage> out(charset.size() * static_cast<std::size_t>(per_label));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& spec = charset[i / static_cast<std::size_t>(per_label)];
    const auto j = static_cast<std::uint64_t>(i % static_cast<std::size_t>(per_label));
    const Glyph g = pseudo_ancient(spec, hash64({tag("exemplar"), seed, spec.label, j}));
    auto& item = out[i];
    item.id = utf8::codepoint_hex(spec.label) + "/" + std::to_string(j) + ".png";
    item.label = spec.label;
    item.image = glyph::render(g);
    item.digest = fnv1a64(image_io::encode_png(item.image));
  });
  return out;
}

void split_validation(const std::vector<char32_t>& train, double validation_ratio, std::uint64_t seed,
                      std::vector<char32_t>& support, std::vector<char32_t>& validation) {
  const auto inner = evaluation::split_characters(train, 1.0 - validation_ratio, hash64({seed, tag("validation")}));
  support = inner.train_labels;
  validation = inner.test_labels;
}

BenchmarkSummary write_benchmark(const fs::path& ids_table, const fs::path& root, const BenchmarkLayout& layout,
                                 unsigned threads) {
  const auto table = ids::load_table(ids_table);
  fs::create_directories(root);
  fs::copy_file(ids_table, root / "ids.tsv", fs::copy_options::overwrite_existing);
  write_font_tree(table, root / "fonts");
  const auto charset = corpus::load_charset(table, root / "fonts");

  std::vector<char32_t> labels;
  for (const auto& s : charset) labels.push_back(s.label);
  const auto split = evaluation::split_characters(labels, layout.ratio, layout.split_seed);
  std::vector<char32_t> support, validation;
  split_validation(split.train_labels, layout.validation_ratio, layout.split_seed, support, validation);

  const auto all = make_exemplars(charset, layout.per_label, layout.query_seed, threads);
  corpus::write_manifest(root / "queries", all);
  const std::set<char32_t> support_set(support.begin(), support.end());
  const std::set<char32_t> validation_set(validation.begin(), validation.end());
  std::vector<corpus::LabeledImage> ex, val;
  for (const auto& item : all) {
    if (support_set.count(item.label)) ex.push_back(item);
    if (validation_set.count(item.label)) val.push_back(item);
  }
  corpus::write_tree(root / "exemplars", ex);
  corpus::write_tree(root / "validation", val);

  BenchmarkSummary s;
  s.labels = charset.size();
  s.queries = all.size();
  s.test_labels = split.test_labels.size();
  s.exemplar_labels = support.size();
  s.validation_labels = validation.size();
  return s;
}

}  // namespace obsdict::demo
