#include "obsdict/ids.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "obsdict/error.hpp"
#include "obsdict/random.hpp"
#include "obsdict/utf8.hpp"

namespace obsdict::ids {

namespace {

constexpr LayoutKind kKinds[12] = {
    LayoutKind::Horizontal,          LayoutKind::Vertical,           LayoutKind::Horizontal3,
    LayoutKind::Vertical3,           LayoutKind::SurroundFull,       LayoutKind::SurroundAbove,
    LayoutKind::SurroundBelow,       LayoutKind::SurroundLeftOpenRight, LayoutKind::SurroundUpperLeft,
    LayoutKind::SurroundUpperRight,  LayoutKind::SurroundLowerLeft,  LayoutKind::Overlaid,
};

int round_px(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

bool is_operator(char32_t c) noexcept { return c >= kFirstOperator && c <= kLastOperator; }

bool is_unsupported_operator(char32_t c) noexcept { return (c >= 0x2FFC && c <= 0x2FFF) || c == 0x31EF; }

IdsOperator op(char32_t c) {
  if (!is_operator(c)) throw Error(Errc::InvalidArgument, "not an IDS operator: U+" + utf8::codepoint_hex(c));
  const int arity = (c == 0x2FF2 || c == 0x2FF3) ? 3 : 2;
  return IdsOperator{c, arity, kKinds[c - kFirstOperator]};
}

// --- tree ---------------------------------------------------------------

bool IdsTree::Node::is_leaf() const noexcept { return !is_operator(tree_->tokens_[pos_]); }

char32_t IdsTree::Node::component() const noexcept { return tree_->tokens_[pos_]; }

IdsOperator IdsTree::Node::op() const { return ids::op(tree_->tokens_[pos_]); }

std::vector<IdsTree::Node> IdsTree::Node::children() const {
  std::vector<Node> out;
  if (is_leaf()) return out;
  const int arity = op().arity;
  std::size_t p = pos_ + 1;
  for (int i = 0; i < arity; ++i) {
    out.push_back(Node(tree_, p));
    p = tree_->subtree_end_[p];
  }
  return out;
}

IdsTree IdsTree::leaf(char32_t component) {
  if (is_operator(component) || is_unsupported_operator(component) || !utf8::is_scalar(component)) {
    throw Error(Errc::InvalidArgument, "leaf component must be a non-operator scalar");
  }
  IdsTree t;
  t.tokens_.push_back(component);
  t.index_subtrees();
  return t;
}

IdsTree IdsTree::internal(IdsOperator o, const std::vector<IdsTree>& children) {
  if (static_cast<int>(children.size()) != o.arity || ids::op(o.codepoint) != o) {
    throw Error(Errc::InvalidArgument, "child count does not match operator arity");
  }
  IdsTree t;
  t.tokens_.push_back(o.codepoint);
  for (const auto& c : children) t.tokens_ += c.tokens_;
  t.index_subtrees();
  return t;
}

void IdsTree::index_subtrees() {
  // Walk backwards: a subtree rooted at i ends where its last child ends.
  subtree_end_.assign(tokens_.size(), 0);
  std::vector<std::uint32_t> stack;  // start positions of completed subtrees
  for (std::size_t i = tokens_.size(); i-- > 0;) {
    if (!is_operator(tokens_[i])) {
      subtree_end_[i] = static_cast<std::uint32_t>(i + 1);
      stack.push_back(static_cast<std::uint32_t>(i));
    } else {
      const int arity = ids::op(tokens_[i]).arity;
      std::uint32_t last = 0;
      for (int k = 0; k < arity; ++k) {
        last = stack.back();
        stack.pop_back();
      }
      subtree_end_[i] = subtree_end_[last];
      stack.push_back(static_cast<std::uint32_t>(i));
    }
  }
}

std::size_t IdsTree::leaf_count() const noexcept {
  std::size_t n = 0;
  for (char32_t c : tokens_) n += is_operator(c) ? 0 : 1;
  return n;
}

std::size_t IdsTree::depth() const noexcept {
  std::size_t best = 0;
  std::vector<std::size_t> pending;  // remaining operands per open operator
  for (char32_t c : tokens_) {
    best = std::max(best, pending.size() + 1);
    if (is_operator(c)) {
      pending.push_back(static_cast<std::size_t>(ids::op(c).arity));
      continue;
    }
    while (!pending.empty() && --pending.back() == 0) pending.pop_back();
  }
  return best;
}

std::u32string IdsTree::leaves() const {
  std::u32string out;
  for (char32_t c : tokens_)
    if (!is_operator(c)) out.push_back(c);
  return out;
}

// --- parse / serialize ------------------------------------------------------

IdsTree parse(std::u32string_view text) {
  std::size_t need = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (need == 0) throw Error(Errc::TrailingInput, "input continues at position " + std::to_string(i));
    if (!utf8::is_scalar(c)) throw Error(Errc::InvalidCodepoint, "non-scalar value at position " + std::to_string(i));
    if (is_unsupported_operator(c)) {
      throw Error(Errc::UnknownOperator, "U+" + utf8::codepoint_hex(c) + " at position " + std::to_string(i));
    }
    --need;
    if (is_operator(c)) need += static_cast<std::size_t>(op(c).arity);
  }
  if (need > 0) throw Error(Errc::TruncatedSequence, std::to_string(need) + " operand(s) missing");
  IdsTree t;
  t.tokens_.assign(text);
  t.index_subtrees();
  return t;
}

IdsTree parse_utf8(std::string_view text) { return parse(utf8::decode(text)); }

std::u32string serialize(const IdsTree& tree) { return tree.tokens(); }

std::string serialize_utf8(const IdsTree& tree) { return utf8::encode(tree.tokens()); }

// --- layout -----------------------------------------------------------------

std::vector<LayoutRegion> layout(const IdsTree& tree, const Rect& canvas, const LayoutParams& params) {
  if (canvas.empty()) throw Error(Errc::InvalidArgument, "degenerate canvas");
  if (!(params.split_ratio >= 0.3 && params.split_ratio <= 0.7)) {
    throw Error(Errc::InvalidArgument, "split_ratio outside [0.3, 0.7]");
  }
  if (!(params.inset_fraction >= 0.1 && params.inset_fraction <= 0.4)) {
    throw Error(Errc::InvalidArgument, "inset_fraction outside [0.1, 0.4]");
  }
  if (!(params.three_way_jitter >= 0.0 && params.three_way_jitter < 1.0 / 6.0)) {
    throw Error(Errc::InvalidArgument, "three_way_jitter outside [0, 1/6)");
  }

  const auto& tokens = tree.tokens();
  std::vector<int> leaf_index(tokens.size(), -1);
  int n_leaves = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!is_operator(tokens[i])) leaf_index[i] = n_leaves++;

  std::vector<LayoutRegion> regions(static_cast<std::size_t>(n_leaves));
  std::vector<std::pair<IdsTree::Node, Rect>> stack;
  stack.emplace_back(tree.root(), canvas);

  auto check = [](const Rect& r) {
    if (r.empty()) throw Error(Errc::DegenerateBox, "canvas too small for tree depth");
    return r;
  };

  while (!stack.empty()) {
    auto [node, box] = stack.back();
    stack.pop_back();
    if (node.is_leaf()) {
      const int li = leaf_index[node.position()];
      regions[static_cast<std::size_t>(li)] = LayoutRegion{li, box};
      continue;
    }
    const auto kids = node.children();
    const int w = box.width();
    const int h = box.height();
    const int ix = round_px(params.inset_fraction * w);
    const int iy = round_px(params.inset_fraction * h);
    std::vector<Rect> boxes;
    switch (node.op().layout_kind) {
      case LayoutKind::Horizontal: {
        const int xs = box.x0 + round_px(params.split_ratio * w);
        boxes = {{box.x0, box.y0, xs, box.y1}, {xs, box.y0, box.x1, box.y1}};
        break;
      }
      case LayoutKind::Vertical: {
        const int ys = box.y0 + round_px(params.split_ratio * h);
        boxes = {{box.x0, box.y0, box.x1, ys}, {box.x0, ys, box.x1, box.y1}};
        break;
      }
      case LayoutKind::Horizontal3:
      case LayoutKind::Vertical3: {
        SplitMix64 rng(hash64({params.jitter_seed, node.position()}));
        const double d = params.three_way_jitter * rng.uniform(-1.0, 1.0);
        const double f0 = 1.0 / 3.0 + d;
        const double f1 = 1.0 / 3.0 - 2.0 * d;
        if (node.op().layout_kind == LayoutKind::Horizontal3) {
          const int a = box.x0 + round_px(f0 * w);
          const int b = box.x0 + round_px((f0 + f1) * w);
          boxes = {{box.x0, box.y0, a, box.y1}, {a, box.y0, b, box.y1}, {b, box.y0, box.x1, box.y1}};
        } else {
          const int a = box.y0 + round_px(f0 * h);
          const int b = box.y0 + round_px((f0 + f1) * h);
          boxes = {{box.x0, box.y0, box.x1, a}, {box.x0, a, box.x1, b}, {box.x0, b, box.x1, box.y1}};
        }
        break;
      }
      case LayoutKind::SurroundFull:
        boxes = {box, {box.x0 + ix, box.y0 + iy, box.x1 - ix, box.y1 - iy}};
        break;
      case LayoutKind::SurroundAbove:  // open below
        boxes = {box, {box.x0 + ix, box.y0 + iy, box.x1 - ix, box.y1}};
        break;
      case LayoutKind::SurroundBelow:  // open above
        boxes = {box, {box.x0 + ix, box.y0, box.x1 - ix, box.y1 - iy}};
        break;
      case LayoutKind::SurroundLeftOpenRight:
        boxes = {box, {box.x0 + ix, box.y0 + iy, box.x1, box.y1 - iy}};
        break;
      case LayoutKind::SurroundUpperLeft:
        boxes = {box, {box.x0 + ix, box.y0 + iy, box.x1, box.y1}};
        break;
      case LayoutKind::SurroundUpperRight:
        boxes = {box, {box.x0, box.y0 + iy, box.x1 - ix, box.y1}};
        break;
      case LayoutKind::SurroundLowerLeft:
        boxes = {box, {box.x0 + ix, box.y0, box.x1, box.y1 - iy}};
        break;
      case LayoutKind::Overlaid:
        boxes = {box, box};
        break;
    }
    // Reverse push keeps preorder processing; order does not affect output.
    for (std::size_t k = kids.size(); k-- > 0;) stack.emplace_back(kids[k], check(boxes[k]));
  }
  return regions;
}

// --- table --------------------------------------------------------------

const TableEntry* Table::find(char32_t c) const {
  for (const auto& e : entries)
    if (e.character == c) return &e;
  return nullptr;
}

Table parse_table(std::string_view text) {
  Table table;
  std::map<char32_t, bool> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    const auto where = "line " + std::to_string(line_no) + ": ";
    const std::size_t t1 = line.find('\t');
    if (t1 == std::string_view::npos) {
      table.warnings.push_back(where + "missing tab separator");
      continue;
    }
    const std::string_view ch = line.substr(0, t1);
    std::string_view rest = line.substr(t1 + 1);
    std::string_view ids_text = rest;
    std::string_view gloss;
    if (const std::size_t t2 = rest.find('\t'); t2 != std::string_view::npos) {
      ids_text = rest.substr(0, t2);
      gloss = rest.substr(t2 + 1);
    }
    try {
      const std::u32string c = utf8::decode(ch);
      if (c.size() != 1) {
        table.warnings.push_back(where + "character field must be a single codepoint");
        continue;
      }
      if (ids_text.find_first_of("({") != std::string_view::npos ||
          ids_text.find("\xEF\xBC\x88") != std::string_view::npos) {  // fullwidth '('
        table.warnings.push_back(where + "nested component IDS skipped");
        continue;
      }
      (void)parse_utf8(ids_text);
      if (seen[c[0]]) continue;
      seen[c[0]] = true;
      table.entries.push_back(TableEntry{c[0], std::string(ids_text), std::string(gloss)});
    } catch (const Error& e) {
      table.warnings.push_back(where + e.what());
    }
    if (nl == text.size()) break;
  }
  return table;
}

Table load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

}  // namespace obsdict::ids
