#pragma once

// Ideographic Description Sequences: prefix-notation trees of components
// joined by the twelve spatial operators U+2FF0..U+2FFB.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obsdict/geometry.hpp"

namespace obsdict::ids {

enum class LayoutKind {
  Horizontal,
  Vertical,
  Horizontal3,
  Vertical3,
  SurroundFull,
  SurroundAbove,
  SurroundBelow,
  SurroundLeftOpenRight,
  SurroundUpperLeft,
  SurroundUpperRight,
  SurroundLowerLeft,
  Overlaid,
};

struct IdsOperator {
  char32_t codepoint;
  int arity;
  LayoutKind layout_kind;

  friend bool operator==(const IdsOperator&, const IdsOperator&) = default;
};

inline constexpr char32_t kFirstOperator = 0x2FF0;
inline constexpr char32_t kLastOperator = 0x2FFB;

bool is_operator(char32_t c) noexcept;
/// Codepoints that Unicode later added as description characters; the grammar
/// here rejects them.
bool is_unsupported_operator(char32_t c) noexcept;
/// Throws Error(InvalidArgument) when c is not in U+2FF0..U+2FFB.
IdsOperator op(char32_t c);

/// Parsed sequence, stored flat in preorder so arbitrarily deep inputs never
/// recurse on construction or destruction.
class IdsTree {
 public:
  class Node {
   public:
    bool is_leaf() const noexcept;
    char32_t component() const noexcept;
    IdsOperator op() const;
    std::vector<Node> children() const;
    std::size_t position() const noexcept { return pos_; }

   private:
    friend class IdsTree;
    Node(const IdsTree* tree, std::size_t pos) : tree_(tree), pos_(pos) {}
    const IdsTree* tree_;
    std::size_t pos_;
  };

  static IdsTree leaf(char32_t component);
  static IdsTree internal(IdsOperator op, const std::vector<IdsTree>& children);

  Node root() const noexcept { return Node(this, 0); }
  bool is_leaf() const noexcept { return root().is_leaf(); }
  std::size_t leaf_count() const noexcept;
  std::size_t depth() const noexcept;
  /// Leaf components in preorder.
  std::u32string leaves() const;
  /// Preorder token sequence, i.e. the serialized form.
  const std::u32string& tokens() const noexcept { return tokens_; }

  friend bool operator==(const IdsTree& a, const IdsTree& b) { return a.tokens_ == b.tokens_; }

 private:
  friend IdsTree parse(std::u32string_view text);
  IdsTree() = default;
  void index_subtrees();

  std::u32string tokens_;
  std::vector<std::uint32_t> subtree_end_;
};

/// Recursive-descent parse consuming the whole input. Raises one of
/// TruncatedSequence, TrailingInput, UnknownOperator (U+2FFC.. additions) or
/// InvalidCodepoint (non-scalar input), never anything else.
IdsTree parse(std::u32string_view text);
/// UTF-8 front end; additionally raises InvalidUtf8.
IdsTree parse_utf8(std::string_view text);

std::u32string serialize(const IdsTree& tree);
std::string serialize_utf8(const IdsTree& tree);

struct LayoutParams {
  double split_ratio = 0.5;
  double inset_fraction = 0.25;
  /// Half-width of the symmetric jitter applied to three-way splits.
  double three_way_jitter = 0.06;
  std::uint64_t jitter_seed = 0;
};

struct LayoutRegion {
  int leaf_index;
  Rect box;

  friend bool operator==(const LayoutRegion&, const LayoutRegion&) = default;
};

/// One region per leaf in preorder. Throws DegenerateBox when a box collapses
/// and InvalidArgument for out-of-range params.
std::vector<LayoutRegion> layout(const IdsTree& tree, const Rect& canvas, const LayoutParams& params = {});

struct TableEntry {
  char32_t character;
  std::string ids;  // UTF-8, exactly as in the file
  std::string gloss;
};

struct Table {
  std::vector<TableEntry> entries;  // file order, first decomposition per character
  std::vector<std::string> warnings;

  const TableEntry* find(char32_t c) const;
};

/// `<char>\t<ids>[\t<gloss>]` per line, `#` comments. Rows whose IDS nests an
/// unencoded component in parentheses or braces are skipped with a warning, as
/// are rows that fail to parse. Later duplicates of a character are ignored.
Table parse_table(std::string_view text);
Table load_table(const std::filesystem::path& path);

}  // namespace obsdict::ids
