#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "obsdict/glyph.hpp"

namespace obsdict::encoder {

using Embedding = std::vector<float>;

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  /// Unit-norm feature vector. Throws EmptyGlyph.
  virtual Embedding embed(const Glyph& g) const = 0;
};

/// Handcrafted reference backend, 438 dims:
///   [0, 144)   12x12 block means of intensity
///   [144, 432) 6x6 cells x 8 unsigned orientation bins, magnitude weighted
///   [432, 438) ink fraction, centroid x, y, mu20, mu02, mu11
/// Each section is scaled to unit norm and weighted before the final
/// normalization so no section dominates by raw magnitude.
class DescriptorEncoder final : public Encoder {
 public:
  static constexpr int kBlocks = 12;
  static constexpr int kCells = 6;
  static constexpr int kBins = 8;
  static constexpr int kStats = 6;
  static constexpr int kDim = kBlocks * kBlocks + kCells * kCells * kBins + kStats;
  static constexpr float kBlockWeight = 1.0f;
  static constexpr float kOrientWeight = 1.0f;
  static constexpr float kStatsWeight = 0.25f;

  std::string id() const override { return "descriptor-v1"; }
  int dim() const override { return kDim; }
  Embedding embed(const Glyph& g) const override;

  /// Section values before weighting and normalization, for tests.
  static std::vector<double> raw_features(const Glyph& g);
};

const Encoder& default_encoder();

double cosine(std::span<const float> a, std::span<const float> b);

/// Row-major count x dim matrix.
struct EmbeddingMatrix {
  std::uint32_t dim = 0;
  std::vector<float> data;

  std::size_t count() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  void append(std::span<const float> v);
  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

inline constexpr std::uint32_t kStoreVersion = 1;

/// "OBSE", u32 version, u32 dim, u64 count, little-endian f32 rows.
std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& m);
EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes);
void write_store(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_store(const std::filesystem::path& path);

}  // namespace obsdict::encoder
