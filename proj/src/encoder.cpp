#include "obsdict/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "obsdict/error.hpp"
#include "obsdict/image_io.hpp"

namespace obsdict::encoder {

namespace {

void normalize_section(std::vector<double>& v, std::size_t begin, std::size_t end, double weight) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i] * v[i];
  if (s <= 0.0) return;
  const double scale = weight / std::sqrt(s);
  for (std::size_t i = begin; i < end; ++i) v[i] *= scale;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[off + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

std::vector<double> DescriptorEncoder::raw_features(const Glyph& g) {
  const int n = g.size();
  if (n < kBlocks) throw Error(Errc::InvalidArgument, "glyph smaller than the block grid");
  std::vector<double> f(kDim, 0.0);
  auto px = [&](int x, int y) -> double {
    x = std::clamp(x, 0, n - 1);
    y = std::clamp(y, 0, n - 1);
    return g.at(x, y);
  };

  // (a) block means
  for (int by = 0; by < kBlocks; ++by)
    for (int bx = 0; bx < kBlocks; ++bx) {
      const int x0 = bx * n / kBlocks, x1 = (bx + 1) * n / kBlocks;
      const int y0 = by * n / kBlocks, y1 = (by + 1) * n / kBlocks;
      double s = 0.0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) s += g.at(x, y);
      f[static_cast<std::size_t>(by * kBlocks + bx)] = s / ((x1 - x0) * (y1 - y0));
    }

  // (b) orientation histograms, linear vote between the two nearest bins
  constexpr std::size_t kOrient = kBlocks * kBlocks;
  for (int y = 0; y < n; ++y) {
    const int cy = std::min(kCells - 1, y * kCells / n);
    for (int x = 0; x < n; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += std::numbers::pi;
      if (ang >= std::numbers::pi) ang -= std::numbers::pi;
      const double pos = ang / std::numbers::pi * kBins - 0.5;
      const int b0 = static_cast<int>(std::floor(pos));
      const double w1 = pos - b0;
      const int lo = (b0 + kBins) % kBins;
      const int hi = (b0 + 1) % kBins;
      const int cx = std::min(kCells - 1, x * kCells / n);
      const std::size_t base = kOrient + static_cast<std::size_t>((cy * kCells + cx) * kBins);
      f[base + static_cast<std::size_t>(lo)] += mag * (1.0 - w1);
      f[base + static_cast<std::size_t>(hi)] += mag * w1;
    }
  }

  // (c) shape statistics in canvas-normalized coordinates
  constexpr std::size_t kStat = kOrient + kCells * kCells * kBins;
  double m = 0, mx = 0, my = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double v = g.at(x, y);
      m += v;
      mx += v * (x + 0.5) / n;
      my += v * (y + 0.5) / n;
    }
  if (m > 0) {
    const double cx = mx / m, cy = my / m;
    double m20 = 0, m02 = 0, m11 = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double v = g.at(x, y);
        const double dx = (x + 0.5) / n - cx;
        const double dy = (y + 0.5) / n - cy;
        m20 += v * dx * dx;
        m02 += v * dy * dy;
        m11 += v * dx * dy;
      }
    f[kStat + 0] = m / (static_cast<double>(n) * n);
    f[kStat + 1] = cx;
    f[kStat + 2] = cy;
    f[kStat + 3] = m20 / m;
    f[kStat + 4] = m02 / m;
    f[kStat + 5] = m11 / m;
  }
  return f;
}

Embedding DescriptorEncoder::embed(const Glyph& g) const {
  if (g.empty()) throw Error(Errc::EmptyGlyph, "cannot embed an empty glyph");
  std::vector<double> f = raw_features(g);
  constexpr std::size_t a = kBlocks * kBlocks;
  constexpr std::size_t b = a + kCells * kCells * kBins;
  normalize_section(f, 0, a, kBlockWeight);
  normalize_section(f, a, b, kOrientWeight);
  normalize_section(f, b, kDim, kStatsWeight);
  double s = 0.0;
  for (double v : f) s += v * v;
  if (s <= 0.0) throw Error(Errc::EmptyGlyph, "all-zero feature vector");
  const double inv = 1.0 / std::sqrt(s);
  Embedding e(kDim);
  for (std::size_t i = 0; i < f.size(); ++i) e[i] = static_cast<float>(f[i] * inv);
  return e;
}

const Encoder& default_encoder() {
  static const DescriptorEncoder enc;
  return enc;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "cosine of vectors with different dims");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void EmbeddingMatrix::append(std::span<const float> v) {
  if (dim == 0) dim = static_cast<std::uint32_t>(v.size());
  if (v.size() != dim) throw Error(Errc::DimensionMismatch, "row has " + std::to_string(v.size()) + " dims, expected " + std::to_string(dim));
  data.insert(data.end(), v.begin(), v.end());
}

std::vector<std::uint8_t> encode_store(const EmbeddingMatrix& m) {
  std::vector<std::uint8_t> out{'O', 'B', 'S', 'E'};
  put_u32(out, kStoreVersion);
  put_u32(out, m.dim);
  put_u64(out, m.count());
  out.reserve(out.size() + m.data.size() * 4);
  for (float v : m.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix decode_store(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "OBSE", 4) != 0) throw Error(Errc::Format, "not an embedding store");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kStoreVersion) throw Error(Errc::Format, "unsupported store version " + std::to_string(version));
  EmbeddingMatrix m;
  m.dim = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  const std::uint64_t count = get_le(bytes, 12, 8);
  if (m.dim == 0 && count != 0) throw Error(Errc::Format, "zero dim with rows");
  if ((bytes.size() - 20) / 4 != count * m.dim || (bytes.size() - 20) % 4 != 0) {
    throw Error(Errc::Format, "embedding store length does not match its header");
  }
  m.data.resize(count * m.dim);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    m.data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(bytes, 20 + 4 * i, 4)));
  return m;
}

void write_store(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  image_io::write_bytes(path, encode_store(m));
}

EmbeddingMatrix read_store(const std::filesystem::path& path) { return decode_store(image_io::read_bytes(path)); }

}  // namespace obsdict::encoder
