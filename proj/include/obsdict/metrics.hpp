#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "obsdict/glyph.hpp"

namespace obsdict::metrics {

inline constexpr std::array<int, 5> kTopN = {1, 10, 20, 50, 100};

struct TopNCurve {
  std::array<double, kTopN.size()> accuracy{};  // parallel to kTopN
  std::size_t sample_count = 0;

  double at(int n) const;
  bool monotone() const;
};

/// A ranking is the ordered label list of one query; empty means the query failed.
using Ranking = std::vector<char32_t>;

/// Throws LengthMismatch, InvalidArgument for n < 1.
double topn_accuracy(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths, int n);
TopNCurve topn_curve(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths);

/// Rank of the truth in each ranking (0-based), or -1 when absent. Top-N hit iff 0 <= rank < N.
std::vector<int> truth_ranks(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths);

/// Mean local SSIM, 11x11 Gaussian window (sigma 1.5) over valid positions, L = 1.
double ssim(const Glyph& a, const Glyph& b);
double l1(const Glyph& a, const Glyph& b);

/// Squared diagonal-Gaussian Frechet distance between two embedding sets,
/// reported as "embedding-Frechet (diagonal)". Throws InsufficientSamples,
/// DimensionMismatch.
double frechet_diag(const std::vector<std::vector<float>>& a, const std::vector<std::vector<float>>& b);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr int kBootstrapResamples = 1000;

/// Percentile bootstrap (95%) for each Top-N accuracy from per-sample truth
/// ranks. Bounds are widened to contain the point estimate.
std::array<Interval, kTopN.size()> bootstrap_topn(const std::vector<int>& ranks, std::uint64_t seed,
                                                  int resamples = kBootstrapResamples);

}  // namespace obsdict::metrics
