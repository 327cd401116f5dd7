#include "obsdict/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "obsdict/error.hpp"
#include "obsdict/random.hpp"

namespace obsdict::metrics {

double TopNCurve::at(int n) const {
  for (std::size_t i = 0; i < kTopN.size(); ++i)
    if (kTopN[i] == n) return accuracy[i];
  throw Error(Errc::InvalidArgument, "N not on the reporting grid: " + std::to_string(n));
}

bool TopNCurve::monotone() const {
  for (std::size_t i = 1; i < accuracy.size(); ++i)
    if (accuracy[i] < accuracy[i - 1]) return false;
  return true;
}

std::vector<int> truth_ranks(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths) {
  if (rankings.size() != truths.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(rankings.size()) + " rankings vs " +
                                          std::to_string(truths.size()) + " truths");
  }
  std::vector<int> ranks(rankings.size(), -1);
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& r = rankings[i];
    const auto it = std::find(r.begin(), r.end(), truths[i]);
    if (it != r.end()) ranks[i] = static_cast<int>(it - r.begin());
  }
  return ranks;
}

namespace {

double hit_rate(const std::vector<int>& ranks, int n) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (int r : ranks)
    if (r >= 0 && r < n) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

}  // namespace

double topn_accuracy(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths, int n) {
  if (n < 1) throw Error(Errc::InvalidArgument, "N must be >= 1");
  return hit_rate(truth_ranks(rankings, truths), n);
}

TopNCurve topn_curve(const std::vector<Ranking>& rankings, const std::vector<char32_t>& truths) {
  const auto ranks = truth_ranks(rankings, truths);
  TopNCurve c;
  c.sample_count = ranks.size();
  for (std::size_t i = 0; i < kTopN.size(); ++i) c.accuracy[i] = hit_rate(ranks, kTopN[i]);
  return c;
}

double ssim(const Glyph& a, const Glyph& b) {
  if (a.size() != b.size()) throw Error(Errc::SizeMismatch, "ssim needs equal sizes");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const int n = a.size();
  if (n < kWin) throw Error(Errc::SizeMismatch, "glyph smaller than the SSIM window");

  std::array<double, kWin> k1{};
  double ksum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    k1[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += k1[static_cast<std::size_t>(i)];
  }
  for (double& v : k1) v /= ksum;

  const int m = n - kWin + 1;
  double total = 0.0;
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = 0; j < kWin; ++j)
        for (int i = 0; i < kWin; ++i) {
          const double w = k1[static_cast<std::size_t>(i)] * k1[static_cast<std::size_t>(j)];
          const double va = a.at(x + i, y + j);
          const double vb = b.at(x + i, y + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * (va * vb);
        }
      const double var_a = saa - ma * ma;
      const double var_b = sbb - mb * mb;
      const double cov = sab - ma * mb;
      // Products ordered so that swapping a and b gives the same bits.
      total += ((2.0 * (ma * mb) + c1) * (2.0 * cov + c2)) / (((ma * ma + mb * mb) + c1) * ((var_a + var_b) + c2));
    }
  return total / (static_cast<double>(m) * m);
}

double l1(const Glyph& a, const Glyph& b) {
  if (a.size() != b.size()) throw Error(Errc::SizeMismatch, "l1 needs equal sizes");
  double s = 0.0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) s += std::abs(static_cast<double>(pa[i]) - pb[i]);
  return s / static_cast<double>(pa.size());
}

double frechet_diag(const std::vector<std::vector<float>>& a, const std::vector<std::vector<float>>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error(Errc::InsufficientSamples, "frechet_diag needs >= 2 samples per set");
  const std::size_t dim = a.front().size();
  for (const auto* set : {&a, &b})
    for (const auto& v : *set)
      if (v.size() != dim) throw Error(Errc::DimensionMismatch, "embedding dimensions differ");

  auto moments = [dim](const std::vector<std::vector<float>>& s, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(dim, 0.0);
    var.assign(dim, 0.0);
    for (const auto& v : s)
      for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
    for (double& m : mean) m /= static_cast<double>(s.size());
    for (const auto& v : s)
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = v[i] - mean[i];
        var[i] += d * d;
      }
    for (double& x : var) x /= static_cast<double>(s.size());
  };
  std::vector<double> ma, va, mb, vb;
  moments(a, ma, va);
  moments(b, mb, vb);
  double d2 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double dm = ma[i] - mb[i];
    d2 += dm * dm + (va[i] + vb[i]) - 2.0 * std::sqrt(va[i] * vb[i]);
  }
  return std::max(0.0, d2);
}

std::array<Interval, kTopN.size()> bootstrap_topn(const std::vector<int>& ranks, std::uint64_t seed, int resamples) {
  std::array<Interval, kTopN.size()> out{};
  const std::size_t n = ranks.size();
  if (n == 0) return out;
  std::array<std::vector<double>, kTopN.size()> samples;
  for (auto& s : samples) s.reserve(static_cast<std::size_t>(resamples));
  SplitMix64 rng(hash64({tag("bootstrap"), seed}));
  std::vector<int> draw(n);
  for (int r = 0; r < resamples; ++r) {
    for (auto& d : draw) d = ranks[rng.below(n)];
    for (std::size_t i = 0; i < kTopN.size(); ++i) samples[i].push_back(hit_rate(draw, kTopN[i]));
  }
  for (std::size_t i = 0; i < kTopN.size(); ++i) {
    auto& s = samples[i];
    std::sort(s.begin(), s.end());
    // Nearest-rank percentiles.
    const auto lo_idx = static_cast<std::size_t>(std::ceil(0.025 * resamples)) - 1;
    const auto hi_idx = static_cast<std::size_t>(std::ceil(0.975 * resamples)) - 1;
    const double point = hit_rate(ranks, kTopN[i]);
    out[i].lo = std::min(s[lo_idx], point);
    out[i].hi = std::max(s[hi_idx], point);
  }
  return out;
}

}  // namespace obsdict::metrics
