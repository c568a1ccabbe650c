#include "ctxem/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ctxem {

namespace {
// Beyond this many pooled values the exact table gets large; the normal
// approximation is already accurate there.
constexpr std::size_t kExactMaxTotal = 60;
}  // namespace

double balanced_accuracy(std::span<const int> pred, std::span<const int> truth, int m) {
  if (pred.size() != truth.size()) throw std::invalid_argument("pred and truth differ in length");
  std::vector<double> hit(static_cast<std::size_t>(m), 0.0), tot(static_cast<std::size_t>(m), 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= m) throw std::invalid_argument("class index out of range");
    tot[static_cast<std::size_t>(truth[i])] += 1.0;
    if (pred[i] == truth[i]) hit[static_cast<std::size_t>(truth[i])] += 1.0;
  }
  double s = 0.0;
  int present = 0;
  for (int j = 0; j < m; ++j) {
    if (tot[static_cast<std::size_t>(j)] == 0.0) continue;
    s += hit[static_cast<std::size_t>(j)] / tot[static_cast<std::size_t>(j)];
    ++present;
  }
  return present ? s / present : 0.0;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("pred and truth differ in length");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += pred[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return v.empty() ? std::nan("") : 0.0;
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double wilcoxon_ranksum(std::span<const double> a, std::span<const double> b) {
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  if (n1 == 0 || n2 == 0) throw std::invalid_argument("rank-sum test needs two non-empty samples");

  std::vector<std::pair<double, int>> all;
  all.reserve(n);
  for (double x : a) all.emplace_back(x, 0);
  for (double x : b) all.emplace_back(x, 1);
  std::sort(all.begin(), all.end(), [](auto& l, auto& r) { return l.first < r.first; });

  // Doubled midranks keep everything integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && all[j].first == all[i].first) ++j;
    const long r2 = static_cast<long>(i + 1 + j);  // 2 * average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank2[k] = r2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  long w2 = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (all[k].second == 0) w2 += rank2[k];

  const std::size_t small = std::min(n1, n2);
  if (small < 20 && n <= kExactMaxTotal) {
    // Count subsets of size n1 by doubled rank sum.
    const long total2 = std::accumulate(rank2.begin(), rank2.end(), 0L);
    std::vector<std::vector<double>> dp(n1 + 1, std::vector<double>(static_cast<std::size_t>(total2) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto r = static_cast<std::size_t>(rank2[k]);
      for (std::size_t c = std::min(k + 1, n1); c >= 1; --c)
        for (std::size_t s = static_cast<std::size_t>(total2); s >= r; --s) {
          dp[c][s] += dp[c - 1][s - r];
          if (s == r) break;
        }
    }
    double count = 0.0, lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s <= static_cast<std::size_t>(total2); ++s) {
      const double c = dp[n1][s];
      count += c;
      if (static_cast<long>(s) <= w2) lower += c;
      if (static_cast<long>(s) >= w2) upper += c;
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / count);
  }

  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
  const double w = 0.5 * static_cast<double>(w2);
  const double mu = dn1 * (dn + 1.0) / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double diff = std::abs(w - mu);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace ctxem
