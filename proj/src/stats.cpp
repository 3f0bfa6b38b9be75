#include "rts/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace rts::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double rank_sum_greater(std::span<const double> a, std::span<const double> b) {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  if (na == 0 || nb == 0) return 1.0;

  struct Item {
    double value;
    bool from_a;
  };
  std::vector<Item> items;
  items.reserve(na + nb);
  for (double x : a) items.push_back({x, true});
  for (double x : b) items.push_back({x, false});
  std::sort(items.begin(), items.end(), [](const Item& l, const Item& r) { return l.value < r.value; });

  // Midranks; accumulate the tie term sum(t^3 - t).
  const double n = static_cast<double>(na + nb);
  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].value == items[i].value) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (items[k].from_a) rank_sum_a += midrank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  const double fa = static_cast<double>(na);
  const double fb = static_cast<double>(nb);
  const double u = rank_sum_a - fa * (fa + 1.0) / 2.0;
  const double mu = fa * fb / 2.0;
  const double var = fa * fb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = (u - mu - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double binomial_upper_tail(int n, int k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  double total = 0.0;
  for (int i = k; i <= n; ++i) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0);
    total += std::exp(log_term);
  }
  return std::min(1.0, total);
}

double sign_test_greater(std::span<const double> xs) {
  int positive = 0;
  int nonzero = 0;
  for (double x : xs) {
    if (x == 0.0) continue;
    ++nonzero;
    if (x > 0.0) ++positive;
  }
  return binomial_upper_tail(nonzero, positive);
}

}  // namespace rts::stats
