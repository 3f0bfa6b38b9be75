#pragma once

#include <span>

namespace rts::stats {

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);

// One-sided Wilcoxon rank-sum (Mann-Whitney U) test of H1: a tends to be
// larger than b. Normal approximation with tie and continuity correction.
// Returns 1 when every value is tied.
double rank_sum_greater(std::span<const double> a, std::span<const double> b);

// One-sided exact sign test of H1: median of xs > 0. Zeros are dropped.
double sign_test_greater(std::span<const double> xs);

// P(X >= k) for X ~ Binomial(n, 1/2).
double binomial_upper_tail(int n, int k);

}  // namespace rts::stats
