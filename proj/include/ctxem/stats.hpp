#pragma once

#include <span>
#include <vector>

namespace ctxem {

// Mean of per-class recalls over the classes present in `truth`.
double balanced_accuracy(std::span<const int> pred, std::span<const int> truth, int m);
double accuracy(std::span<const int> pred, std::span<const int> truth);

// Two-sided rank-sum p-value. Exact permutation distribution when the smaller
// sample has fewer than 20 values (and at most 60 values in total), normal approximation with tie and
// continuity correction otherwise.
double wilcoxon_ranksum(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
double stddev(std::span<const double> v);  // sample (n-1) standard deviation

}  // namespace ctxem
