#pragma once

#include "ctxem/estimators.hpp"
#include "ctxem/problems.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ctxem {

struct MetricRow {
  std::string scenario;
  int problem_id = 0;
  std::string algorithm;
  std::optional<double> ne;
  bool converged = false;
  int iterations = 0;
  std::optional<double> d, ase, r_prime, acc, ba, mse, bias_b;
  std::uint64_t seed = 0;
  // Not written to CSV; kept for aggregation.
  bool regular = true;
  bool failed = false;
};

struct AggregateRow {
  std::string algorithm;
  std::optional<double> ne;
  int rows = 0;
  int failed = 0;
  int not_converged = 0;   // hit the iteration cap
  int ridge = 0;           // spectral radius >= 1 at the final point
  int nonregular = 0;      // singular information matrices
  // mean / std over available values; ASE and r' only over converged regular rows
  std::optional<double> d_mean, d_std, ase_mean, ase_std, r_prime_mean, r_prime_std, acc_mean, acc_std, ba_mean,
      ba_std, mse_mean, mse_std, bias_b_mean, bias_b_std;
};

struct SignificanceRow {
  std::string metric;
  std::string alg_a;
  std::optional<double> ne_a;
  std::string alg_b;
  std::optional<double> ne_b;
  int n_a = 0, n_b = 0;
  double p_value = 1.0;
  bool significant = false;  // p < alpha
};

struct ScenarioReport {
  std::vector<MetricRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<SignificanceRow> significance;
};

struct HarnessConfig {
  FitConfig fit;
  std::vector<Algorithm> algorithms{Algorithm::US, Algorithm::S, Algorithm::CA, Algorithm::WCA, Algorithm::DCA};
  double alpha = 0.01;
  Exec exec = Exec::Parallel;  // parallel over problems
};

std::vector<MetricRow> run_problem(const ScenarioSpec& s, const ProblemInstance& p, const HarnessConfig& config);

ScenarioReport run_scenario(const ScenarioSpec& s, const HarnessConfig& config = {});

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows);
std::vector<SignificanceRow> significance(const std::vector<MetricRow>& rows, double alpha);

// Convenience lookups over aggregates (ne is matched within 1e-9).
const AggregateRow* find_aggregate(const std::vector<AggregateRow>& agg, std::string_view alg,
                                   std::optional<double> ne);
std::vector<double> metric_values(const std::vector<MetricRow>& rows, std::string_view alg, std::optional<double> ne,
                                  std::string_view metric);

}  // namespace ctxem
