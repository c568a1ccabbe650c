#pragma once

#include "ctxem/kernels.hpp"
#include "ctxem/mixture.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace ctxem {

enum class Algorithm { US, S, CA, WCA, DCA };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
bool uses_labels(Algorithm a);

struct FitConfig {
  double tol = 1e-5;
  int max_iter = 300;
  double ridge = 1e-8;                      // variance floor / covariance ridge
  std::optional<double> iter_budget_ms;     // wall-clock stop, off by default
  std::optional<std::vector<bool>> free;    // over the global vector; masked entries copied from init
  bool tied_covariance = false;             // multivariate only: one pooled covariance (LDA)
  bool keep_trace = true;
  Exec exec = Exec::Parallel;
};

struct FitResult {
  MixtureSpec estimate;
  std::vector<Eigen::VectorXd> theta_trace;  // theta^0 .. theta^t (only when keep_trace)
  bool converged = false;
  int iterations = 0;
  double final_loglik = 0.0;
  Eigen::MatrixXd responsibilities;
};

// Weight on class j inside the log-sum-exp: log pi_j, log p_ij, or both.
Eigen::MatrixXd log_prior_matrix(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data);

Eigen::MatrixXd e_step(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data, Exec exec = Exec::Parallel);

// Weighted MLE for fixed responsibilities. `shape` supplies the family and
// any masked parameters. Weights are updated only when update_weights is set.
MixtureSpec m_step(const MixtureSpec& shape, const LabeledDataset& data, const Eigen::MatrixXd& resp,
                   const FitConfig& config, bool update_weights);

double incomplete_loglik(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                         Exec exec = Exec::Parallel);

struct QH {
  double q = 0.0;
  double h = 0.0;
};

// Q(m_eval | m_at) and the entropy of the responsibilities at m_at.
QH q_and_entropy(Algorithm alg, const MixtureSpec& m_at, const MixtureSpec& m_eval, const LabeledDataset& data);

FitResult fit(Algorithm alg, const LabeledDataset& data, const MixtureSpec& init, const FitConfig& config = {});

// Fraction of labels whose argmax (lowest index on ties) is each class.
std::vector<double> ca_mixing_estimator(const Eigen::MatrixXd& plabels);

// MAP class per row of `x` under m (lowest index on ties).
std::vector<int> classify_map(const MixtureSpec& m, const SampleMatrix& x, Exec exec = Exec::Parallel);

}  // namespace ctxem
