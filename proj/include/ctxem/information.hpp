#pragma once

// Observed complete-data information I_c, missing information I_m and the
// quantities derived from them (I = I_c - I_m, J = I_c^-1 I_m, SEs).
// Matrices are indexed over the free entries of the global parameter vector;
// CA drops the mixing weights (its complete-data likelihood has none).

#include "ctxem/estimators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctxem {

struct InfoOptions {
  std::optional<std::vector<bool>> free;  // over the global vector
};

struct InfoMatrices {
  Eigen::MatrixXd i_c;
  Eigen::MatrixXd i_m;
  Eigen::MatrixXd i_obs;
  Eigen::MatrixXd rate;
  double spectral_radius = 0.0;
  double r_prime = 1.0;
  Eigen::VectorXd se;
  std::vector<std::string> param_index;
  bool reduced = false;
  // False when I_c or I_obs is numerically singular; affected fields are NaN.
  bool regular = true;
};

// Global-vector indices the matrices cover, in order.
std::vector<int> info_indices(Algorithm alg, const MixtureSpec& m, const InfoOptions& opts = {});

Eigen::MatrixXd complete_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                              const Eigen::MatrixXd& resp, const InfoOptions& opts = {});
Eigen::MatrixXd missing_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                             const Eigen::MatrixXd& resp, const InfoOptions& opts = {});

InfoMatrices mip_assemble(const Eigen::MatrixXd& i_c, const Eigen::MatrixXd& i_m,
                          std::vector<std::string> names = {}, bool reduced = false);

// complete_info + missing_info + mip_assemble, responsibilities from alg's E-step at m.
InfoMatrices information(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                         const InfoOptions& opts = {});

// Negative central-difference Hessian of incomplete_loglik over the same indices.
Eigen::MatrixXd finite_difference_observed_info(Algorithm alg, const MixtureSpec& m, const LabeledDataset& data,
                                                const InfoOptions& opts = {}, double rel_step = 1e-4);

}  // namespace ctxem
