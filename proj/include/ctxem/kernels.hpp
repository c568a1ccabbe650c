#pragma once

// Batched density and responsibility kernels. Exec::Serial goes through the
// scalar per-observation API and is kept as the reference; Exec::Parallel
// precomputes per-component constants and splits rows across OpenMP threads.

#include "ctxem/mixture.hpp"

namespace ctxem {

enum class Exec { Serial, Parallel };

// N x M matrix of log f_j(x_i).
Eigen::MatrixXd log_density_matrix(const MixtureSpec& m, const SampleMatrix& x, Exec exec = Exec::Parallel);

// Row-wise softmax in place. On return `logits` holds normalized rows; if
// `log_norm` is non-null it receives each row's log-sum-exp.
void normalize_log_rows(Eigen::MatrixXd& logits, Eigen::VectorXd* log_norm, Exec exec = Exec::Parallel);

// Sum over rows of log-sum-exp.
double sum_log_sum_exp(const Eigen::MatrixXd& logits, Exec exec = Exec::Parallel);

}  // namespace ctxem
