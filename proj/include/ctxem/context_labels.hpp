#pragma once

#include "ctxem/mixture.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace ctxem {

// A probabilistic label: one probability per class.
using ProbLabel = Eigen::VectorXd;

// 1 + sum_j p_j log_M p_j; zero entries contribute nothing.
double negentropy(const Eigen::Ref<const Eigen::VectorXd>& p);

// Peaked-uniform label with negentropy `ne`: mass q on top_class (0-based),
// (1-q)/(M-1) elsewhere. ne = 1 gives the one-hot label.
ProbLabel make_label(double ne, int m, int top_class);

enum class ContextMode { Correct, Wrong, Mixed };

struct ContextSpec {
  ContextMode mode = ContextMode::Correct;
  double ne = 0.0;            // Correct / Wrong
  double wrong_frac = 0.0;    // Wrong
  double ne_low = 0.0;        // Mixed
  double ne_high = 0.5;       // Mixed
};

// N x M matrix, one label per row.
Eigen::MatrixXd make_context_labels(std::span<const int> truth, int m, const ContextSpec& spec, Rng& rng);

// Mean row negentropy.
double mean_negentropy(const Eigen::MatrixXd& labels);

struct ContextModel {
  Eigen::VectorXd prior;                          // p(c), length L
  std::optional<Eigen::MatrixXd> z_given_c;       // L x M, rows p(z|c)
  std::optional<Eigen::MatrixXd> c_given_z;       // M x L, rows p(c|z)
  bool observed = true;
};

void validate(const ContextModel& ctx);

// sum_c p(c) p(z|c)
ProbLabel derive_label_ca_latent(const ContextModel& ctx);
// p(z|c) for the observed c (0-based)
ProbLabel derive_label_ca_observed(const ContextModel& ctx, int c);
// p(c|z) / p(c), normalized over z
ProbLabel derive_label_wca(const ContextModel& ctx, int c);

}  // namespace ctxem
