#pragma once

// Fixed small experiments: the one-free-parameter likelihood landscape and the
// missing-information demonstration over NE.

#include "ctxem/information.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ctxem {

struct LandscapeSetup {
  double pi1 = 0.1;
  double mu1 = 0.0;   // true value of the free parameter
  double mu2 = 1.0;
  double s1 = 0.5;
  double s2 = 3.0;
  int n = 100;
  double init_mu1 = 2.0;
  double grid_lo = -3.0;
  double grid_hi = 4.0;
  int grid_points = 400;
  std::vector<double> ne_set{0.0, 0.7, 0.99};
  std::uint64_t seed = 7;
};

struct LandscapePoint {
  std::string algorithm;
  std::optional<double> ne;
  double mu1 = 0.0;
  double loglik = 0.0;
  std::optional<double> q_plus_h;  // first-iteration lower bound (iterative estimators only)
  double fitted_mu1 = 0.0;
  double first_iter_mu1 = 0.0;
};

struct Landscape {
  LabeledDataset data;
  MixtureSpec truth;
  MixtureSpec init;
  std::vector<double> grid;
  std::vector<LandscapePoint> points;
};

MixtureSpec landscape_spec(const LandscapeSetup& s, double mu1, double pi1);
// Global-vector mask with only the first component's mean free.
std::vector<bool> landscape_mask(const MixtureSpec& m);
LabeledDataset landscape_data(const LandscapeSetup& s);

Landscape landscape(const LandscapeSetup& s);
void write_landscape_csv(std::ostream& os, const std::vector<LandscapePoint>& pts);

struct MipSetup {
  double pi1 = 0.6;
  double mu1 = 0.0;
  double mu2 = 1.0;
  double s1 = 1.0;
  double s2 = 2.0;
  double init_pi1 = 0.5;
  double init_mu1 = 0.49;
  double init_mu2 = 0.51;
  int reps = 100;
  int n = 10000;
  std::vector<double> ne_grid;  // empty -> default grid
  std::uint64_t seed = 11;
};

MixtureSpec mip_spec(double pi1, double mu1, double mu2, double s1, double s2);
// pi_1, mu_1, mu_2 free; standard deviations fixed.
std::vector<bool> mip_mask(const MixtureSpec& m);
LabeledDataset mip_data(const MipSetup& s, Rng& rng);

struct MipRow {
  std::string algorithm;
  double ne = 0.0;
  int reps_used = 0;
  int nonregular = 0;
  std::optional<double> se_pi1, se_mu1, se_mu2, se_sum, r_prime, r_prime_std;
};

struct MipResult {
  std::vector<MipRow> rows;
  // Information matrices of the first repetition per (algorithm, ne).
  std::vector<std::pair<std::string, InfoMatrices>> matrices;
};

MipResult mip_experiment(const MipSetup& s);
void write_mip_csv(std::ostream& os, const std::vector<MipRow>& rows);

}  // namespace ctxem
