#pragma once

// Finite mixture families: densities, derivatives, sampling, KL divergences.
//
// Observations are passed as flat spans:
//   univariate normal, Maxwell-Boltzmann : [x]
//   multivariate normal (dim d)           : [x_0 ... x_{d-1}]
//   linear regressor                      : [x, y]  (covariate first)
//
// Per-component parameter ordering (used by scores, Hessians and the global
// parameter vector):
//   univariate normal : (mu, sigma)
//   multivariate      : mu_0..mu_{d-1}, then lower-triangular cov entries
//                       column-major: (0,0),(1,0),...,(d-1,0),(1,1),...
//   Maxwell-Boltzmann : (a)
//   regressor         : (beta0, beta1, eps)
// The global vector is pi_1..pi_{M-1} followed by component 1..M blocks.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ctxem {

using Rng = std::mt19937_64;
using Observation = std::span<const double>;
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Family { UnivariateNormal, MultivariateNormal, MaxwellBoltzmann, LinearRegressor };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct UnivariateNormal {
  double mu = 0.0;
  double sigma = 1.0;
};

struct MultivariateNormal {
  Eigen::VectorXd mu;
  Eigen::MatrixXd cov;
};

struct MaxwellBoltzmann {
  double a = 1.0;
};

struct LinearRegressor {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double eps = 1.0;
};

using ComponentParams =
    std::variant<UnivariateNormal, MultivariateNormal, MaxwellBoltzmann, LinearRegressor>;

Family family_of(const ComponentParams& c);
// Length of one observation for this component.
int observation_size(const ComponentParams& c);
int num_params(const ComponentParams& c);
std::vector<std::string> param_names(const ComponentParams& c);
Eigen::VectorXd params_to_vector(const ComponentParams& c);
// Rebuilds a component of the same family/dimension as `shape` from `v`.
ComponentParams params_from_vector(const ComponentParams& shape, const Eigen::Ref<const Eigen::VectorXd>& v);

// Throws std::invalid_argument / SingularCovariance on invalid parameters.
void validate(const ComponentParams& c);

double component_log_density(const ComponentParams& c, Observation x);
Eigen::VectorXd component_score(const ComponentParams& c, Observation x);
Eigen::MatrixXd component_log_density_hessian(const ComponentParams& c, Observation x);

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<ComponentParams> components;

  int size() const { return static_cast<int>(components.size()); }
  Family family() const;
  int observation_size() const;
  int params_per_component() const;
};

void validate(const MixtureSpec& m);

double mixture_density(const MixtureSpec& m, Observation x);
double mixture_log_density(const MixtureSpec& m, Observation x);

// Global parameter vector (W = M-1 + M*P entries).
int num_params(const MixtureSpec& m);
int component_offset(const MixtureSpec& m, int j);
Eigen::VectorXd to_vector(const MixtureSpec& m);
MixtureSpec from_vector(const MixtureSpec& shape, const Eigen::Ref<const Eigen::VectorXd>& v);
std::vector<std::string> param_names(const MixtureSpec& m);

// Equal-weight spec helper.
std::vector<double> uniform_weights(int m);

struct LabeledDataset {
  SampleMatrix samples;                    // N x observation_size
  std::vector<int> truth;                  // 0-based component index
  std::optional<Eigen::MatrixXd> plabels;  // N x M, rows are probabilistic labels

  int size() const { return static_cast<int>(samples.rows()); }
  Observation obs(int i) const {
    return {samples.data() + static_cast<std::ptrdiff_t>(i) * samples.cols(),
            static_cast<std::size_t>(samples.cols())};
  }
};

void validate(const LabeledDataset& d, int m);

struct SamplingOptions {
  // Regressor covariates are drawn from Uniform[covariate_low, covariate_high].
  double covariate_low = -3.0;
  double covariate_high = 3.0;
};

// One draw from a component, written into `out` (length observation_size).
void draw_observation(const ComponentParams& c, Rng& rng, std::span<double> out,
                      const SamplingOptions& opts = {});

// n iid draws: component chosen with probability pi_j.
LabeledDataset sample_mixture(const MixtureSpec& m, int n, Rng& rng, const SamplingOptions& opts = {});

// Exactly counts[j] draws from component j, then shuffled.
LabeledDataset sample_stratified(const MixtureSpec& m, std::span<const int> counts, Rng& rng,
                                 const SamplingOptions& opts = {});

// KL(a || b). Closed forms; regressors are unsupported.
double component_kl(const ComponentParams& a, const ComponentParams& b);

enum class KlDirection { NewToReference, ReferenceToNew };
enum class FreeAxis { Location, Scale };
enum class RootChoice { Random, Lower, Upper };

struct KlSolveOptions {
  KlDirection direction = KlDirection::NewToReference;
  RootChoice root = RootChoice::Random;
  // Multivariate location: offset direction. Drawn uniformly on the sphere when empty.
  std::optional<Eigen::VectorXd> location_direction;
  int max_expansions = 64;
};

// Returns `candidate` with its free parameter replaced so that the KL between
// it and `fixed` equals target_kl (direction per options). Location moves the
// mean along a line through fixed's mean; Scale changes sigma / a.
ComponentParams solve_param_for_kl(const ComponentParams& fixed, const ComponentParams& candidate,
                                   double target_kl, FreeAxis axis, Rng& rng,
                                   const KlSolveOptions& opts = {});

}  // namespace ctxem
