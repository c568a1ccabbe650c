#pragma once

#include "ctxem/context_labels.hpp"
#include "ctxem/estimators.hpp"
#include "ctxem/problems.hpp"

#include <cstdint>

namespace ctxem::testing {

inline LabeledDataset with_labels(const LabeledDataset& d, int m, double ne, std::uint64_t seed) {
  LabeledDataset out = d;
  Rng rng(seed);
  ContextSpec spec;
  spec.ne = ne;
  out.plabels = make_context_labels(out.truth, m, spec, rng);
  return out;
}

inline ScenarioSpec scenario(ScenarioId id, std::uint64_t seed, int problems = 100) {
  ScenarioSpec s;
  s.id = id;
  s.master_seed = seed;
  s.problems = problems;
  return s;
}

inline MixtureSpec at(const MixtureSpec& shape, const Eigen::VectorXd& theta) { return from_vector(shape, theta); }

}  // namespace ctxem::testing
