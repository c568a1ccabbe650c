#pragma once

#include "ctxem/context_labels.hpp"
#include "ctxem/mixture.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace ctxem {

enum class ScenarioId { A, B, C, D, E, F, Mixed, Wrong, Biased };

std::string_view scenario_name(ScenarioId id);
ScenarioId parse_scenario(std::string_view name);

std::vector<double> default_ne_grid();  // 0, 0.1, ..., 0.9, 0.99

struct ScenarioSpec {
  ScenarioId id = ScenarioId::B;
  int problems = 1000;
  std::vector<double> ne_grid = default_ne_grid();
  double wrong_frac = 0.5;
  double pi1 = 0.2;
  double mixed_ne_low = 0.0;
  double mixed_ne_high = 0.5;
  std::uint64_t master_seed = 1;
  KlDirection kl_direction = KlDirection::NewToReference;
  int max_retries = 1000;
};

void validate(const ScenarioSpec& s);

struct ProblemInstance {
  int idx = 0;
  std::uint64_t seed = 0;
  MixtureSpec actual;
  MixtureSpec init;
  LabeledDataset train;
  LabeledDataset test;
  std::vector<bool> free;          // over the global vector
  std::vector<double> skl, ikl;    // drawn separability targets
  int retries = 0;
};

// Counter-based seed derivation (splitmix64 finalizer over each word).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words);

// Free parameters per scenario and the resulting sample count.
int free_param_count(ScenarioId id);
int sample_count(ScenarioId id);

ProblemInstance generate_problem(const ScenarioSpec& s, int idx);

}  // namespace ctxem
