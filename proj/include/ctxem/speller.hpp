#pragma once

// Closed-loop simulation of a binary-tree speller driven by a two-class
// feature stream, with buffered online CA learning.

#include "ctxem/charlm.hpp"
#include "ctxem/context_labels.hpp"
#include "ctxem/estimators.hpp"

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

namespace ctxem {

// ---- tree ---------------------------------------------------------------

struct SpellerTree {
  struct Node {
    int lo = 0, hi = 0;         // symbol range [lo, hi)
    int left = -1, right = -1;  // children; -1 for leaves
    int depth = 0;
    double mass = 0.0, left_mass = 0.0, right_mass = 0.0;
    bool heavy_left = true;
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  bool is_leaf(int k) const { return nodes[static_cast<std::size_t>(k)].left < 0; }
  // 0 if `symbol` lies in the left subtree of internal node k, 1 if right.
  int side_of(int k, int symbol) const;
  std::vector<int> leaves_in_order() const;
};

// Contiguous split closest to a 0.9 heavy fraction at every node; the heavy
// side is left at even depth, right at odd depth, inverted when `phase` is set.
SpellerTree build_tree(const Eigen::VectorXd& priors, bool phase = false, int lo = 0, int hi = -1, int depth = 0);

// [left mass, right mass] normalized over the node.
ProbLabel context_label_at_node(const SpellerTree& tree, int node);

// ---- online learner -----------------------------------------------------

struct OnlineConfig {
  int capacity = 240;
  int online_iters = 3;
  double ridge = 1e-6;
  int min_fill = 20;  // no adaptation before this many samples
};

struct OnlineBuffer {
  std::deque<Eigen::VectorXd> x;
  std::deque<ProbLabel> labels;
  std::deque<int> truth;
  MixtureSpec spec;  // two multivariate normals with a shared covariance
};

// MAP decision for `sample` under buf.spec, then push, evict and run at most
// online_iters CA iterations on the buffer from the current spec.
int step_online(OnlineBuffer& buf, const Eigen::VectorXd& sample, const ProbLabel& label, int truth,
                const OnlineConfig& config);

// ---- stream -------------------------------------------------------------

struct DriftConfig {
  int dim = 6;
  int length_per_class = 2000;
  // Piecewise-linear profiles over normalized time in [0, 1].
  std::vector<double> knots{0.0, 1.0};
  std::vector<Eigen::VectorXd> center;      // common mean at each knot
  std::vector<double> separation;           // signed distance between class means at each knot
  double noise_low = 0.5, noise_high = 1.5; // eigenvalue range of the shared covariance
};

DriftConfig drift_preset(const std::string& name, int dim = 6);

struct SubjectStream {
  SampleMatrix samples[2];   // per-class playback queues in time order
  Eigen::MatrixXd means[2];  // programmed mean per sample (rows)
  Eigen::MatrixXd cov;
  Eigen::VectorXd direction; // unit discriminant direction
};

SubjectStream synth_stream(const DriftConfig& cfg, Rng& rng);

// LDA on the programmed initial class means, offset by N(0, perturbation^2) per coordinate.
MixtureSpec initial_classifier(const SubjectStream& s, double perturbation, Rng& rng);

// ---- simulation ---------------------------------------------------------

enum class SpellerAlgorithm { S, CA, CAE };
std::string_view speller_algorithm_name(SpellerAlgorithm a);
SpellerAlgorithm parse_speller_algorithm(std::string_view name);

struct SpellerConfig {
  OnlineConfig online;
  int threshold = 8;            // net decisions that issue a command
  int window = 120;
  int shift = 60;
  int max_samples_per_attempt = 300;
  int max_commands_per_char = 40;
};

struct SpellerTrace {
  std::vector<std::pair<int, double>> running_ba;  // (window end sample, BA)
  std::string typed;
  int commands = 0;
  int errors = 0;
  int samples = 0;
  bool truncated = false;
};

SpellerTrace simulate_spelling(const SubjectStream& stream, const std::vector<std::string>& words, const CharLM& lm,
                               SpellerAlgorithm alg, const MixtureSpec& init, const SpellerConfig& config);

struct SpellerRun {
  std::vector<std::string> words{"nothing", "portion"};
  std::vector<SpellerAlgorithm> algorithms{SpellerAlgorithm::S, SpellerAlgorithm::CA, SpellerAlgorithm::CAE};
  std::string drift = "default";
  int subjects = 12;
  double init_perturbation = 0.3;
  std::uint64_t seed = 1;
  SpellerConfig config;
};

struct SpellerRow {
  int subject = 0;
  std::string algorithm;
  int window_end_sample = 0;
  double running_ba = 0.0;
};

struct SpellerResult {
  std::vector<SpellerRow> rows;
  std::vector<SpellerTrace> traces;  // subject-major, algorithm order as requested
};

SpellerResult run_speller(const SpellerRun& run);
void write_speller_csv(std::ostream& os, const std::vector<SpellerRow>& rows);

}  // namespace ctxem
