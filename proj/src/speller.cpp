#include "ctxem/speller.hpp"

#include "ctxem/problems.hpp"
#include "ctxem/report_io.hpp"
#include "ctxem/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace ctxem {

namespace {

constexpr double kHeavyFraction = 0.9;

int build_node(SpellerTree& t, const Eigen::VectorXd& p, int lo, int hi, int depth, bool phase) {
  const int idx = static_cast<int>(t.nodes.size());
  SpellerTree::Node node;
  node.lo = lo;
  node.hi = hi;
  node.depth = depth;
  node.mass = p.segment(lo, hi - lo).sum();
  node.heavy_left = ((depth % 2) == 0) != phase;
  t.nodes.push_back(node);
  if (hi - lo == 1) return idx;

  int best = lo + 1;
  double best_gap = std::numeric_limits<double>::infinity();
  double left = 0.0;
  for (int s = lo + 1; s < hi; ++s) {
    left += p(s - 1);
    const double heavy = node.heavy_left ? left : node.mass - left;
    const double gap = std::abs(heavy / node.mass - kHeavyFraction);
    if (gap < best_gap) {
      best_gap = gap;
      best = s;
    }
  }
  const int l = build_node(t, p, lo, best, depth + 1, phase);
  const int r = build_node(t, p, best, hi, depth + 1, phase);
  auto& n = t.nodes[static_cast<std::size_t>(idx)];
  n.left = l;
  n.right = r;
  n.left_mass = t.nodes[static_cast<std::size_t>(l)].mass;
  n.right_mass = t.nodes[static_cast<std::size_t>(r)].mass;
  return idx;
}

Eigen::VectorXd interp_vec(const std::vector<double>& knots, const std::vector<Eigen::VectorXd>& v, double t) {
  if (t <= knots.front()) return v.front();
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (t <= knots[k]) {
      const double w = (t - knots[k - 1]) / (knots[k] - knots[k - 1]);
      return (1.0 - w) * v[k - 1] + w * v[k];
    }
  }
  return v.back();
}

double interp(const std::vector<double>& knots, const std::vector<double>& v, double t) {
  if (t <= knots.front()) return v.front();
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (t <= knots[k]) {
      const double w = (t - knots[k - 1]) / (knots[k] - knots[k - 1]);
      return (1.0 - w) * v[k - 1] + w * v[k];
    }
  }
  return v.back();
}

int map_decision(const MixtureSpec& m, const Eigen::VectorXd& x) {
  SampleMatrix row(1, x.size());
  row.row(0) = x.transpose();
  return classify_map(m, row, Exec::Serial).front();
}

}  // namespace

int SpellerTree::side_of(int k, int symbol) const {
  const auto& n = nodes[static_cast<std::size_t>(k)];
  if (n.left < 0) throw std::invalid_argument("leaf node has no sides");
  if (symbol < n.lo || symbol >= n.hi) throw std::out_of_range("symbol is not under this node");
  return symbol < nodes[static_cast<std::size_t>(n.left)].hi ? 0 : 1;
}

std::vector<int> SpellerTree::leaves_in_order() const {
  std::vector<int> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    const auto& n = nodes[static_cast<std::size_t>(k)];
    if (n.left < 0) {
      out.push_back(n.lo);
    } else {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  return out;
}

SpellerTree build_tree(const Eigen::VectorXd& priors, bool phase, int lo, int hi, int depth) {
  if (hi < 0) hi = static_cast<int>(priors.size());
  if (lo < 0 || lo >= hi || hi > priors.size()) throw std::invalid_argument("invalid symbol range");
  if ((priors.array() <= 0.0).any()) throw std::invalid_argument("priors must be strictly positive");
  SpellerTree t;
  build_node(t, priors, lo, hi, depth, phase);
  return t;
}

ProbLabel context_label_at_node(const SpellerTree& tree, int node) {
  if (tree.is_leaf(node)) throw std::invalid_argument("leaf node has no context label");
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  ProbLabel p(2);
  p << n.left_mass, n.right_mass;
  return p / p.sum();
}

int step_online(OnlineBuffer& buf, const Eigen::VectorXd& sample, const ProbLabel& label, int truth,
                const OnlineConfig& config) {
  const int decision = map_decision(buf.spec, sample);
  buf.x.push_back(sample);
  buf.labels.push_back(label);
  buf.truth.push_back(truth);
  while (static_cast<int>(buf.x.size()) > config.capacity) {
    buf.x.pop_front();
    buf.labels.pop_front();
    buf.truth.pop_front();
  }
  const auto n = static_cast<Eigen::Index>(buf.x.size());
  if (n < config.min_fill) return decision;

  LabeledDataset d;
  d.samples.resize(n, sample.size());
  d.plabels = Eigen::MatrixXd(n, 2);
  d.truth.assign(buf.truth.begin(), buf.truth.end());
  for (Eigen::Index i = 0; i < n; ++i) {
    d.samples.row(i) = buf.x[static_cast<std::size_t>(i)].transpose();
    d.plabels->row(i) = buf.labels[static_cast<std::size_t>(i)].transpose();
  }
  FitConfig fc;
  fc.max_iter = config.online_iters;
  fc.tol = 1e-12;
  fc.ridge = config.ridge;
  fc.tied_covariance = true;
  fc.keep_trace = false;
  fc.exec = Exec::Serial;
  try {
    buf.spec = fit(Algorithm::CA, d, buf.spec, fc).estimate;
  } catch (const std::exception&) {
    // Too little mass on one class so far; keep the current classifier.
  }
  return decision;
}

DriftConfig drift_preset(const std::string& name, int dim) {
  DriftConfig c;
  c.dim = dim;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);
  shift(0) = 1.0;
  if (dim > 1) shift(1) = -1.0;
  if (name == "none") {
    c.knots = {0.0, 1.0};
    c.center = {zero, zero};
    c.separation = {2.5, 2.5};
  } else if (name == "separable") {
    c.knots = {0.0, 1.0};
    c.center = {zero, zero};
    c.separation = {25.0, 25.0};
  } else if (name == "default") {
    c.knots = {0.0, 0.15, 0.35, 1.0};
    c.center = {zero, zero, 1.5 * shift, 1.5 * shift};
    c.separation = {2.5, 2.5, -2.5, -2.5};
  } else {
    throw std::invalid_argument("unknown drift preset: " + name);
  }
  return c;
}

SubjectStream synth_stream(const DriftConfig& cfg, Rng& rng) {
  if (cfg.knots.size() < 1 || cfg.center.size() != cfg.knots.size() || cfg.separation.size() != cfg.knots.size())
    throw std::invalid_argument("drift profile needs one center and separation per knot");
  const int d = cfg.dim;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(cfg.noise_low, cfg.noise_high);

  SubjectStream s;
  Eigen::MatrixXd g(d, d);
  for (int r = 0; r < d; ++r)
    for (int k = 0; k < d; ++k) g(r, k) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd lambda(d);
  for (int k = 0; k < d; ++k) lambda(k) = unif(rng);
  s.cov = q * lambda.asDiagonal() * q.transpose();
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
  s.direction.resize(d);
  for (int k = 0; k < d; ++k) s.direction(k) = normal(rng);
  s.direction.normalize();
  const Eigen::MatrixXd chol = s.cov.llt().matrixL();

  const int len = cfg.length_per_class;
  for (int c = 0; c < 2; ++c) {
    s.samples[c].resize(len, d);
    s.means[c].resize(len, d);
    const double sign = c == 0 ? 0.5 : -0.5;
    for (int k = 0; k < len; ++k) {
      const double t = len > 1 ? static_cast<double>(k) / (len - 1) : 0.0;
      const Eigen::VectorXd mu =
          interp_vec(cfg.knots, cfg.center, t) + sign * interp(cfg.knots, cfg.separation, t) * s.direction;
      Eigen::VectorXd z(d);
      for (int j = 0; j < d; ++j) z(j) = normal(rng);
      s.means[c].row(k) = mu.transpose();
      s.samples[c].row(k) = (mu + chol * z).transpose();
    }
  }
  return s;
}

MixtureSpec initial_classifier(const SubjectStream& s, double perturbation, Rng& rng) {
  std::normal_distribution<double> normal(0.0, perturbation);
  MixtureSpec m;
  m.weights = {0.5, 0.5};
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd mu = s.means[c].row(0).transpose();
    for (Eigen::Index k = 0; k < mu.size(); ++k) mu(k) += normal(rng);
    m.components.push_back(MultivariateNormal{mu, s.cov});
  }
  return m;
}

std::string_view speller_algorithm_name(SpellerAlgorithm a) {
  switch (a) {
    case SpellerAlgorithm::S: return "S";
    case SpellerAlgorithm::CA: return "CA";
    case SpellerAlgorithm::CAE: return "CAE";
  }
  return "?";
}

SpellerAlgorithm parse_speller_algorithm(std::string_view name) {
  for (SpellerAlgorithm a : {SpellerAlgorithm::S, SpellerAlgorithm::CA, SpellerAlgorithm::CAE})
    if (speller_algorithm_name(a) == name) return a;
  throw std::invalid_argument("unknown speller algorithm: " + std::string(name));
}

SpellerTrace simulate_spelling(const SubjectStream& stream, const std::vector<std::string>& words, const CharLM& lm,
                               SpellerAlgorithm alg, const MixtureSpec& init, const SpellerConfig& config) {
  SpellerTrace tr;
  OnlineBuffer buf;
  buf.spec = init;
  std::vector<int> decisions, desired_hist;
  int pos[2] = {0, 0};
  const ProbLabel uniform = ProbLabel::Constant(2, 0.5);

  std::string text;
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w) text.push_back(' ');
    text += words[w];
  }

  std::string prefix;
  for (char ch : text) {
    const int target = CharLM::symbol_index(ch);
    if (target < 0 || target == CharLM::kBackspace) throw std::invalid_argument("word contains unsupported symbol");
    const Eigen::VectorXd priors = lm.distribution(prefix);
    SpellerTree tree = build_tree(priors);
    int node = 0;
    int commands = 0;
    while (!tree.is_leaf(node) && commands < config.max_commands_per_char) {
      const int desired = tree.side_of(node, target);
      ProbLabel label;
      switch (alg) {
        case SpellerAlgorithm::S: label = ProbLabel::Unit(2, desired); break;
        case SpellerAlgorithm::CA: label = context_label_at_node(tree, node); break;
        case SpellerAlgorithm::CAE: label = uniform; break;
      }
      int net = 0;
      for (int k = 0; k < config.max_samples_per_attempt && std::abs(net) < config.threshold; ++k) {
        if (pos[desired] >= stream.samples[desired].rows()) {
          tr.truncated = true;
          return tr;
        }
        const Eigen::VectorXd x = stream.samples[desired].row(pos[desired]++).transpose();
        const int dec = step_online(buf, x, label, desired, config.online);
        decisions.push_back(dec);
        desired_hist.push_back(desired);
        ++tr.samples;
        if (tr.samples >= config.window && tr.samples % config.shift == 0) {
          const std::span<const int> p(decisions.data() + decisions.size() - config.window,
                                       static_cast<std::size_t>(config.window));
          const std::span<const int> t(desired_hist.data() + desired_hist.size() - config.window,
                                       static_cast<std::size_t>(config.window));
          tr.running_ba.emplace_back(tr.samples, balanced_accuracy(p, t, 2));
        }
        net += dec == 1 ? 1 : -1;
      }
      const int cmd = net > 0 ? 1 : 0;
      ++commands;
      ++tr.commands;
      const auto& n = tree.nodes[static_cast<std::size_t>(node)];
      if (cmd == desired) {
        node = cmd == 0 ? n.left : n.right;
      } else {
        // Undo the wrong move and present this subtree with its heavy sides swapped.
        ++tr.errors;
        const bool phase = n.heavy_left != ((n.depth % 2) == 0);
        tree = build_tree(priors, !phase, n.lo, n.hi, n.depth);
        node = 0;
      }
    }
    if (tree.is_leaf(node)) {
      tr.typed.push_back(ch);
      prefix.push_back(ch);
    } else {
      // Gave up on this character; move on with the intended text as context.
      prefix.push_back(ch);
    }
  }
  return tr;
}

SpellerResult run_speller(const SpellerRun& run) {
  const int subjects = run.subjects;
  const int nalg = static_cast<int>(run.algorithms.size());
  if (subjects < 1 || nalg < 1) throw std::invalid_argument("need at least one subject and one algorithm");
  const DriftConfig drift = drift_preset(run.drift);

  std::vector<SubjectStream> streams(static_cast<std::size_t>(subjects));
  std::vector<MixtureSpec> inits(static_cast<std::size_t>(subjects));
  for (int s = 0; s < subjects; ++s) {
    Rng rng(derive_seed({run.seed, static_cast<std::uint64_t>(s)}));
    streams[static_cast<std::size_t>(s)] = synth_stream(drift, rng);
    Rng irng(derive_seed({run.seed, static_cast<std::uint64_t>(s), 1}));
    inits[static_cast<std::size_t>(s)] = initial_classifier(streams[static_cast<std::size_t>(s)],
                                                             run.init_perturbation, irng);
  }

  const CharLM& lm = CharLM::bundled();
  SpellerResult res;
  res.traces.resize(static_cast<std::size_t>(subjects * nalg));
  std::vector<std::string> errors(res.traces.size());
#pragma omp parallel for schedule(dynamic)
  for (int job = 0; job < subjects * nalg; ++job) {
    const int s = job / nalg;
    try {
      res.traces[static_cast<std::size_t>(job)] =
          simulate_spelling(streams[static_cast<std::size_t>(s)], run.words, lm,
                            run.algorithms[static_cast<std::size_t>(job % nalg)], inits[static_cast<std::size_t>(s)],
                            run.config);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(job)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  for (int job = 0; job < subjects * nalg; ++job) {
    const auto& tr = res.traces[static_cast<std::size_t>(job)];
    for (const auto& [end, ba] : tr.running_ba)
      res.rows.push_back({job / nalg, std::string(speller_algorithm_name(run.algorithms[static_cast<std::size_t>(job % nalg)])),
                          end, ba});
  }
  return res;
}

void write_speller_csv(std::ostream& os, const std::vector<SpellerRow>& rows) {
  CsvWriter w(os);
  w.row({"subject", "algorithm", "window_end_sample", "running_ba"});
  for (const auto& r : rows)
    w.row({std::to_string(r.subject), r.algorithm, std::to_string(r.window_end_sample), format_number(r.running_ba)});
}

}  // namespace ctxem
