#include "mtbudget/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mtbudget/errors.hpp"

namespace mtb {

namespace {

constexpr std::size_t kMaxRedraws = 1'000'000;

Eigen::VectorXd gaussian_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  return v;
}

Eigen::VectorXd unit_vector(std::size_t d, std::mt19937_64& rng) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(d, rng);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

/// Rotation by `angle` inside the plane spanned by orthonormal p1, p2.
Eigen::VectorXd rotate(const Eigen::VectorXd& g, const Eigen::VectorXd& p1, const Eigen::VectorXd& p2, double angle) {
  const double a = p1.dot(g), b = p2.dot(g);
  const double c = std::cos(angle), s = std::sin(angle);
  return g + (c * a - s * b - a) * p1 + (s * a + c * b - b) * p2;
}

}  // namespace

const std::vector<Eigen::VectorXd>& ReferenceTaskSet::at(std::size_t step) const {
  const std::vector<Eigen::VectorXd>* current = &tasks;
  for (const auto& [first, refs] : schedule) {
    if (step < first) break;
    current = &refs;
  }
  return *current;
}

std::vector<std::vector<Eigen::VectorXd>> ReferenceTaskSet::sequence() const {
  std::vector<std::vector<Eigen::VectorXd>> seq{tasks};
  for (const auto& entry : schedule) seq.push_back(entry.second);
  return seq;
}

SyntheticData generate_synthetic(const SyntheticConfig& config) {
  if (config.k == 0 || config.d == 0) throw InvalidArgument("synthetic stream needs k >= 1 and d >= 1");
  if (!(config.relatedness >= 0.0 && config.relatedness <= 1.0))
    throw InvalidArgument("relatedness must lie in [0,1]");
  if (!(config.noise >= 0.0 && config.noise < 1.0)) throw InvalidArgument("noise must lie in [0,1)");
  if (!(config.margin >= 0.0 && config.margin < 1.0)) throw InvalidArgument("margin must lie in [0,1)");
  if (!config.shifts.empty() && config.d < 2) throw InvalidArgument("shifts need d >= 2");

  std::mt19937_64 rng(config.seed);
  SyntheticData out;
  ReferenceTaskSet& refs = out.references;

  const Eigen::VectorXd shared = unit_vector(config.d, rng);
  for (std::size_t i = 0; i < config.k; ++i) {
    const Eigen::VectorXd own = unit_vector(config.d, rng);
    Eigen::VectorXd g = config.relatedness * shared + (1.0 - config.relatedness) * own;
    const double norm = g.norm();
    refs.tasks.push_back(norm > 1e-12 ? Eigen::VectorXd(g / norm) : own);
  }

  if (!config.shifts.empty()) {
    const Eigen::VectorXd p1 = unit_vector(config.d, rng);
    Eigen::VectorXd p2;
    do {
      p2 = gaussian_vector(config.d, rng);
      p2 -= p2.dot(p1) * p1;
    } while (p2.norm() < 1e-8);
    p2.normalize();

    auto events = config.shifts;
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.step < b.step; });
    std::vector<Eigen::VectorXd> current = refs.tasks;
    for (const auto& ev : events) {
      for (auto& g : current) g = rotate(g, p1, p2, ev.angle);
      refs.schedule.emplace_back(ev.step, current);
    }
  }

  DatasetStream& stream = out.stream;
  stream.k = config.k;
  stream.d = static_cast<FeatureId>(config.d);
  stream.examples.reserve(config.n);
  std::bernoulli_distribution flip(config.noise);

  for (std::size_t t = 0; t < config.n; ++t) {
    const TaskId task = t % config.k;
    const Eigen::VectorXd& g = refs.at(t)[task];
    Eigen::VectorXd x = unit_vector(config.d, rng);
    for (std::size_t attempt = 0; std::abs(g.dot(x)) < config.margin; ++attempt) {
      if (attempt == kMaxRedraws) throw InvalidArgument("margin too large to sample instances");
      x = unit_vector(config.d, rng);
    }
    int label = g.dot(x) >= 0.0 ? 1 : -1;
    if (flip(rng)) label = -label;
    stream.examples.push_back({{SparseVector::from_dense({x.data(), static_cast<std::size_t>(x.size())}), task}, label});
  }
  return out;
}

double ShiftSummary::max_trace_norm() const {
  double best = 0.0;
  for (double t : traces) best = std::max(best, std::sqrt(t));
  return best;
}

ShiftSummary shift_term(const std::vector<std::vector<Eigen::VectorXd>>& sequence, const TaskGraph& graph) {
  ShiftSummary out;
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const auto& cur = sequence[t];
    if (cur.size() != graph.size()) throw InvalidArgument("reference set size does not match the task graph");
    double trace = 0.0;
    for (const auto& g : cur) trace += g.squaredNorm();
    for (const auto& [i, j] : graph.edges()) trace += (cur[i] - cur[j]).squaredNorm();
    out.traces.push_back(trace);

    if (t == 0) continue;
    const auto& prev = sequence[t - 1];
    double term = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i].size() != prev[i].size()) throw InvalidArgument("reference dimensions differ across the sequence");
      term += (cur[i] - prev[i]).squaredNorm();
    }
    for (const auto& [i, j] : graph.edges()) term += ((cur[i] - cur[j]) - (prev[i] - prev[j])).squaredNorm();
    out.total_shift += std::sqrt(term);
  }
  return out;
}

std::vector<std::vector<Eigen::VectorXd>> scaled(std::vector<std::vector<Eigen::VectorXd>> sequence, double factor) {
  for (auto& set : sequence)
    for (auto& g : set) g *= factor;
  return sequence;
}

}  // namespace mtb
