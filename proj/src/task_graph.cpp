#include "mtbudget/task_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "mtbudget/errors.hpp"

namespace mtb {

namespace {

constexpr double kInverseResidualTol = 1e-9;
constexpr double kPseudoinverseCutoff = 1e-12;

TaskGraph::Edge ordered(TaskId i, TaskId j) { return i < j ? TaskGraph::Edge{i, j} : TaskGraph::Edge{j, i}; }

}  // namespace

TaskGraph::TaskGraph(std::size_t k) : k_(k) {
  if (k == 0) throw InvalidArgument("task graph needs at least one task");
}

TaskGraph TaskGraph::complete(std::size_t k) {
  TaskGraph g(k);
  for (TaskId i = 0; i < k; ++i)
    for (TaskId j = i + 1; j < k; ++j) g.edges_.emplace_hint(g.edges_.end(), i, j);
  return g;
}

TaskGraph TaskGraph::disconnected(std::size_t k) { return TaskGraph(k); }

TaskGraph TaskGraph::path(std::size_t k) {
  TaskGraph g(k);
  for (TaskId i = 0; i + 1 < k; ++i) g.add_edge(i, i + 1);
  return g;
}

TaskGraph TaskGraph::random(std::size_t k, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("edge probability must lie in [0,1]");
  TaskGraph g(k);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  for (TaskId i = 0; i < k; ++i)
    for (TaskId j = i + 1; j < k; ++j)
      if (coin(rng)) g.edges_.emplace_hint(g.edges_.end(), i, j);
  return g;
}

void TaskGraph::add_edge(TaskId i, TaskId j) {
  if (i >= k_ || j >= k_) throw InvalidArgument("edge endpoint outside the task range");
  if (i == j) throw InvalidArgument("self-loops are not allowed");
  if (!edges_.insert(ordered(i, j)).second) throw InvalidArgument("duplicate edge");
}

bool TaskGraph::has_edge(TaskId i, TaskId j) const { return edges_.count(ordered(i, j)) != 0; }

std::vector<std::size_t> TaskGraph::degrees() const {
  std::vector<std::size_t> deg(k_, 0);
  for (const auto& [i, j] : edges_) {
    ++deg[i];
    ++deg[j];
  }
  return deg;
}

std::vector<std::size_t> TaskGraph::components() const {
  // union-find with path halving
  std::vector<std::size_t> parent(k_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [i, j] : edges_) {
    auto a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> label(k_);
  std::vector<std::size_t> root_label(k_, k_);
  std::size_t next = 0;
  for (std::size_t v = 0; v < k_; ++v) {
    auto r = find(v);
    if (root_label[r] == k_) root_label[r] = next++;
    label[v] = root_label[r];
  }
  return label;
}

std::size_t TaskGraph::component_count() const {
  auto labels = components();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

TaskGraph augment_graph(const TaskGraph& g) {
  const std::size_t k = g.size();
  TaskGraph out(k + 1);
  for (const auto& [i, j] : g.edges()) out.add_edge(i, j);
  for (TaskId i = 0; i < k; ++i) out.add_edge(i, k);
  return out;
}

Eigen::MatrixXd build_laplacian(const TaskGraph& g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [i, j] : g.edges()) {
    lap(i, j) = lap(j, i) = -1.0;
    lap(i, i) += 1.0;
    lap(j, j) += 1.0;
  }
  return lap;
}

InteractionModel build_interaction_model(const TaskGraph& g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  InteractionModel model;
  model.laplacian = build_laplacian(g);
  model.interaction = Eigen::MatrixXd::Identity(k, k) + model.laplacian;
  model.inverse = Eigen::MatrixXd::Zero(k, k);

  const auto labels = g.components();
  const std::size_t count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<Eigen::Index>> members(count);
  for (Eigen::Index v = 0; v < k; ++v) members[labels[v]].push_back(v);

  for (const auto& idx : members) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd block(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) block(a, b) = model.interaction(idx[a], idx[b]);
    Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) throw NumericalFailure("interaction matrix is not positive definite");
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    inv = (0.5 * (inv + inv.transpose())).eval();
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) model.inverse(idx[a], idx[b]) = inv(a, b);
  }

  const double residual =
      (model.interaction * model.inverse - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (residual > kInverseResidualTol) {
    std::ostringstream msg;
    msg << "interaction matrix inverse residual " << residual << " exceeds " << kInverseResidualTol;
    throw NumericalFailure(msg.str());
  }
  model.cG = std::sqrt(model.inverse.diagonal().maxCoeff());
  return model;
}

ResistanceMatrix resistance_matrix(const TaskGraph& g) {
  if (g.component_count() != 1) throw DisconnectedGraph("resistance distances need a connected graph");
  const Eigen::MatrixXd lap = build_laplacian(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw NumericalFailure("Laplacian eigendecomposition failed");

  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = kPseudoinverseCutoff * std::max(lambda.maxCoeff(), 0.0);
  Eigen::VectorXd inv_lambda = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > cutoff) inv_lambda[i] = 1.0 / lambda[i];
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  const Eigen::MatrixXd pinv = vecs * inv_lambda.asDiagonal() * vecs.transpose();

  const auto n = pinv.rows();
  ResistanceMatrix r{Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      r.entries(i, j) = r.entries(j, i) = std::max(0.0, pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j));
  return r;
}

Eigen::MatrixXd inverse_from_resistance(const ResistanceMatrix& augmented, std::size_t k) {
  const Eigen::MatrixXd& r = augmented.entries;
  if (r.rows() != static_cast<Eigen::Index>(k + 1) || r.cols() != r.rows())
    throw InvalidArgument("resistance matrix must be (k+1)x(k+1)");
  const double n = static_cast<double>(k + 1);
  const Eigen::VectorXd row_sums = r.rowwise().sum();
  const double total = r.sum();
  const auto kk = static_cast<Eigen::Index>(k);

  Eigen::MatrixXd out(kk, kk);
  for (Eigen::Index i = 0; i < kk; ++i)
    for (Eigen::Index j = 0; j < kk; ++j)
      out(i, j) = -0.5 * r(i, j) + row_sums[i] / (2.0 * n) + row_sums[j] / (2.0 * n) -
                  total / (2.0 * n * n) + (n + 1.0) / (n * n);
  return out;
}

double resistance_identity_error(const TaskGraph& g) {
  const InteractionModel model = build_interaction_model(g);
  const Eigen::MatrixXd recovered = inverse_from_resistance(resistance_matrix(augment_graph(g)), g.size());
  return (recovered - model.inverse).cwiseAbs().maxCoeff();
}

TaskGraph read_graph(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<TaskGraph> g;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;

    if (!g) {
      long long k = 0;
      if (first != "k" || !(fields >> k) || k <= 0) throw ParseError(lineno, "expected header `k <int>`");
      std::string extra;
      if (fields >> extra) throw ParseError(lineno, "trailing tokens after header");
      g.emplace(static_cast<std::size_t>(k));
      continue;
    }

    long long i = 0, j = 0;
    std::istringstream pair(line);
    std::string extra;
    if (!(pair >> i >> j) || (pair >> extra)) throw ParseError(lineno, "expected `<i> <j>`");
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > g->size() || static_cast<std::size_t>(j) > g->size())
      throw ParseError(lineno, "task id outside 1..k");
    if (i == j) throw ParseError(lineno, "self-loop");
    const auto a = static_cast<TaskId>(i - 1), b = static_cast<TaskId>(j - 1);
    if (g->has_edge(a, b)) throw ParseError(lineno, "duplicate edge");
    g->add_edge(a, b);
  }
  if (!g) throw ParseError(lineno, "missing `k <int>` header");
  return *g;
}

void write_graph(std::ostream& out, const TaskGraph& g) {
  out << "k " << g.size() << '\n';
  for (const auto& [i, j] : g.edges()) out << i + 1 << ' ' << j + 1 << '\n';
}

TaskGraph load_graph(const std::string& keyword_or_path, std::size_t k) {
  if (keyword_or_path == "complete" || keyword_or_path == "disconnected") {
    if (k == 0) throw InvalidArgument("graph keyword `" + keyword_or_path + "` needs a task count");
    return keyword_or_path == "complete" ? TaskGraph::complete(k) : TaskGraph::disconnected(k);
  }
  std::ifstream in(keyword_or_path);
  if (!in) throw Error("cannot open graph file " + keyword_or_path);
  TaskGraph g = read_graph(in);
  if (k != 0 && g.size() != k)
    throw InvalidArgument("graph file has " + std::to_string(g.size()) + " tasks, expected " + std::to_string(k));
  return g;
}

}  // namespace mtb
