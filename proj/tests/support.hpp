#pragma once

// Test-only helpers and reference implementations. Everything here is written
// from the definitions directly and avoids the incremental code paths of the
// library, so agreement between the two is meaningful.

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mtbudget/kernel.hpp"
#include "mtbudget/learners.hpp"
#include "mtbudget/task_graph.hpp"

namespace mtb::testing {

inline SparseVector random_sparse(std::mt19937_64& rng, FeatureId d, double density = 0.6) {
  std::bernoulli_distribution keep(density);
  std::normal_distribution<double> value(0.0, 1.0);
  std::vector<FeatureId> ids;
  std::vector<double> vals;
  for (FeatureId f = 1; f <= d; ++f) {
    if (!keep(rng)) continue;
    ids.push_back(f);
    vals.push_back(value(rng));
  }
  if (ids.empty()) {
    ids.push_back(1);
    vals.push_back(1.0);
  }
  return {ids, vals};
}

inline MultitaskInstance random_instance(std::mt19937_64& rng, std::size_t k, FeatureId d) {
  std::uniform_int_distribution<std::size_t> task(0, k - 1);
  SparseVector x = random_sparse(rng, d);
  return {std::move(x), task(rng)};
}

inline Eigen::MatrixXd dense_inverse_oracle(const TaskGraph& g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  for (const auto& [i, j] : g.edges()) {
    a(i, i) += 1.0;
    a(j, j) += 1.0;
    a(i, j) -= 1.0;
    a(j, i) -= 1.0;
  }
  return a.fullPivLu().inverse();
}

inline Eigen::MatrixXd gram_oracle(const std::vector<MultitaskInstance>& xs, const InteractionModel& m,
                                   const KernelSpec& spec) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) h(i, j) = mt_kernel(xs[i], xs[j], m, spec);
  return h;
}

/// Distance from column `target` of a PSD Gram matrix to the span of the
/// columns in `basis`, computed in feature space through an eigendecomposition
/// of the joint Gram matrix (no inverse of the basis block is formed).
inline double span_distance(const Eigen::MatrixXd& gram, const std::vector<Eigen::Index>& basis, Eigen::Index target,
                            Eigen::VectorXd* coefficients = nullptr) {
  const auto nb = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd g(nb, nb);
  Eigen::VectorXd c(nb);
  for (Eigen::Index a = 0; a < nb; ++a) {
    c[a] = gram(basis[a], target);
    for (Eigen::Index b = 0; b < nb; ++b) g(a, b) = gram(basis[a], basis[b]);
  }
  if (nb == 0) {
    if (coefficients) coefficients->resize(0);
    return std::sqrt(std::max(0.0, gram(target, target)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  const double cutoff = 1e-13 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(nb);
  for (Eigen::Index e = 0; e < nb; ++e) {
    const double lambda = eig.eigenvalues()[e];
    if (lambda <= cutoff) continue;
    const Eigen::VectorXd u = eig.eigenvectors().col(e);
    coef += u * (u.dot(c) / lambda);
  }
  if (coefficients) *coefficients = coef;
  const double r2 = gram(target, target) - 2.0 * coef.dot(c) + coef.dot(g * coef);
  return std::sqrt(std::max(0.0, r2));
}

inline std::shared_ptr<const InteractionModel> model_of(const TaskGraph& g) {
  return std::make_shared<const InteractionModel>(build_interaction_model(g));
}

/// Unbudgeted multitask kernel Perceptron written against mt_kernel only.
class ReferencePerceptron {
 public:
  ReferencePerceptron(const InteractionModel& model, KernelSpec spec) : model_(model), spec_(spec) {}
  ReferencePerceptron(InteractionModel&&, KernelSpec) = delete;

  bool step(const MultitaskExample& ex) {
    double f = 0.0;
    for (std::size_t j = 0; j < support_.size(); ++j)
      f += labels_[j] * mt_kernel(support_[j], ex.instance, model_, spec_);
    const bool mistake = ex.label * f <= 0.0;
    if (mistake) {
      support_.push_back(ex.instance);
      labels_.push_back(ex.label);
    }
    return mistake;
  }

 private:
  const InteractionModel& model_;
  KernelSpec spec_;
  std::vector<MultitaskInstance> support_;
  std::vector<double> labels_;
};

/// phi on the grid {1e-4, 2e-4, ..., 1}: the largest grid point meeting the cap.
inline double grid_phi(double w, int y, double f, double deficit, std::size_t mistakes, double cG) {
  const double cap = forgetron_deficit_cap(cG, mistakes);
  for (int s = 10000; s >= 1; --s) {
    const double chi = s * 1e-4;
    if (forgetron_psi(w * y * chi, w * chi * f, cG) + deficit <= cap) return chi;
  }
  return 0.0;
}

}  // namespace mtb::testing
