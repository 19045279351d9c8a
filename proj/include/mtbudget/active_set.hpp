#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "mtbudget/kernel.hpp"

namespace mtb {

/// Kernel under which the Gram matrix H is formed.
enum class GramMode {
  multitask,    // K([x,i],[x',j]) = M_ij K'(x,x')
  single_task,  // K'(x,x'), task markers ignored
};

/// How each stored instance is weighted in the prediction.
enum class WeightLayout {
  scalar,    // one weight per entry, multitask kernel in the expansion
  per_task,  // one weight per (task, entry), base kernel in the expansion
};

struct ActiveSetOptions {
  std::size_t budget = std::numeric_limits<std::size_t>::max();
  GramMode gram = GramMode::multitask;
  WeightLayout layout = WeightLayout::scalar;
  /// Maintain H and H^{-1}. Learners that never project skip the O(B^2) upkeep.
  bool track_inverse = true;
};

struct ActiveEntry {
  MultitaskInstance instance;
  std::size_t inserted_at = 0;
};

struct Projection {
  Eigen::VectorXd alphas;
  double residual_norm = 0.0;
};

struct Eviction {
  std::size_t index = 0;  // position of the evicted entry before removal
  ActiveEntry entry;
  Eigen::VectorXd weight;  // weight column of the evicted entry
  Eigen::VectorXd gammas;  // coefficients over the remaining entries, empty without inverse tracking
};

/*
 * Budgeted store of active multitask instances and their weights.
 *
 * Weights form a (rows x |S|) matrix: one row in the scalar layout, k rows in
 * the per-task layout. When inverse tracking is on, the Gram matrix H and its
 * inverse are kept current: bordering on insert, rank-1 downdate on eviction.
 * If an insertion's Schur complement falls under 1e-10, the inverse is rebuilt
 * with a 1e-10 ridge on the diagonal and the set stays regularized until it
 * empties; gram() then returns the ridged matrix the inverse belongs to.
 */
class ActiveSet {
 public:
  static constexpr double kSchurFloor = 1e-10;
  static constexpr double kRidge = 1e-10;

  ActiveSet(MultitaskKernel kernel, ActiveSetOptions options);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t budget() const noexcept { return options_.budget; }
  const ActiveSetOptions& options() const noexcept { return options_; }
  const MultitaskKernel& kernel() const noexcept { return kernel_; }

  const std::vector<ActiveEntry>& entries() const noexcept { return entries_; }
  const ActiveEntry& entry(std::size_t j) const { return entries_.at(j); }

  Eigen::Index weight_rows() const noexcept { return weights_.rows(); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }
  Eigen::MatrixXd& weights() noexcept { return weights_; }

  const Eigen::MatrixXd& gram() const noexcept { return gram_; }
  const Eigen::MatrixXd& gram_inverse() const noexcept { return gram_inv_; }
  bool regularized() const noexcept { return ridge_ > 0.0; }

  /// Kernel between two instances under the set's Gram mode.
  double gram_kernel(const MultitaskInstance& a, const MultitaskInstance& b) const;
  /// Column (kernel(entry_l, q))_l under the Gram mode.
  Eigen::VectorXd kernel_column(const MultitaskInstance& q) const;

  /// Scalar layout: sum_j w_j M_{i_j,i_q} K'(x_j,x_q); per-task layout:
  /// sum_j W(i_q, j) K'(x_j,x_q). Empty set gives 0.
  double predict(const MultitaskInstance& q) const;

  /// Orthogonal projection of kernel(q,.) onto the span of the stored entries.
  Projection project(const MultitaskInstance& q) const;

  /// Throws BudgetFull when the set already holds `budget` entries.
  void insert(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
              std::size_t inserted_at);

  /// Adds q beyond the budget for the duration of `choose`, which receives the
  /// provisional set and returns the index to evict. Only valid when full.
  Eviction insert_with_eviction(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
                                std::size_t inserted_at,
                                const std::function<std::size_t(const ActiveSet&)>& choose);

  /// Residual of each entry against the span of the others: sqrt(1 / (H^{-1})_jj).
  Eigen::VectorXd leave_one_out_residuals() const;

  /// Removes entry r; returns gamma_j = -(H^{-1})_{jr} / (H^{-1})_{rr} over the
  /// remaining entries in their new order.
  Eviction evict(std::size_t r);

  /// Recomputes H from the stored instances and H^{-1} by a dense solve.
  void rebuild();

  /// max |H H^{-1} - I|; 0 for an empty set.
  double inverse_residual() const;

 private:
  void append_entry(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
                    std::size_t inserted_at);
  void rebuild_inverse();

  MultitaskKernel kernel_;
  ActiveSetOptions options_;
  std::vector<ActiveEntry> entries_;
  Eigen::MatrixXd weights_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd gram_inv_;
  double ridge_ = 0.0;
};

/*
 * Line-oriented snapshot: a `budget <B> rows <r>` header, then one line per
 * entry `<task> <w_1>[,<w_2>,...] <id>:<value> ...` with 1-based task ids,
 * in insertion order.
 */
void write_snapshot(std::ostream& out, const ActiveSet& set);
/// Rebuilds a set from a snapshot; budget and weight rows come from the header.
ActiveSet read_snapshot(std::istream& in, MultitaskKernel kernel, ActiveSetOptions options);

}  // namespace mtb
