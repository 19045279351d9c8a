#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtbudget/task_graph.hpp"

namespace mtb {

using FeatureId = std::uint32_t;

/// Sparse instance vector with strictly increasing feature ids and a cached
/// squared norm.
class SparseVector {
 public:
  SparseVector() = default;
  /// Throws InvalidArgument unless ids are strictly increasing and sizes match.
  SparseVector(std::vector<FeatureId> indices, std::vector<double> values);

  /// Feature ids 1..d for the entries of `dense`; zeros are skipped.
  static SparseVector from_dense(std::span<const double> dense);

  std::span<const FeatureId> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t nnz() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  double squared_norm() const noexcept { return squared_norm_; }
  FeatureId max_feature() const noexcept { return indices_.empty() ? 0 : indices_.back(); }

  /// Value stored for `id`, 0 when absent.
  double at(FeatureId id) const;

  friend bool operator==(const SparseVector& a, const SparseVector& b) {
    return a.indices_ == b.indices_ && a.values_ == b.values_;
  }

 private:
  std::vector<FeatureId> indices_;
  std::vector<double> values_;
  double squared_norm_ = 0.0;
};

double dot(const SparseVector& a, const SparseVector& b);

struct MultitaskInstance {
  SparseVector x;
  TaskId task = 0;

  friend bool operator==(const MultitaskInstance&, const MultitaskInstance&) = default;
};

struct MultitaskExample {
  MultitaskInstance instance;
  int label = 1;  // exactly +1 or -1
};

enum class KernelKind { linear, polynomial, gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  int degree = 1;       // polynomial only
  double offset = 0.0;  // polynomial only
  double gamma = 1.0;   // gaussian only
  bool normalize = true;

  static KernelSpec linear(bool normalize = true) { return {KernelKind::linear, 1, 0.0, 1.0, normalize}; }
  static KernelSpec polynomial(int degree, double offset, bool normalize = true) {
    return {KernelKind::polynomial, degree, offset, 1.0, normalize};
  }
  static KernelSpec gaussian(double gamma, bool normalize = true) {
    return {KernelKind::gaussian, 1, 0.0, gamma, normalize};
  }
};

/// `linear`, `poly:<degree>:<offset>` or `gauss:<gamma>`, each with an
/// optional `:norm` suffix.
KernelSpec parse_kernel_spec(std::string_view text);
std::string to_string(const KernelSpec& spec);

/// Throws InvalidArgument on a nonpositive degree/gamma or negative offset.
void validate(const KernelSpec& spec);

/// Single-task kernel K'. With normalization, K'(a,a) == 1 for every a.
/// Throws ZeroNormInstance when a normalizer vanishes.
double base_kernel(const SparseVector& a, const SparseVector& b, const KernelSpec& spec);

/// (A^{-1})_{task(a),task(b)} * K'(a.x, b.x)
double mt_kernel(const MultitaskInstance& a, const MultitaskInstance& b, const InteractionModel& model,
                 const KernelSpec& spec);

inline double hinge_loss(double score, int label) {
  const double margin = 1.0 - static_cast<double>(label) * score;
  return margin > 0.0 ? margin : 0.0;
}

/// Multitask kernel bound to a shared interaction model.
class MultitaskKernel {
 public:
  MultitaskKernel(std::shared_ptr<const InteractionModel> model, KernelSpec spec);

  double operator()(const MultitaskInstance& a, const MultitaskInstance& b) const;
  double base(const SparseVector& a, const SparseVector& b) const { return base_kernel(a, b, spec_); }
  double coupling(TaskId i, TaskId j) const { return model_->coupling(i, j); }

  const InteractionModel& model() const noexcept { return *model_; }
  const std::shared_ptr<const InteractionModel>& model_ptr() const noexcept { return model_; }
  const KernelSpec& spec() const noexcept { return spec_; }
  std::size_t tasks() const noexcept { return model_->tasks(); }

 private:
  std::shared_ptr<const InteractionModel> model_;
  KernelSpec spec_;
};

}  // namespace mtb
