#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "mtbudget/dataset.hpp"
#include "mtbudget/learners.hpp"

namespace mtb {

/// Confusion counts with +1 as the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(int prediction, int label);
  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  /// 2 tp / (2 tp + fp + fn), 0 when the denominator vanishes.
  double f_measure() const noexcept;
};

struct TrajectoryPoint {
  std::size_t step = 0;  // 1-based count of processed examples
  double f_measure = 0.0;
  std::size_t active = 0;
};

/// Online metrics of one pass, counted on predictions made before each update.
struct StreamMetrics {
  Confusion micro;
  std::vector<Confusion> per_task;
  std::size_t mistakes = 0;  // label * score <= 0
  std::size_t steps = 0;
  std::size_t final_active = 0;
  std::vector<TrajectoryPoint> trajectory;

  double f_measure() const noexcept { return micro.f_measure(); }
};

/// Streams `epochs` passes over the examples through `learner`. Snapshots are
/// taken every max(1, n/100) steps of each pass.
StreamMetrics run_stream(const DatasetStream& stream, Learner& learner, std::size_t epochs = 1);
StreamMetrics run_stream(const DatasetStream& stream, const LearnerConfig& config, std::size_t epochs = 1);

/// Final active-set size of the perceptron battery after one pass (its mistake count).
std::size_t baseline_active_size(const DatasetStream& stream, const KernelSpec& kernel);

/// Budget given as a count (`250`) or as a percentage of the baseline (`10%`),
/// rounded up. Throws InvalidArgument on malformed or zero budgets.
std::size_t resolve_budget(const std::string& text, std::size_t baseline);

/// True when the text is a percentage budget.
bool is_fractional_budget(const std::string& text);

/// Runs every job on up to `threads` workers and returns results in job order.
/// Exceptions propagate after all workers stop.
template <typename Result>
std::vector<Result> run_parallel(const std::vector<std::function<Result()>>& jobs, std::size_t threads);

}  // namespace mtb

#include "mtbudget/detail/run_parallel.hpp"
