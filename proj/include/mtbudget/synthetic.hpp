#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mtbudget/dataset.hpp"
#include "mtbudget/task_graph.hpp"

namespace mtb {

/// Rotation of every reference vector by `angle` radians, applied from `step` on.
struct ShiftEvent {
  std::size_t step = 0;  // 0-based index of the first example labelled by the rotated references
  double angle = 0.0;
};

struct SyntheticConfig {
  std::size_t k = 3;
  std::size_t d = 10;
  std::size_t n = 1000;
  double relatedness = 0.5;  // in [0,1]
  double noise = 0.0;        // label flip probability in [0,1)
  /// Instances with |<g_i, x>| < margin are redrawn. Zero accepts everything.
  double margin = 0.0;
  std::vector<ShiftEvent> shifts;
  std::uint64_t seed = 0;
};

/// Per-task reference vectors g_1..g_k, plus the sets in force after each shift.
struct ReferenceTaskSet {
  std::vector<Eigen::VectorXd> tasks;
  /// (first step, references) for every shift event, in step order.
  std::vector<std::pair<std::size_t, std::vector<Eigen::VectorXd>>> schedule;

  /// References labelling the example at `step`.
  const std::vector<Eigen::VectorXd>& at(std::size_t step) const;
  /// Initial references followed by every scheduled set.
  std::vector<std::vector<Eigen::VectorXd>> sequence() const;
};

struct SyntheticData {
  DatasetStream stream;
  ReferenceTaskSet references;
};

/*
 * Draws a shared unit direction u and per-task unit directions v_i, sets
 * g_i = normalize(relatedness u + (1 - relatedness) v_i), samples instances
 * uniformly on the unit sphere of R^d with round-robin task ids, labels them
 * sign(<g_i, x>) and flips each label with probability `noise`. Shift events
 * rotate all g_i by the same plane rotation.
 */
SyntheticData generate_synthetic(const SyntheticConfig& config);

struct ShiftSummary {
  /// sum over consecutive sets of ||A^{1/2} (g_t - g_{t-1})||
  double total_shift = 0.0;
  /// trace(K_{g_t,g_t} A) = sum_i ||g_{t,i}||^2 + sum_{(i,j) in E} ||g_{t,i} - g_{t,j}||^2 per set
  std::vector<double> traces;

  double max_trace_norm() const;  // max_t sqrt(traces[t])
};

/// Edge-wise expansion of the shift and trace terms over a reference sequence.
ShiftSummary shift_term(const std::vector<std::vector<Eigen::VectorXd>>& sequence, const TaskGraph& graph);

/// Scales every vector of every set by `factor`.
std::vector<std::vector<Eigen::VectorXd>> scaled(std::vector<std::vector<Eigen::VectorXd>> sequence, double factor);

}  // namespace mtb
