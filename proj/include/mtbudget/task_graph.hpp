#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace mtb {

using TaskId = std::size_t;

/*
 * Undirected relation graph over k tasks, stored as an explicit edge set.
 * Task ids are 0-based; file formats use 1-based ids and are converted on
 * read/write. Every unordered pair is stored once as (min, max).
 */
class TaskGraph {
 public:
  using Edge = std::pair<TaskId, TaskId>;

  explicit TaskGraph(std::size_t k);

  static TaskGraph complete(std::size_t k);
  static TaskGraph disconnected(std::size_t k);
  static TaskGraph path(std::size_t k);
  /// Erdos-Renyi graph: every pair joined independently with probability p.
  static TaskGraph random(std::size_t k, double p, std::uint64_t seed);

  /// Throws InvalidArgument on self-loops, out-of-range endpoints and duplicates.
  void add_edge(TaskId i, TaskId j);

  bool has_edge(TaskId i, TaskId j) const;
  std::size_t size() const noexcept { return k_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  std::vector<std::size_t> degrees() const;

  /// Connected-component label of every task, labels numbered from 0 in
  /// order of the smallest task of each component.
  std::vector<std::size_t> components() const;
  std::size_t component_count() const;

  friend bool operator==(const TaskGraph&, const TaskGraph&) = default;

 private:
  std::size_t k_;
  std::set<Edge> edges_;
};

/// Graph with one extra node joined to every original task.
TaskGraph augment_graph(const TaskGraph& g);

/// L_G: degrees on the diagonal, -1 for every edge.
Eigen::MatrixXd build_laplacian(const TaskGraph& g);

/*
 * Interaction matrix A = I + L of a task graph together with its inverse M,
 * which scales the base kernel between tasks, and the constant
 * cG = max_i sqrt(M_ii) bounding the norm of any multitask instance.
 */
struct InteractionModel {
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd interaction;
  Eigen::MatrixXd inverse;
  double cG = 1.0;

  std::size_t tasks() const noexcept { return static_cast<std::size_t>(inverse.rows()); }
  double coupling(TaskId i, TaskId j) const { return inverse(i, j); }
};

/// Inverts A per connected component, so entries across components are exactly 0.
/// Throws NumericalFailure if max|A*M - I| > 1e-9.
InteractionModel build_interaction_model(const TaskGraph& g);

/// Effective-resistance distances between every pair of nodes.
struct ResistanceMatrix {
  Eigen::MatrixXd entries;
};

/// R_ij = P_ii + P_jj - 2 P_ij with P the pseudoinverse of the Laplacian.
/// Throws DisconnectedGraph unless g has a single component.
ResistanceMatrix resistance_matrix(const TaskGraph& g);

/// Recovers A^{-1} from resistance distances of the augmented graph.
Eigen::MatrixXd inverse_from_resistance(const ResistanceMatrix& augmented, std::size_t k);

/// max_ij |inverse_from_resistance(R_{G'}) - A_G^{-1}|.
double resistance_identity_error(const TaskGraph& g);

/*
 * Text format: first line `k <int>`, then one `<i> <j>` pair per line
 * (1-based, i != j). Blank lines and `#` comments are skipped.
 */
TaskGraph read_graph(std::istream& in);
void write_graph(std::ostream& out, const TaskGraph& g);

/// Accepts the keywords `complete` and `disconnected` (sized by k), otherwise
/// reads a graph file whose task count must equal k when k is nonzero.
TaskGraph load_graph(const std::string& keyword_or_path, std::size_t k);

}  // namespace mtb
