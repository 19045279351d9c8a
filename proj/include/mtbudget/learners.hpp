#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mtbudget/active_set.hpp"
#include "mtbudget/kernel.hpp"
#include "mtbudget/task_graph.hpp"

namespace mtb {

enum class Algorithm { mtbprj, mtbprj2, mtrbp, mtforg, perceptron_battery };

std::string_view to_string(Algorithm a);
/// Accepts `mtbprj`, `mtbprj2` (or `mtbprj-2`), `mtrbp`, `mtforg`, `perceptron`/`battery`.
Algorithm parse_algorithm(std::string_view name);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::mtbprj;
  TaskGraph graph{1};
  std::size_t budget = 100;  // ignored by the perceptron battery
  double eta = 0.01;         // projection threshold, mtbprj and mtbprj2 only
  KernelSpec kernel = KernelSpec::gaussian(1.0);
  std::uint64_t seed = 0;    // mtrbp only
};

enum class UpdateAction { none, weight_update_projection, insert, insert_evict, insert_evict_shrink };

std::string_view to_string(UpdateAction a);

struct StepOutcome {
  int prediction = 1;  // sign of the score, +1 at exactly 0
  double score = 0.0;
  bool mistake = false;  // label * score <= 0
  UpdateAction action = UpdateAction::none;
};

/// Uniform online interface: each step predicts on the example, then updates
/// on a mistake.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual StepOutcome step(const MultitaskExample& example) = 0;
  virtual double score(const MultitaskInstance& q) const = 0;
  virtual const ActiveSet& active_set() const = 0;
  virtual Algorithm algorithm() const = 0;

  std::size_t mistakes() const noexcept { return mistakes_; }
  std::size_t steps() const noexcept { return steps_; }

 protected:
  /// Scores the example and advances the step and mistake counters.
  StepOutcome observe(const MultitaskExample& example);

  std::size_t mistakes_ = 0;
  std::size_t steps_ = 0;
};

/// Projection-based budget learner over the multitask kernel (scalar weights).
class BudgetProjectron final : public Learner {
 public:
  BudgetProjectron(std::shared_ptr<const InteractionModel> model, KernelSpec spec, std::size_t budget, double eta);

  StepOutcome step(const MultitaskExample& example) override;
  double score(const MultitaskInstance& q) const override { return set_.predict(q); }
  const ActiveSet& active_set() const override { return set_; }
  Algorithm algorithm() const override { return Algorithm::mtbprj; }

 private:
  ActiveSet set_;
  double eta_;
};

/*
 * Projection-based budget learner keeping one weight row per task over a
 * shared pool of instances. Projections use the base kernel only, and the
 * graph enters through the A^{-1} factors applied to weight updates.
 */
class SharedBudgetProjectron final : public Learner {
 public:
  SharedBudgetProjectron(std::shared_ptr<const InteractionModel> model, KernelSpec spec, std::size_t budget,
                         double eta);

  StepOutcome step(const MultitaskExample& example) override;
  double score(const MultitaskInstance& q) const override { return set_.predict(q); }
  const ActiveSet& active_set() const override { return set_; }
  Algorithm algorithm() const override { return Algorithm::mtbprj2; }

 private:
  ActiveSet set_;
  double eta_;
};

/// ||d_j|| = residual_j * ||W(:, j)||_2 for every column of `weights`.
Eigen::VectorXd shared_eviction_scores(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& weights);

/// Perceptron on the multitask kernel; a full budget evicts a uniformly random entry.
class RandomizedBudgetPerceptron final : public Learner {
 public:
  RandomizedBudgetPerceptron(std::shared_ptr<const InteractionModel> model, KernelSpec spec, std::size_t budget,
                             std::uint64_t seed);

  StepOutcome step(const MultitaskExample& example) override;
  double score(const MultitaskInstance& q) const override { return set_.predict(q); }
  const ActiveSet& active_set() const override { return set_; }
  Algorithm algorithm() const override { return Algorithm::mtrbp; }

  /// Index drawn by the last eviction, in the pre-eviction order.
  std::size_t last_evicted() const noexcept { return last_evicted_; }

 private:
  ActiveSet set_;
  std::mt19937_64 rng_;
  std::size_t last_evicted_ = 0;
};

/// Psi_G(lambda, mu) = cG^2 lambda^2 + 2 cG lambda - 2 lambda mu
inline double forgetron_psi(double lambda, double mu, double cG) {
  return cG * cG * lambda * lambda + 2.0 * cG * lambda - 2.0 * lambda * mu;
}

/// (15/32) cG^2 M
inline double forgetron_deficit_cap(double cG, std::size_t mistakes) {
  return 15.0 * cG * cG * static_cast<double>(mistakes) / 32.0;
}

struct ShrinkStep {
  double phi = 1.0;
  double psi = 0.0;  // Psi_G at the chosen phi
};

/*
 * Largest phi in (0,1] with
 *   Psi_G(w_r y_r phi, w_r phi f_r) + deficit <= (15/32) cG^2 M,
 * i.e. a phi^2 + b phi <= C with a = cG^2 w_r^2 - 2 w_r^2 y_r f_r,
 * b = 2 cG w_r y_r and C = cap - deficit. Solved from the quadratic's roots;
 * the returned phi always satisfies the inequality exactly as evaluated in
 * floating point. Throws NoFeasibleShrink when no phi qualifies.
 */
ShrinkStep compute_shrink(double weight_r, int label_r, double score_r, double deficit, std::size_t mistakes,
                          double cG);

/// Self-tuned Forgetron on the multitask kernel: oldest-first removal plus
/// adaptive shrinking of all weights, with the deficit Q kept under its cap.
class SelfTunedForgetron final : public Learner {
 public:
  SelfTunedForgetron(std::shared_ptr<const InteractionModel> model, KernelSpec spec, std::size_t budget);

  StepOutcome step(const MultitaskExample& example) override;
  double score(const MultitaskInstance& q) const override { return set_.predict(q); }
  const ActiveSet& active_set() const override { return set_; }
  Algorithm algorithm() const override { return Algorithm::mtforg; }

  double deficit() const noexcept { return deficit_; }
  double cG() const noexcept { return cG_; }
  double last_phi() const noexcept { return last_phi_; }

 private:
  ActiveSet set_;
  std::deque<int> labels_;  // labels of the entries, oldest first
  double cG_;
  double deficit_ = 0.0;
  double last_phi_ = 1.0;
};

/// k independent kernel Perceptrons with unbounded active sets.
class PerceptronBattery final : public Learner {
 public:
  PerceptronBattery(std::size_t tasks, KernelSpec spec);

  StepOutcome step(const MultitaskExample& example) override;
  double score(const MultitaskInstance& q) const override { return set_.predict(q); }
  const ActiveSet& active_set() const override { return set_; }
  Algorithm algorithm() const override { return Algorithm::perceptron_battery; }

 private:
  ActiveSet set_;
};

/// Throws InvalidArgument for a nonpositive budget/eta or an unnormalized kernel.
std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::shared_ptr<const InteractionModel> model);
std::unique_ptr<Learner> make_learner(const LearnerConfig& config);

/// Non-fatal configuration issues, e.g. an mtforg budget of 83 or less, for
/// which the mistake bound does not apply.
std::vector<std::string> config_warnings(const LearnerConfig& config);

}  // namespace mtb
