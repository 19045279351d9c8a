#include "mtbudget/learners.hpp"

#include <cmath>
#include <limits>

#include "mtbudget/errors.hpp"

namespace mtb {

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

/// Pre-existing entries are 0..size-2 in the provisional set; the newcomer is last.
template <typename ScoreFn>
std::size_t argmin_preexisting(const ActiveSet& provisional, ScoreFn score) {
  const std::size_t candidates = provisional.size() - 1;
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates; ++j) {
    const double s = score(j);
    if (s < best_score) {
      best_score = s;
      best = j;
    }
  }
  return best;
}

double shrink_lhs(double w, int y, double f, double chi, double deficit, double cG) {
  return forgetron_psi(w * y * chi, w * chi * f, cG) + deficit;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::mtbprj:
      return "mtbprj";
    case Algorithm::mtbprj2:
      return "mtbprj2";
    case Algorithm::mtrbp:
      return "mtrbp";
    case Algorithm::mtforg:
      return "mtforg";
    case Algorithm::perceptron_battery:
      return "perceptron";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "mtbprj") return Algorithm::mtbprj;
  if (name == "mtbprj2" || name == "mtbprj-2") return Algorithm::mtbprj2;
  if (name == "mtrbp") return Algorithm::mtrbp;
  if (name == "mtforg") return Algorithm::mtforg;
  if (name == "perceptron" || name == "battery" || name == "perceptron_battery")
    return Algorithm::perceptron_battery;
  throw InvalidArgument("unknown algorithm `" + std::string(name) + "`");
}

std::string_view to_string(UpdateAction a) {
  switch (a) {
    case UpdateAction::none:
      return "none";
    case UpdateAction::weight_update_projection:
      return "weight_update_projection";
    case UpdateAction::insert:
      return "insert";
    case UpdateAction::insert_evict:
      return "insert_evict";
    case UpdateAction::insert_evict_shrink:
      return "insert_evict_shrink";
  }
  return "?";
}

StepOutcome Learner::observe(const MultitaskExample& example) {
  ++steps_;
  StepOutcome out;
  out.score = score(example.instance);
  out.prediction = out.score >= 0.0 ? 1 : -1;
  out.mistake = static_cast<double>(example.label) * out.score <= 0.0;
  if (out.mistake) ++mistakes_;
  return out;
}

// ---------------------------------------------------------------------------

BudgetProjectron::BudgetProjectron(std::shared_ptr<const InteractionModel> model, KernelSpec spec,
                                   std::size_t budget, double eta)
    : set_(MultitaskKernel(std::move(model), spec),
           {budget, GramMode::multitask, WeightLayout::scalar, /*track_inverse=*/true}),
      eta_(eta) {
  if (eta < 0.0) throw InvalidArgument("projection threshold must be nonnegative");
}

StepOutcome BudgetProjectron::step(const MultitaskExample& example) {
  StepOutcome out = observe(example);
  if (!out.mistake) return out;
  const MultitaskInstance& q = example.instance;
  const double y = example.label;

  const Projection p = set_.project(q);
  if (p.residual_norm <= eta_) {
    if (!set_.empty()) set_.weights().row(0) += y * p.alphas.transpose();
    out.action = UpdateAction::weight_update_projection;
    return out;
  }

  if (set_.size() < set_.budget()) {
    set_.insert(q, scalar(y), steps_);
    out.action = UpdateAction::insert;
    return out;
  }

  const Eviction ev = set_.insert_with_eviction(q, scalar(y), steps_, [](const ActiveSet& s) {
    const Eigen::VectorXd loo = s.leave_one_out_residuals();
    return argmin_preexisting(s, [&](std::size_t j) {
      return std::abs(s.weights()(0, static_cast<Eigen::Index>(j))) * loo[static_cast<Eigen::Index>(j)];
    });
  });
  set_.weights().row(0) += ev.weight[0] * ev.gammas.transpose();
  out.action = UpdateAction::insert_evict;
  return out;
}

// ---------------------------------------------------------------------------

SharedBudgetProjectron::SharedBudgetProjectron(std::shared_ptr<const InteractionModel> model, KernelSpec spec,
                                               std::size_t budget, double eta)
    : set_(MultitaskKernel(std::move(model), spec),
           {budget, GramMode::single_task, WeightLayout::per_task, /*track_inverse=*/true}),
      eta_(eta) {
  if (eta < 0.0) throw InvalidArgument("projection threshold must be nonnegative");
}

Eigen::VectorXd shared_eviction_scores(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& weights) {
  if (residuals.size() != weights.cols()) throw InvalidArgument("residual count does not match weight columns");
  return residuals.cwiseProduct(weights.colwise().norm().transpose());
}

StepOutcome SharedBudgetProjectron::step(const MultitaskExample& example) {
  StepOutcome out = observe(example);
  if (!out.mistake) return out;
  const MultitaskInstance& q = example.instance;
  const double y = example.label;
  const Eigen::MatrixXd& inv = set_.kernel().model().inverse;
  const Eigen::VectorXd spread = y * inv.col(static_cast<Eigen::Index>(q.task));

  const Projection p = set_.project(q);
  if (p.residual_norm <= eta_) {
    if (!set_.empty()) set_.weights().noalias() += spread * p.alphas.transpose();
    out.action = UpdateAction::weight_update_projection;
    return out;
  }

  if (set_.size() < set_.budget()) {
    set_.insert(q, spread, steps_);
    out.action = UpdateAction::insert;
    return out;
  }

  const Eviction ev = set_.insert_with_eviction(q, spread, steps_, [](const ActiveSet& s) {
    const Eigen::VectorXd loo = s.leave_one_out_residuals();
    return argmin_preexisting(s, [&](std::size_t j) {
      const auto c = static_cast<Eigen::Index>(j);
      return loo[c] * s.weights().col(c).norm();
    });
  });

  Eigen::MatrixXd& w = set_.weights();
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const auto task_j = static_cast<Eigen::Index>(set_.entry(static_cast<std::size_t>(j)).instance.task);
    w.col(j) += ev.gammas[j] * ev.weight.cwiseProduct(inv.col(task_j));
  }
  out.action = UpdateAction::insert_evict;
  return out;
}

// ---------------------------------------------------------------------------

RandomizedBudgetPerceptron::RandomizedBudgetPerceptron(std::shared_ptr<const InteractionModel> model,
                                                       KernelSpec spec, std::size_t budget, std::uint64_t seed)
    : set_(MultitaskKernel(std::move(model), spec),
           {budget, GramMode::multitask, WeightLayout::scalar, /*track_inverse=*/false}),
      rng_(seed) {}

StepOutcome RandomizedBudgetPerceptron::step(const MultitaskExample& example) {
  StepOutcome out = observe(example);
  if (!out.mistake) return out;
  if (set_.size() < set_.budget()) {
    out.action = UpdateAction::insert;
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, set_.size() - 1);
    last_evicted_ = pick(rng_);
    set_.evict(last_evicted_);
    out.action = UpdateAction::insert_evict;
  }
  set_.insert(example.instance, scalar(example.label), steps_);
  return out;
}

// ---------------------------------------------------------------------------

ShrinkStep compute_shrink(double weight_r, int label_r, double score_r, double deficit, std::size_t mistakes,
                          double cG) {
  const double cap = forgetron_deficit_cap(cG, mistakes);
  const auto feasible = [&](double chi) {
    return shrink_lhs(weight_r, label_r, score_r, chi, deficit, cG) <= cap;
  };
  const auto result = [&](double phi) {
    return ShrinkStep{phi, forgetron_psi(weight_r * label_r * phi, weight_r * phi * score_r, cG)};
  };

  if (feasible(1.0)) return result(1.0);

  const double w2 = weight_r * weight_r;
  const double a = cG * cG * w2 - 2.0 * w2 * label_r * score_r;
  const double b = 2.0 * cG * weight_r * label_r;
  const double c = deficit - cap;  // a chi^2 + b chi + c <= 0

  double root = -1.0;
  const auto consider = [&](double r) {
    if (r > 0.0 && r < 1.0 && r > root) root = r;
  };
  if (a == 0.0) {
    if (b != 0.0) consider(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
      if (q != 0.0) {
        consider(q / a);
        consider(c / q);
      } else {
        consider(0.0);
      }
    }
  }
  if (root <= 0.0) throw NoFeasibleShrink("no shrinking coefficient in (0,1] keeps the deficit under its cap");

  // The root is exact only up to rounding; walk down to a point the
  // inequality accepts as evaluated.
  double phi = root;
  for (int i = 0; i < 64 && !feasible(phi); ++i) phi = std::nextafter(phi, 0.0);
  if (!feasible(phi)) {
    double lo = 0.0, hi = phi;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    phi = lo;
  }
  if (!(phi > 0.0) || !feasible(phi))
    throw NoFeasibleShrink("no shrinking coefficient in (0,1] keeps the deficit under its cap");
  return result(phi);
}

SelfTunedForgetron::SelfTunedForgetron(std::shared_ptr<const InteractionModel> model, KernelSpec spec,
                                       std::size_t budget)
    : set_(MultitaskKernel(model, spec), {budget, GramMode::multitask, WeightLayout::scalar, /*track_inverse=*/false}),
      cG_(model->cG) {}

StepOutcome SelfTunedForgetron::step(const MultitaskExample& example) {
  StepOutcome out = observe(example);
  if (!out.mistake) return out;

  if (set_.size() < set_.budget()) {
    set_.insert(example.instance, scalar(example.label), steps_);
    labels_.push_back(example.label);
    out.action = UpdateAction::insert;
    return out;
  }

  // oldest entry sits at index 0; score it under the pre-update predictor
  const double f_r = set_.predict(set_.entry(0).instance);
  const int y_r = labels_.front();
  const Eviction ev = set_.evict(0);
  labels_.pop_front();
  set_.insert(example.instance, scalar(example.label), steps_);
  labels_.push_back(example.label);

  const ShrinkStep shrink = compute_shrink(ev.weight[0], y_r, f_r, deficit_, mistakes_, cG_);
  set_.weights() *= shrink.phi;
  deficit_ += shrink.psi;
  last_phi_ = shrink.phi;
  out.action = UpdateAction::insert_evict_shrink;
  return out;
}

// ---------------------------------------------------------------------------

PerceptronBattery::PerceptronBattery(std::size_t tasks, KernelSpec spec)
    : set_(MultitaskKernel(std::make_shared<const InteractionModel>(
                               build_interaction_model(TaskGraph::disconnected(tasks))),
                           spec),
           {std::numeric_limits<std::size_t>::max(), GramMode::multitask, WeightLayout::scalar,
            /*track_inverse=*/false}) {}

StepOutcome PerceptronBattery::step(const MultitaskExample& example) {
  StepOutcome out = observe(example);
  if (!out.mistake) return out;
  set_.insert(example.instance, scalar(example.label), steps_);
  out.action = UpdateAction::insert;
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::shared_ptr<const InteractionModel> model) {
  validate(config.kernel);
  if (!config.kernel.normalize) throw InvalidArgument("learners require a normalized kernel (`:norm`)");
  if (!model || model->tasks() != config.graph.size())
    throw InvalidArgument("interaction model does not match the task graph");
  if (config.algorithm != Algorithm::perceptron_battery && config.budget == 0)
    throw InvalidArgument("budget must be positive");

  switch (config.algorithm) {
    case Algorithm::mtbprj:
    case Algorithm::mtbprj2:
      if (!(config.eta > 0.0)) throw InvalidArgument("projection threshold eta must be positive");
      if (config.algorithm == Algorithm::mtbprj)
        return std::make_unique<BudgetProjectron>(std::move(model), config.kernel, config.budget, config.eta);
      return std::make_unique<SharedBudgetProjectron>(std::move(model), config.kernel, config.budget, config.eta);
    case Algorithm::mtrbp:
      return std::make_unique<RandomizedBudgetPerceptron>(std::move(model), config.kernel, config.budget,
                                                          config.seed);
    case Algorithm::mtforg:
      return std::make_unique<SelfTunedForgetron>(std::move(model), config.kernel, config.budget);
    case Algorithm::perceptron_battery:
      return std::make_unique<PerceptronBattery>(config.graph.size(), config.kernel);
  }
  throw InvalidArgument("unknown algorithm");
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& config) {
  return make_learner(config, std::make_shared<const InteractionModel>(build_interaction_model(config.graph)));
}

std::vector<std::string> config_warnings(const LearnerConfig& config) {
  std::vector<std::string> out;
  if (config.algorithm == Algorithm::mtforg && config.budget <= 83)
    out.push_back("mtforg budget " + std::to_string(config.budget) +
                  " is at most 83; its mistake bound does not apply");
  return out;
}

}  // namespace mtb
