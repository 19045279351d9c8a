#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <sstream>

#include "mtbudget/active_set.hpp"
#include "mtbudget/errors.hpp"
#include "support.hpp"

using namespace mtb;

namespace {

Eigen::VectorXd one(double w) { return Eigen::VectorXd::Constant(1, w); }

ActiveSet make_set(const TaskGraph& g, std::size_t budget, KernelSpec spec = KernelSpec::gaussian(0.5)) {
  return ActiveSet(MultitaskKernel(testing::model_of(g), spec), {budget, GramMode::multitask, WeightLayout::scalar, true});
}

std::vector<MultitaskInstance> stored(const ActiveSet& s) {
  std::vector<MultitaskInstance> out;
  for (const auto& e : s.entries()) out.push_back(e.instance);
  return out;
}

// Gram of the stored entries followed by q.
Eigen::MatrixXd bordered_gram(const ActiveSet& s, const MultitaskInstance& q) {
  auto xs = stored(s);
  xs.push_back(q);
  return testing::gram_oracle(xs, s.kernel().model(), s.kernel().spec());
}

std::vector<Eigen::Index> all_but(Eigen::Index n, Eigen::Index skip) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i)
    if (i != skip) out.push_back(i);
  return out;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("prediction") {
  const SparseVector x({1, 2}, {0.6, 0.8});
  auto edgeless = make_set(TaskGraph::disconnected(3), 10);
  CHECK(edgeless.predict({x, 0}) == 0.0);
  edgeless.insert({x, 0}, one(1.0), 0);
  CHECK(edgeless.predict({x, 0}) == 1.0);
  CHECK(edgeless.predict({x, 1}) == 0.0);

  auto complete = make_set(TaskGraph::complete(3), 10);
  complete.insert({x, 0}, one(1.0), 0);
  CHECK(complete.predict({x, 1}) == doctest::Approx(0.25));
}

TEST_CASE("projection examples") {
  const SparseVector x({1, 2}, {0.6, 0.8});
  auto s = make_set(TaskGraph::disconnected(2), 10, KernelSpec::linear());
  const Projection empty = s.project({x, 1});
  CHECK(empty.alphas.size() == 0);
  CHECK(empty.residual_norm == 1.0);

  s.insert({x, 0}, one(1.0), 0);
  const Projection same = s.project({x, 0});
  CHECK(same.alphas.size() == 1);
  CHECK(same.alphas[0] == doctest::Approx(1.0));
  CHECK(same.residual_norm <= 1e-6);

  auto orth = make_set(TaskGraph::disconnected(1), 10, KernelSpec::linear());
  const SparseVector e1({1}, {1.0}), e2({2}, {1.0});
  orth.insert({e1, 0}, one(1.0), 0);
  orth.insert({e2, 0}, one(1.0), 1);
  const Projection p = orth.project({e2, 0});
  CHECK(p.alphas[0] == doctest::Approx(0.0));
  CHECK(p.alphas[1] == doctest::Approx(1.0));
  CHECK(p.residual_norm <= 1e-6);
  CHECK(orth.gram_inverse().isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("insertion") {
  const SparseVector x({1, 2}, {0.6, 0.8});
  auto s = make_set(TaskGraph::complete(3), 2);
  s.insert({x, 1}, one(1.0), 0);
  CHECK(s.gram()(0, 0) == doctest::Approx(0.5));
  CHECK(s.gram_inverse()(0, 0) == doctest::Approx(2.0));
  s.insert({SparseVector({3}, {1.0}), 1}, one(-1.0), 1);
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.insert({x, 2}, one(1.0), 2), BudgetFull);
  CHECK(s.size() == 2);
}

TEST_CASE("near duplicates switch on the ridge") {
  std::mt19937_64 rng(4);
  auto s = make_set(TaskGraph::complete(3), 20);
  const auto a = testing::random_instance(rng, 3, 6);
  s.insert(a, one(1.0), 0);
  s.insert(testing::random_instance(rng, 3, 6), one(1.0), 1);
  CHECK_FALSE(s.regularized());
  s.insert(a, one(1.0), 2);
  CHECK(s.regularized());
  CHECK(s.inverse_residual() <= 1e-6);
  const Eigen::MatrixXd ridged =
      testing::gram_oracle(stored(s), s.kernel().model(), s.kernel().spec()) +
      ActiveSet::kRidge * Eigen::MatrixXd::Identity(3, 3);
  CHECK((s.gram() - ridged).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((s.gram() * s.gram_inverse() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-6);

  const Eigen::VectorXd loo = s.leave_one_out_residuals();
  CHECK(loo[0] <= 1e-4);
  CHECK(loo[2] <= 1e-4);

  const Eviction ev = s.evict(2);
  CHECK(ev.gammas.size() == 2);
  CHECK(ev.gammas[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(std::abs(ev.gammas[1]) <= 1e-4);
  CHECK(s.inverse_residual() <= 1e-6);

  s.evict(0);
  s.evict(0);
  CHECK(s.empty());
  CHECK_FALSE(s.regularized());
}

TEST_CASE("leave-one-out residual examples") {
  auto s = make_set(TaskGraph::disconnected(1), 5, KernelSpec::linear());
  s.insert({SparseVector({1}, {1.0}), 0}, one(1.0), 0);
  s.insert({SparseVector({2}, {1.0}), 0}, one(1.0), 1);
  const Eigen::VectorXd loo = s.leave_one_out_residuals();
  CHECK(loo[0] == doctest::Approx(1.0));
  CHECK(loo[1] == doctest::Approx(1.0));
}

TEST_CASE("projection, residuals and eviction coefficients agree with least squares") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 1 + trial % 5;
    auto s = make_set(TaskGraph::random(k, 0.5, trial), 10, trial % 2 ? KernelSpec::gaussian(0.4) : KernelSpec::polynomial(2, 1.0));
    const std::size_t n = 1 + trial % 10;
    for (std::size_t t = 0; t < n; ++t) s.insert(testing::random_instance(rng, k, 6), one(1.0), t);
    if (s.regularized()) continue;
    const auto size = static_cast<Eigen::Index>(s.size());

    const auto q = testing::random_instance(rng, k, 6);
    const Eigen::MatrixXd bg = bordered_gram(s, q);
    std::vector<Eigen::Index> basis(size);
    std::iota(basis.begin(), basis.end(), 0);
    Eigen::VectorXd coef;
    const double dist = testing::span_distance(bg, basis, size, &coef);
    const Projection p = s.project(q);
    CHECK(std::abs(p.residual_norm - dist) <= 1e-6);
    CHECK(max_abs(p.alphas - coef) <= 1e-6);

    const Eigen::MatrixXd g = bg.topLeftCorner(size, size);
    const Eigen::VectorXd loo = s.leave_one_out_residuals();
    for (Eigen::Index j = 0; j < size; ++j)
      CHECK(std::abs(loo[j] - testing::span_distance(g, all_but(size, j), j)) <= 1e-6);

    const auto r = static_cast<Eigen::Index>(trial % size);
    Eigen::VectorXd gamma_oracle;
    testing::span_distance(g, all_but(size, r), r, &gamma_oracle);
    const Eviction ev = s.evict(static_cast<std::size_t>(r));
    CHECK(max_abs(ev.gammas - gamma_oracle) <= 1e-6);
  }
}

TEST_CASE("random insert and evict sequences keep H and its inverse current") {
  std::mt19937_64 rng(2024);
  for (int run = 0; run < 4; ++run) {
    const std::size_t k = 4;
    auto s = make_set(TaskGraph::random(k, 0.5, run), 20, KernelSpec::gaussian(0.5));
    std::bernoulli_distribution coin(0.5);
    for (int op = 0; op < 500; ++op) {
      const bool do_insert = s.empty() || (s.size() < s.budget() && coin(rng));
      if (do_insert) {
        s.insert(testing::random_instance(rng, k, 8), one(1.0), op);
      } else {
        std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
        s.evict(pick(rng));
      }
      REQUIRE(s.size() <= s.budget());
      REQUIRE(s.weights().cols() == static_cast<Eigen::Index>(s.size()));
      const auto n = static_cast<Eigen::Index>(s.size());
      Eigen::MatrixXd direct = testing::gram_oracle(stored(s), s.kernel().model(), s.kernel().spec());
      if (s.regularized()) direct += ActiveSet::kRidge * Eigen::MatrixXd::Identity(n, n);
      CHECK(max_abs(s.gram() - direct) <= 1e-9);
      CHECK(s.inverse_residual() <= 1e-6);
      if (n > 0 && !s.regularized()) CHECK(max_abs(s.gram_inverse() - direct.inverse()) <= 1e-6);
    }
  }
}

TEST_CASE("inserting an entry never increases a residual") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = make_set(TaskGraph::complete(3), 12, KernelSpec::gaussian(0.3));
    std::vector<MultitaskInstance> probes;
    for (int i = 0; i < 10; ++i) probes.push_back(testing::random_instance(rng, 3, 5));
    std::vector<double> before(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) before[i] = s.project(probes[i]).residual_norm;
    for (int t = 0; t < 10; ++t) {
      s.insert(testing::random_instance(rng, 3, 5), one(1.0), t);
      for (std::size_t i = 0; i < probes.size(); ++i) {
        const double now = s.project(probes[i]).residual_norm;
        CHECK(now <= before[i] + 1e-9);
        before[i] = now;
      }
    }
  }
}

TEST_CASE("single-task gram and per-task weights") {
  auto model = testing::model_of(TaskGraph::complete(3));
  ActiveSet s(MultitaskKernel(model, KernelSpec::gaussian(1.0)), {5, GramMode::single_task, WeightLayout::per_task, true});
  const SparseVector x({1}, {1.0});
  Eigen::VectorXd w(3);
  w << 0.5, 0.25, 0.25;
  s.insert({x, 0}, w, 0);
  CHECK(s.gram()(0, 0) == 1.0);
  CHECK(s.weight_rows() == 3);
  CHECK(s.predict({x, 1}) == doctest::Approx(0.25));
  CHECK(s.project({x, 2}).residual_norm <= 1e-6);
}

TEST_CASE("eviction during insertion") {
  std::mt19937_64 rng(12);
  auto s = make_set(TaskGraph::complete(2), 3);
  for (int t = 0; t < 3; ++t) s.insert(testing::random_instance(rng, 2, 4), one(t + 1.0), t);
  const auto before = stored(s);
  const auto q = testing::random_instance(rng, 2, 4);

  std::size_t seen = 0;
  const Eviction ev = s.insert_with_eviction(q, one(9.0), 3, [&](const ActiveSet& provisional) {
    seen = provisional.size();
    return std::size_t{1};
  });
  CHECK(seen == 4);
  CHECK(ev.index == 1);
  CHECK(ev.weight[0] == 2.0);
  CHECK(ev.entry.instance == before[1]);
  CHECK(s.size() == 3);
  CHECK(s.entry(2).instance == q);
  CHECK(s.weights()(0, 2) == 9.0);
  CHECK(s.inverse_residual() <= 1e-6);

  const auto snapshot = stored(s);
  CHECK_THROWS(s.insert_with_eviction(testing::random_instance(rng, 2, 4), one(1.0), 4,
                                      [](const ActiveSet&) -> std::size_t { throw std::runtime_error("no"); }));
  CHECK(stored(s) == snapshot);
  CHECK(s.inverse_residual() <= 1e-6);
}

TEST_CASE("evicting the only entry") {
  auto s = make_set(TaskGraph::complete(2), 3);
  s.insert({SparseVector({1}, {1.0}), 0}, one(1.0), 0);
  const Eviction ev = s.evict(0);
  CHECK(ev.gammas.size() == 0);
  CHECK(s.empty());
}

TEST_CASE("snapshots round trip") {
  std::mt19937_64 rng(6);
  auto model = testing::model_of(TaskGraph::path(3));
  const ActiveSetOptions opts{7, GramMode::single_task, WeightLayout::per_task, true};
  ActiveSet s(MultitaskKernel(model, KernelSpec::gaussian(0.5)), opts);
  for (int t = 0; t < 5; ++t) s.insert(testing::random_instance(rng, 3, 6), Eigen::VectorXd::Random(3), t);
  std::stringstream buf;
  write_snapshot(buf, s);
  const ActiveSet back = read_snapshot(buf, MultitaskKernel(model, KernelSpec::gaussian(0.5)), opts);
  CHECK(back.budget() == 7);
  CHECK(stored(back) == stored(s));
  CHECK(back.weights() == s.weights());
  CHECK(max_abs(back.gram_inverse() - s.gram_inverse()) <= 1e-9);
}
