#include "mtbudget/active_set.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

#include "mtbudget/errors.hpp"

namespace mtb {

namespace {

void drop_row_col(Eigen::MatrixXd& m, Eigen::Index r) {
  const Eigen::Index n = m.rows();
  const Eigen::Index tail = n - 1 - r;
  if (tail > 0) {
    m.block(r, 0, tail, n) = m.block(r + 1, 0, tail, n).eval();
    m.block(0, r, n, tail) = m.block(0, r + 1, n, tail).eval();
  }
  m.conservativeResize(n - 1, n - 1);
}

void drop_col(Eigen::MatrixXd& m, Eigen::Index c) {
  const Eigen::Index n = m.cols();
  const Eigen::Index tail = n - 1 - c;
  if (tail > 0) m.block(0, c, m.rows(), tail) = m.block(0, c + 1, m.rows(), tail).eval();
  m.conservativeResize(m.rows(), n - 1);
}

}  // namespace

ActiveSet::ActiveSet(MultitaskKernel kernel, ActiveSetOptions options)
    : kernel_(std::move(kernel)), options_(options) {
  if (options_.budget == 0) throw InvalidArgument("budget must be positive");
  const Eigen::Index rows =
      options_.layout == WeightLayout::scalar ? 1 : static_cast<Eigen::Index>(kernel_.tasks());
  weights_.resize(rows, 0);
}

double ActiveSet::gram_kernel(const MultitaskInstance& a, const MultitaskInstance& b) const {
  return options_.gram == GramMode::multitask ? kernel_(a, b) : kernel_.base(a.x, b.x);
}

Eigen::VectorXd ActiveSet::kernel_column(const MultitaskInstance& q) const {
  Eigen::VectorXd col(static_cast<Eigen::Index>(entries_.size()));
  for (std::size_t l = 0; l < entries_.size(); ++l)
    col[static_cast<Eigen::Index>(l)] = gram_kernel(entries_[l].instance, q);
  return col;
}

double ActiveSet::predict(const MultitaskInstance& q) const {
  double score = 0.0;
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const MultitaskInstance& e = entries_[j].instance;
    double w = 0.0;
    if (options_.layout == WeightLayout::scalar) {
      w = weights_(0, col) * kernel_.coupling(e.task, q.task);
    } else {
      w = weights_(static_cast<Eigen::Index>(q.task), col);
    }
    if (w != 0.0) score += w * kernel_.base(e.x, q.x);
  }
  return score;
}

Projection ActiveSet::project(const MultitaskInstance& q) const {
  if (!options_.track_inverse) throw Error("projection needs an active set that tracks H^{-1}");
  const double self = gram_kernel(q, q);
  if (entries_.empty()) return {Eigen::VectorXd(0), std::sqrt(std::max(0.0, self))};
  const Eigen::VectorXd kq = kernel_column(q);
  Projection p;
  p.alphas = gram_inv_ * kq;
  p.residual_norm = std::sqrt(std::max(0.0, self - kq.dot(p.alphas)));
  return p;
}

void ActiveSet::insert(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
                       std::size_t inserted_at) {
  if (entries_.size() >= options_.budget)
    throw BudgetFull("active set already holds " + std::to_string(options_.budget) + " entries");
  append_entry(q, weight, inserted_at);
}

void ActiveSet::append_entry(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
                             std::size_t inserted_at) {
  if (weight.size() != weights_.rows()) throw InvalidArgument("weight column has the wrong number of rows");
  if (q.task >= kernel_.tasks()) throw TaskOutOfRange("instance task outside the graph");

  if (options_.track_inverse) {
    const auto n = static_cast<Eigen::Index>(entries_.size());
    const Eigen::VectorXd kq = kernel_column(q);
    const double self = gram_kernel(q, q) + ridge_;
    Eigen::VectorXd a;
    double schur = self;
    if (n > 0) {
      a = gram_inv_ * kq;
      schur = self - kq.dot(a);
    }

    gram_.conservativeResize(n + 1, n + 1);
    gram_.block(0, n, n, 1) = kq;
    gram_.block(n, 0, 1, n) = kq.transpose();
    gram_(n, n) = self;

    if (schur < kSchurFloor) {
      if (ridge_ == 0.0) {
        ridge_ = kRidge;
        gram_.diagonal().array() += kRidge;
      }
      rebuild_inverse();
    } else {
      const double inv_schur = 1.0 / schur;
      gram_inv_.conservativeResize(n + 1, n + 1);
      if (n > 0) {
        gram_inv_.topLeftCorner(n, n).noalias() += inv_schur * a * a.transpose();
        gram_inv_.block(0, n, n, 1) = -inv_schur * a;
        gram_inv_.block(n, 0, 1, n) = -inv_schur * a.transpose();
      }
      gram_inv_(n, n) = inv_schur;
    }
  }

  entries_.push_back({q, inserted_at});
  weights_.conservativeResize(Eigen::NoChange, weights_.cols() + 1);
  weights_.col(weights_.cols() - 1) = weight;
}

Eviction ActiveSet::insert_with_eviction(const MultitaskInstance& q, const Eigen::Ref<const Eigen::VectorXd>& weight,
                                         std::size_t inserted_at,
                                         const std::function<std::size_t(const ActiveSet&)>& choose) {
  if (entries_.size() != options_.budget) throw Error("insert_with_eviction requires a full active set");
  append_entry(q, weight, inserted_at);
  std::size_t r = 0;
  try {
    r = choose(*this);
  } catch (...) {
    evict(entries_.size() - 1);
    throw;
  }
  if (r >= entries_.size()) {
    evict(entries_.size() - 1);
    throw InvalidArgument("eviction index out of range");
  }
  return evict(r);
}

Eigen::VectorXd ActiveSet::leave_one_out_residuals() const {
  if (!options_.track_inverse) throw Error("leave-one-out residuals need an active set that tracks H^{-1}");
  Eigen::VectorXd res(gram_inv_.rows());
  for (Eigen::Index j = 0; j < res.size(); ++j) {
    const double d = gram_inv_(j, j);
    res[j] = d > 0.0 ? std::sqrt(1.0 / d) : 0.0;
  }
  return res;
}

Eviction ActiveSet::evict(std::size_t r) {
  if (r >= entries_.size()) throw InvalidArgument("eviction index out of range");
  const auto rr = static_cast<Eigen::Index>(r);
  Eviction ev;
  ev.index = r;
  ev.entry = entries_[r];
  ev.weight = weights_.col(rr);

  if (options_.track_inverse) {
    const auto n = gram_inv_.rows();
    const double pivot = gram_inv_(rr, rr);
    const Eigen::VectorXd col = gram_inv_.col(rr);
    ev.gammas.resize(n - 1);
    for (Eigen::Index j = 0, out = 0; j < n; ++j)
      if (j != rr) ev.gammas[out++] = -col[j] / pivot;
    gram_inv_.noalias() -= (col / pivot) * col.transpose();
    drop_row_col(gram_inv_, rr);
    drop_row_col(gram_, rr);
  }

  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(r));
  drop_col(weights_, rr);
  if (entries_.empty()) {
    ridge_ = 0.0;
    gram_.resize(0, 0);
    gram_inv_.resize(0, 0);
  }
  return ev;
}

void ActiveSet::rebuild() {
  if (!options_.track_inverse) return;
  const auto n = static_cast<Eigen::Index>(entries_.size());
  gram_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j)
      gram_(i, j) = gram_(j, i) = gram_kernel(entries_[i].instance, entries_[j].instance);
  gram_.diagonal().array() += ridge_;
  rebuild_inverse();
}

void ActiveSet::rebuild_inverse() {
  const auto n = gram_.rows();
  if (n == 0) {
    gram_inv_.resize(0, 0);
    return;
  }
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_);
  Eigen::MatrixXd inv = ldlt.solve(eye);
  // one refinement sweep: X <- X + X (I - H X)
  inv += inv * (eye - gram_ * inv);
  gram_inv_ = 0.5 * (inv + inv.transpose());
}

double ActiveSet::inverse_residual() const {
  if (gram_.rows() == 0) return 0.0;
  return (gram_ * gram_inv_ - Eigen::MatrixXd::Identity(gram_.rows(), gram_.cols())).cwiseAbs().maxCoeff();
}

void write_snapshot(std::ostream& out, const ActiveSet& set) {
  const auto old_precision = out.precision(17);
  out << "budget " << set.budget() << " rows " << set.weight_rows() << '\n';
  for (std::size_t j = 0; j < set.size(); ++j) {
    const auto& inst = set.entry(j).instance;
    out << inst.task + 1 << ' ';
    for (Eigen::Index r = 0; r < set.weight_rows(); ++r)
      out << (r ? "," : "") << set.weights()(r, static_cast<Eigen::Index>(j));
    for (std::size_t n = 0; n < inst.x.nnz(); ++n) out << ' ' << inst.x.indices()[n] << ':' << inst.x.values()[n];
    out << '\n';
  }
  out.precision(old_precision);
}

ActiveSet read_snapshot(std::istream& in, MultitaskKernel kernel, ActiveSetOptions options) {
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::size_t rows = 0;
  std::optional<ActiveSet> set;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string head;
    if (!(fields >> head)) continue;
    if (!have_header) {
      std::string rows_kw;
      if (head != "budget" || !(fields >> options.budget >> rows_kw >> rows) || rows_kw != "rows")
        throw ParseError(lineno, "expected `budget <B> rows <r>`");
      set.emplace(kernel, options);
      if (static_cast<std::size_t>(set->weight_rows()) != rows)
        throw ParseError(lineno, "weight rows do not match the configured layout");
      have_header = true;
      continue;
    }

    long long task = 0;
    try {
      task = std::stoll(head);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad task id `" + head + "`");
    }
    if (task < 1 || static_cast<std::size_t>(task) > kernel.tasks()) throw ParseError(lineno, "task out of range");

    std::string wtoken;
    if (!(fields >> wtoken)) throw ParseError(lineno, "missing weight column");
    Eigen::VectorXd w(static_cast<Eigen::Index>(rows));
    std::istringstream wstream(wtoken);
    std::string part;
    Eigen::Index r = 0;
    while (std::getline(wstream, part, ',')) {
      if (r >= w.size()) throw ParseError(lineno, "too many weights");
      try {
        w[r++] = std::stod(part);
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad weight `" + part + "`");
      }
    }
    if (r != w.size()) throw ParseError(lineno, "too few weights");

    std::vector<FeatureId> idx;
    std::vector<double> val;
    std::string tok;
    while (fields >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(lineno, "expected <id>:<value>");
      try {
        idx.push_back(static_cast<FeatureId>(std::stoul(tok.substr(0, colon))));
        val.push_back(std::stod(tok.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad feature `" + tok + "`");
      }
    }
    MultitaskInstance inst{SparseVector(std::move(idx), std::move(val)), static_cast<TaskId>(task - 1)};
    set->insert(inst, w, set->size());
  }
  if (!have_header) throw ParseError(lineno, "empty snapshot");
  return std::move(*set);
}

}  // namespace mtb
