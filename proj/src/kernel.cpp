#include "mtbudget/kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mtbudget/errors.hpp"

namespace mtb {

SparseVector::SparseVector(std::vector<FeatureId> indices, std::vector<double> values)
    : indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.size() != values_.size()) throw InvalidArgument("sparse vector index/value length mismatch");
  for (std::size_t i = 1; i < indices_.size(); ++i)
    if (indices_[i] <= indices_[i - 1]) throw InvalidArgument("sparse vector ids must be strictly increasing");
  for (double v : values_) squared_norm_ += v * v;
}

SparseVector SparseVector::from_dense(std::span<const double> dense) {
  std::vector<FeatureId> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] == 0.0) continue;
    idx.push_back(static_cast<FeatureId>(i + 1));
    val.push_back(dense[i]);
  }
  return SparseVector(std::move(idx), std::move(val));
}

double SparseVector::at(FeatureId id) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), id);
  if (it == indices_.end() || *it != id) return 0.0;
  return values_[static_cast<std::size_t>(it - indices_.begin())];
}

double dot(const SparseVector& a, const SparseVector& b) {
  const SparseVector& small = a.nnz() <= b.nnz() ? a : b;
  const SparseVector& large = a.nnz() <= b.nnz() ? b : a;
  auto si = small.indices();
  auto sv = small.values();
  auto li = large.indices();
  auto lv = large.values();

  double sum = 0.0;
  auto cursor = li.begin();
  for (std::size_t n = 0; n < si.size() && cursor != li.end(); ++n) {
    cursor = std::lower_bound(cursor, li.end(), si[n]);
    if (cursor != li.end() && *cursor == si[n]) sum += sv[n] * lv[static_cast<std::size_t>(cursor - li.begin())];
  }
  return sum;
}

namespace {

double parse_number(std::string_view token, std::string_view context) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size())
    throw InvalidArgument("bad number `" + std::string(token) + "` in kernel spec `" + std::string(context) + "`");
  return v;
}

double raw_kernel(const SparseVector& a, const SparseVector& b, double ab, const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear:
      return ab;
    case KernelKind::polynomial:
      return std::pow(ab + spec.offset, spec.degree);
    case KernelKind::gaussian: {
      const double dist2 = std::max(0.0, a.squared_norm() + b.squared_norm() - 2.0 * ab);
      return std::exp(-spec.gamma * dist2);
    }
  }
  return 0.0;
}

double self_kernel(const SparseVector& a, const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear:
      return a.squared_norm();
    case KernelKind::polynomial:
      return std::pow(a.squared_norm() + spec.offset, spec.degree);
    case KernelKind::gaussian:
      return 1.0;
  }
  return 0.0;
}

}  // namespace

KernelSpec parse_kernel_spec(std::string_view text) {
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  bool normalize = false;
  if (parts.size() > 1 && parts.back() == "norm") {
    normalize = true;
    parts.pop_back();
  }

  KernelSpec spec;
  if (parts[0] == "linear" && parts.size() == 1) {
    spec = KernelSpec::linear(normalize);
  } else if (parts[0] == "poly" && parts.size() == 3) {
    const double degree = parse_number(parts[1], text);
    if (degree != std::floor(degree)) throw InvalidArgument("polynomial degree must be an integer");
    spec = KernelSpec::polynomial(static_cast<int>(degree), parse_number(parts[2], text), normalize);
  } else if (parts[0] == "gauss" && parts.size() == 2) {
    spec = KernelSpec::gaussian(parse_number(parts[1], text), normalize);
  } else {
    throw InvalidArgument("unrecognized kernel spec `" + std::string(text) + "`");
  }
  validate(spec);
  return spec;
}

std::string to_string(const KernelSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  switch (spec.kind) {
    case KernelKind::linear:
      out << "linear";
      break;
    case KernelKind::polynomial:
      out << "poly:" << spec.degree << ':' << spec.offset;
      break;
    case KernelKind::gaussian:
      out << "gauss:" << spec.gamma;
      break;
  }
  if (spec.normalize) out << ":norm";
  return out.str();
}

void validate(const KernelSpec& spec) {
  if (spec.kind == KernelKind::polynomial && (spec.degree < 1 || !(spec.offset >= 0.0)))
    throw InvalidArgument("polynomial kernel needs degree >= 1 and offset >= 0");
  if (spec.kind == KernelKind::gaussian && !(spec.gamma > 0.0))
    throw InvalidArgument("gaussian kernel needs gamma > 0");
}

double base_kernel(const SparseVector& a, const SparseVector& b, const KernelSpec& spec) {
  const double ab = dot(a, b);
  const double raw = raw_kernel(a, b, ab, spec);
  if (!spec.normalize || spec.kind == KernelKind::gaussian) return raw;

  const double aa = self_kernel(a, spec);
  const double bb = self_kernel(b, spec);
  if (!(aa > 0.0) || !(bb > 0.0)) throw ZeroNormInstance("cannot normalize a kernel with zero self-similarity");
  if (&a == &b || a == b) return 1.0;
  return raw / (std::sqrt(aa) * std::sqrt(bb));
}

double mt_kernel(const MultitaskInstance& a, const MultitaskInstance& b, const InteractionModel& model,
                 const KernelSpec& spec) {
  return model.coupling(a.task, b.task) * base_kernel(a.x, b.x, spec);
}

MultitaskKernel::MultitaskKernel(std::shared_ptr<const InteractionModel> model, KernelSpec spec)
    : model_(std::move(model)), spec_(spec) {
  if (!model_) throw InvalidArgument("multitask kernel needs an interaction model");
  validate(spec_);
}

double MultitaskKernel::operator()(const MultitaskInstance& a, const MultitaskInstance& b) const {
  const double c = model_->coupling(a.task, b.task);
  if (c == 0.0) return 0.0;
  return c * base_kernel(a.x, b.x, spec_);
}

}  // namespace mtb
