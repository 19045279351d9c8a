#include "mtbudget/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string_view>

#include "mtbudget/errors.hpp"

namespace mtb {

namespace {

std::string_view trim_comment(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  return line;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_token(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && end == tok.data() + tok.size();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool binary = true;
};

template <typename Example>
std::vector<Example> rescale(const std::vector<Example>& examples) {
  std::map<FeatureId, Range> ranges;
  for (const auto& ex : examples) {
    const SparseVector& x = ex.instance.x;
    for (std::size_t n = 0; n < x.nnz(); ++n) {
      Range& r = ranges[x.indices()[n]];
      const double v = x.values()[n];
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
      if (v != 0.0 && v != 1.0) r.binary = false;
    }
  }

  std::vector<Example> out = examples;
  for (auto& ex : out) {
    const SparseVector& x = ex.instance.x;
    std::vector<FeatureId> idx;
    std::vector<double> val;
    for (std::size_t n = 0; n < x.nnz(); ++n) {
      const Range& r = ranges.at(x.indices()[n]);
      double v = x.values()[n];
      if (!r.binary) v = r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.0;
      if (v == 0.0) continue;
      idx.push_back(x.indices()[n]);
      val.push_back(v);
    }
    ex.instance.x = SparseVector(std::move(idx), std::move(val));
  }
  return out;
}

}  // namespace

ScoredStream parse_dataset(std::istream& in, std::size_t tasks) {
  ScoredStream stream;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(trim_comment(line));
    if (tokens.empty()) continue;
    if (tokens.size() < 2) throw ParseError(lineno, "expected `<task> <label> [<id>:<value> ...]`");

    long long task = 0;
    if (!parse_token(tokens[0], task)) throw ParseError(lineno, "bad task id `" + std::string(tokens[0]) + "`");
    if (task < 1 || (tasks != 0 && static_cast<std::size_t>(task) > tasks))
      throw TaskOutOfRange("line " + std::to_string(lineno) + ": task " + std::to_string(task) +
                           " outside 1.." + (tasks ? std::to_string(tasks) : std::string("k")));

    double label = 0.0;
    if (!parse_token(tokens[1], label) || !std::isfinite(label))
      throw ParseError(lineno, "bad label `" + std::string(tokens[1]) + "`");

    std::vector<FeatureId> idx;
    std::vector<double> val;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      unsigned long id = 0;
      double v = 0.0;
      if (colon == std::string_view::npos || !parse_token(tok.substr(0, colon), id) ||
          !parse_token(tok.substr(colon + 1), v) || !std::isfinite(v))
        throw ParseError(lineno, "bad feature `" + std::string(tok) + "`");
      if (id < 1) throw ParseError(lineno, "feature ids are 1-based");
      if (!idx.empty() && id <= idx.back()) throw ParseError(lineno, "feature ids must be strictly increasing");
      idx.push_back(static_cast<FeatureId>(id));
      val.push_back(v);
    }

    ScoredExample ex;
    ex.instance.task = static_cast<TaskId>(task - 1);
    ex.instance.x = SparseVector(std::move(idx), std::move(val));
    ex.score = label;
    stream.k = std::max(stream.k, static_cast<std::size_t>(task));
    stream.d = std::max(stream.d, ex.instance.x.max_feature());
    stream.examples.push_back(std::move(ex));
  }
  if (tasks != 0) stream.k = tasks;
  return stream;
}

ScoredStream load_dataset(const std::string& path, std::size_t tasks) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path);
  return parse_dataset(in, tasks);
}

DatasetStream to_binary(const ScoredStream& stream) {
  DatasetStream out{{}, stream.k, stream.d};
  out.examples.reserve(stream.examples.size());
  for (std::size_t n = 0; n < stream.examples.size(); ++n) {
    const auto& ex = stream.examples[n];
    if (ex.score != 1.0 && ex.score != -1.0)
      throw InvalidArgument("example " + std::to_string(n + 1) + " has non-binary label; binarize it first");
    out.examples.push_back({ex.instance, ex.score > 0 ? 1 : -1});
  }
  return out;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw EmptyStream("percentile of an empty sample");
  if (!(pct >= 0.0 && pct <= 100.0)) throw InvalidArgument("percentile must lie in [0,100]");
  std::sort(values.begin(), values.end());
  const double rank = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DatasetStream binarize_by_percentile(const ScoredStream& stream, double pct) {
  if (stream.examples.empty()) throw EmptyStream("cannot binarize an empty stream");
  std::vector<double> scores;
  scores.reserve(stream.examples.size());
  for (const auto& ex : stream.examples) scores.push_back(ex.score);
  const double threshold = percentile(scores, pct);

  DatasetStream out{{}, stream.k, stream.d};
  out.examples.reserve(stream.examples.size());
  for (const auto& ex : stream.examples) out.examples.push_back({ex.instance, ex.score > threshold ? 1 : -1});
  return out;
}

DatasetStream rescale_features(const DatasetStream& stream) {
  return {rescale(stream.examples), stream.k, stream.d};
}

ScoredStream rescale_features(const ScoredStream& stream) { return {rescale(stream.examples), stream.k, stream.d}; }

void write_dataset(std::ostream& out, const DatasetStream& stream) {
  const auto old_precision = out.precision(17);
  for (const auto& ex : stream.examples) {
    out << ex.instance.task + 1 << ' ' << (ex.label > 0 ? "+1" : "-1");
    const SparseVector& x = ex.instance.x;
    for (std::size_t n = 0; n < x.nnz(); ++n) out << ' ' << x.indices()[n] << ':' << x.values()[n];
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mtb
