#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mtbudget/kernel.hpp"

namespace mtb {

/// Example whose label is still a real-valued score.
struct ScoredExample {
  MultitaskInstance instance;
  double score = 0.0;
};

/// Parsed stream before binarization.
struct ScoredStream {
  std::vector<ScoredExample> examples;
  std::size_t k = 0;  // number of tasks
  FeatureId d = 0;    // largest feature id seen
};

/// Ordered multitask examples with +-1 labels.
struct DatasetStream {
  std::vector<MultitaskExample> examples;
  std::size_t k = 0;
  FeatureId d = 0;

  std::size_t size() const noexcept { return examples.size(); }
};

/*
 * Line format `<task> <label> <id>:<value> ...`, task and feature ids
 * 1-based, `#` starts a comment. Labels may be `+1`, `-1` or any real score.
 * When `tasks` is nonzero, task ids above it raise TaskOutOfRange and k is set
 * to `tasks`; otherwise k is the largest task id seen. Task id 0 always raises
 * TaskOutOfRange. Malformed tokens raise ParseError with the line number.
 */
ScoredStream parse_dataset(std::istream& in, std::size_t tasks = 0);
ScoredStream load_dataset(const std::string& path, std::size_t tasks = 0);

/// Keeps labels that are exactly +1/-1; throws InvalidArgument otherwise.
DatasetStream to_binary(const ScoredStream& stream);

/// Linear-interpolation percentile of `values` (pct in [0,100]).
double percentile(std::vector<double> values, double pct);

/// +1 where score > percentile(scores, pct), -1 otherwise. Throws EmptyStream.
DatasetStream binarize_by_percentile(const ScoredStream& stream, double pct = 75.0);

/// Per feature id: values already inside {0,1} are left alone, others are
/// mapped affinely onto [0,1] over the whole stream (constant features to 0).
/// Entries that become 0 are dropped from the sparse vectors.
DatasetStream rescale_features(const DatasetStream& stream);
ScoredStream rescale_features(const ScoredStream& stream);

void write_dataset(std::ostream& out, const DatasetStream& stream);

}  // namespace mtb
