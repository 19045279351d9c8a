#include "mtbudget/evaluation.hpp"

#include <cmath>
#include <memory>

#include "mtbudget/errors.hpp"

namespace mtb {

void Confusion::add(int prediction, int label) {
  if (prediction > 0) {
    (label > 0 ? tp : fp) += 1;
  } else {
    (label > 0 ? fn : tn) += 1;
  }
}

double Confusion::f_measure() const noexcept {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

StreamMetrics run_stream(const DatasetStream& stream, Learner& learner, std::size_t epochs) {
  StreamMetrics m;
  m.per_task.resize(stream.k);
  const std::size_t n = stream.examples.size();
  const std::size_t every = std::max<std::size_t>(1, n / 100);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t t = 0; t < n; ++t) {
      const MultitaskExample& ex = stream.examples[t];
      if (ex.instance.task >= stream.k) throw TaskOutOfRange("example task outside the stream's task range");
      const StepOutcome out = learner.step(ex);
      m.micro.add(out.prediction, ex.label);
      m.per_task[ex.instance.task].add(out.prediction, ex.label);
      if (out.mistake) ++m.mistakes;
      ++m.steps;
      if ((t + 1) % every == 0) m.trajectory.push_back({m.steps, m.micro.f_measure(), learner.active_set().size()});
    }
  }
  m.final_active = learner.active_set().size();
  return m;
}

StreamMetrics run_stream(const DatasetStream& stream, const LearnerConfig& config, std::size_t epochs) {
  if (config.graph.size() < stream.k)
    throw TaskOutOfRange("stream has " + std::to_string(stream.k) + " tasks but the graph only " +
                         std::to_string(config.graph.size()));
  auto learner = make_learner(config);
  return run_stream(stream, *learner, epochs);
}

std::size_t baseline_active_size(const DatasetStream& stream, const KernelSpec& kernel) {
  if (stream.examples.empty()) return 0;
  PerceptronBattery battery(std::max<std::size_t>(stream.k, 1), kernel);
  for (const auto& ex : stream.examples) battery.step(ex);
  return battery.active_set().size();
}

bool is_fractional_budget(const std::string& text) { return !text.empty() && text.back() == '%'; }

std::size_t resolve_budget(const std::string& text, std::size_t baseline) {
  const bool fractional = is_fractional_budget(text);
  const std::string number = fractional ? text.substr(0, text.size() - 1) : text;
  double value = 0.0;
  std::size_t used = 0;
  try {
    value = std::stod(number, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != number.size() || !(value > 0.0) || (!fractional && value != std::floor(value)))
    throw InvalidArgument("bad budget `" + text + "`");
  if (!fractional) return static_cast<std::size_t>(value);

  const auto b = static_cast<std::size_t>(std::ceil(value * static_cast<double>(baseline) / 100.0));
  if (b == 0) throw InvalidArgument("budget " + text + " of a baseline of 0 resolves to 0");
  return b;
}

}  // namespace mtb
