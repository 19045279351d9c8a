#include "mtbudget/bounds.hpp"

#include <cmath>
#include <string>

#include "mtbudget/errors.hpp"

namespace mtb {

double mtrbp_bound(double cum_loss, double cG, double shift, std::size_t budget, double epsilon,
                   bool* log_term_nonpositive) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  if (budget == 0) throw DomainError("budget must be positive");
  const double b = static_cast<double>(budget);
  const double log_term = std::log(b / 3.0);
  if (log_term_nonpositive) *log_term_nonpositive = log_term <= 0.0;
  return (cum_loss + cG * shift * std::sqrt(b) + epsilon * std::pow(b, 1.5) / 2.0 + epsilon * b / 4.0 * log_term) /
         (1.0 - epsilon);
}

double mtrbp_epsilon_for(double trace_norm, double cG, std::size_t budget) {
  if (budget == 0) throw DomainError("budget must be positive");
  return 2.0 * cG * trace_norm / std::sqrt(static_cast<double>(budget));
}

double mtforg_bound(double cum_loss, std::size_t budget) {
  if (budget <= 83) throw DomainError("the Forgetron bound needs B > 83, got " + std::to_string(budget));
  const double b1 = static_cast<double>(budget) + 1.0;
  return 4.0 * cum_loss + b1 / (2.0 * std::log(b1));
}

double mtforg_comparator_cap(double cG, std::size_t budget) {
  const double b1 = static_cast<double>(budget) + 1.0;
  return std::sqrt(b1 / std::log(b1)) / (4.0 * cG);
}

}  // namespace mtb
