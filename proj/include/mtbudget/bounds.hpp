#pragma once

#include <cstddef>

namespace mtb {

/*
 * Expected-mistake bound of the randomized budget Perceptron on the
 * multitask kernel:
 *
 *   (L + cG S sqrt(B) + eps B^{3/2} / 2 + (eps B / 4) ln(B / 3)) / (1 - eps)
 *
 * with L the cumulative hinge loss of the comparator sequence and S its total
 * shift under A^{1/2}. Throws DomainError unless 0 < eps < 1 and B > 0.
 * B <= 3 makes the log term nonpositive; that is allowed and reported through
 * `log_term_nonpositive`.
 */
double mtrbp_bound(double cum_loss, double cG, double shift, std::size_t budget, double epsilon,
                   bool* log_term_nonpositive = nullptr);

/// Smallest eps making `trace_norm` = max_t sqrt(trace(K_g A)) admissible at
/// budget B: eps = 2 cG trace_norm / sqrt(B).
double mtrbp_epsilon_for(double trace_norm, double cG, std::size_t budget);

/// Forgetron bound 4 L + (B + 1) / (2 ln(B + 1)); throws DomainError for B <= 83.
double mtforg_bound(double cum_loss, std::size_t budget);

/// Largest admissible comparator norm sqrt(trace(K_g A)) for the Forgetron
/// bound: sqrt((B + 1) / ln(B + 1)) / (4 cG).
double mtforg_comparator_cap(double cG, std::size_t budget);

}  // namespace mtb
