#ifndef MIXSHRINK_MIXTURE_HPP
#define MIXSHRINK_MIXTURE_HPP

#include <utility>

#include "mixshrink/types.hpp"

namespace mixshrink {

// log N(y | x.beta, sigma2).
double component_logpdf(const Vector& x_row, double y, const Vector& beta,
                        double sigma2);

// Observed-data log-likelihood, evaluated in log space.
double log_likelihood(const Dataset& data, const MixtureParams& params);

// Log-likelihood minus the configured penalty term. With kind = None this is
// exactly log_likelihood.
double penalized_log_likelihood(const Dataset& data,
                                const MixtureParams& params,
                                const PenaltySpec& penalty);

// Posterior membership weights; rows renormalized to sum to one exactly.
Responsibilities responsibilities(const Dataset& data,
                                  const MixtureParams& params);

// Complete-data expectation split into the mixing-proportion part and the
// component-density part. Used by the M-step ascent regression tests.
std::pair<double, double> q_decomposition(const Dataset& data,
                                          const Responsibilities& tau,
                                          const MixtureParams& params);

}  // namespace mixshrink

#endif  // MIXSHRINK_MIXTURE_HPP
