#pragma once

#include <cstdint>

namespace sclab::entropy {

struct EntropyEstimate {
  double h = 0.0;
  double se = 0.0;
};

// Mean Shannon entropy (nats) of softmax(beta * g) over `samples` draws of
// g ~ N(0, I_n).
EntropyEstimate mean_entropy(int n, double beta, int samples, std::uint64_t seed);

struct BetaSolution {
  double beta = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// Bisection for the beta whose mean entropy equals target_h. Every
// evaluation reuses the same sample set (common random numbers), which makes
// the empirical H(beta) strictly decreasing and the bisection well-posed
// despite Monte-Carlo noise. Returns the bracket of width <= tol and its
// midpoint. target_h must lie in (0, ln n]; target_h == ln n returns
// beta = 0 with a collapsed bracket.
BetaSolution solve_beta_for_entropy(int n, double target_h, double tol, int samples,
                                    std::uint64_t seed);

}  // namespace sclab::entropy
