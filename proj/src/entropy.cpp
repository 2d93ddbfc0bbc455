#include "sclab/entropy.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "sclab/rng.hpp"

namespace sclab::entropy {

namespace {

// Entropy of softmax(beta * g) for one logit draw, log-sum-exp stabilized:
// H = lnZt - beta * sum q * (g - max).
double softmax_entropy(const Eigen::ArrayXd& g, double beta) {
  const Eigen::ArrayXd shifted = beta * (g - g.maxCoeff());
  const Eigen::ArrayXd w = shifted.exp();
  const double z = w.sum();
  return std::log(z) - (w * shifted).sum() / z;
}

}  // namespace

EntropyEstimate mean_entropy(int n, double beta, int samples, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("mean_entropy: n must be >= 2");
  if (beta < 0.0) throw std::invalid_argument("mean_entropy: beta must be >= 0");
  if (samples < 1) throw std::invalid_argument("mean_entropy: samples must be >= 1");
  rng::Stream stream(rng::derive_seed(seed, "entropy_logits"));
  Eigen::ArrayXd g(n);
  double sum = 0.0, sum2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(n);
    stream.fill_normal(v);
    g = v.array();
    const double h = softmax_entropy(g, beta);
    sum += h;
    sum2 += h * h;
  }
  const double mean = sum / samples;
  double se = 0.0;
  if (samples > 1) {
    const double var = (sum2 - samples * mean * mean) / (samples - 1);
    se = std::sqrt(std::max(0.0, var) / samples);
  }
  return {mean, se};
}

BetaSolution solve_beta_for_entropy(int n, double target_h, double tol, int samples,
                                    std::uint64_t seed) {
  const double ln_n = std::log(static_cast<double>(n));
  if (!(target_h > 0.0) || target_h > ln_n) {
    throw std::invalid_argument("solve_beta_for_entropy: target must lie in (0, ln n]");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("solve_beta_for_entropy: tol must be > 0");
  if (target_h == ln_n) {
    return {0.0, 0.0, 0.0};
  }
  auto h_at = [&](double beta) { return mean_entropy(n, beta, samples, seed).h; };

  double lo = 0.0;       // H(0) = ln n > target
  double hi = 1.0;
  while (h_at(hi) > target_h) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) {
      throw std::runtime_error("solve_beta_for_entropy: failed to bracket target");
    }
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (h_at(mid) > target_h) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {0.5 * (lo + hi), lo, hi};
}

}  // namespace sclab::entropy
