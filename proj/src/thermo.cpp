#include "sclab/thermo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sclab/parallel.hpp"
#include "sclab/rng.hpp"

namespace sclab::thermo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-sample quantities are computed from shifted energies d_i = eps_i - min
// so that every term is a sum of nonnegative numbers:
//   lnZ = lnZt - beta*min,  U = min + A,  S = lnZt + beta*A
// with Zt = sum exp(-beta*d) and A = sum q*d. The pairing against beta_star
// reuses the same d, which makes L and dL/dbeta exactly zero at
// beta == beta_star.
struct SetMeans {
  // Indexed by beta-grid position.
  std::vector<double> lnZ, U, S, L, dL;
};

struct McResult {
  Eigen::VectorXd lnZ, U, S, L, dL;
  Eigen::VectorXd se_lnZ, se_U, se_S, se_L, se_dL;
};

McResult mc_evaluate(const Eigen::VectorXd& betas, int pair_idx, int n,
                     const ThermoConfig& cfg) {
  if (n < 1) throw std::invalid_argument("thermo: n must be >= 1");
  if (cfg.num_energy_sets < 1 || cfg.batch_per_set < 1) {
    throw std::invalid_argument("thermo: sample counts must be >= 1");
  }
  for (Eigen::Index i = 0; i < betas.size(); ++i) {
    if (betas[i] < 0.0) throw std::invalid_argument("thermo: beta must be >= 0");
  }
  const std::size_t num_sets = static_cast<std::size_t>(cfg.num_energy_sets);
  const Eigen::Index nb = betas.size();
  std::vector<SetMeans> sets(num_sets);

  parallel_for_index(num_sets, 0, [&](std::size_t s) {
    rng::Stream stream(rng::derive_seed(cfg.seed, "energy_set", s));
    SetMeans acc;
    acc.lnZ.assign(static_cast<std::size_t>(nb), 0.0);
    acc.U = acc.lnZ;
    acc.S = acc.lnZ;
    acc.L = acc.lnZ;
    acc.dL = acc.lnZ;
    Eigen::VectorXd eps(n);
    Eigen::ArrayXd d(n), w(n);
    std::vector<double> lnZt(static_cast<std::size_t>(nb));
    std::vector<double> excess(static_cast<std::size_t>(nb));
    for (int b = 0; b < cfg.batch_per_set; ++b) {
      stream.fill_normal(eps);
      const double mn = eps.minCoeff();
      d = eps.array() - mn;
      for (Eigen::Index k = 0; k < nb; ++k) {
        w = (-betas[k] * d).exp();
        const double zt = w.sum();
        lnZt[static_cast<std::size_t>(k)] = std::log(zt);
        excess[static_cast<std::size_t>(k)] = (w * d).sum() / zt;
      }
      for (Eigen::Index k = 0; k < nb; ++k) {
        const std::size_t kk = static_cast<std::size_t>(k);
        acc.lnZ[kk] += lnZt[kk] - betas[k] * mn;
        acc.U[kk] += mn + excess[kk];
        acc.S[kk] += lnZt[kk] + betas[k] * excess[kk];
        if (pair_idx >= 0) {
          const std::size_t pp = static_cast<std::size_t>(pair_idx);
          const double bstar = betas[pair_idx];
          acc.L[kk] += (betas[k] - bstar) * excess[pp] + lnZt[kk] - lnZt[pp];
          acc.dL[kk] += excess[pp] - excess[kk];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(cfg.batch_per_set);
    for (std::size_t k = 0; k < static_cast<std::size_t>(nb); ++k) {
      acc.lnZ[k] *= inv;
      acc.U[k] *= inv;
      acc.S[k] *= inv;
      acc.L[k] *= inv;
      acc.dL[k] *= inv;
    }
    sets[s] = std::move(acc);
  });

  auto reduce = [&](auto member, Eigen::VectorXd& mean, Eigen::VectorXd& se) {
    mean.setZero(nb);
    se.setZero(nb);
    for (std::size_t s = 0; s < num_sets; ++s) {
      for (Eigen::Index k = 0; k < nb; ++k) {
        mean[k] += (sets[s].*member)[static_cast<std::size_t>(k)];
      }
    }
    mean /= static_cast<double>(num_sets);
    if (num_sets > 1) {
      for (std::size_t s = 0; s < num_sets; ++s) {
        for (Eigen::Index k = 0; k < nb; ++k) {
          const double dlt = (sets[s].*member)[static_cast<std::size_t>(k)] - mean[k];
          se[k] += dlt * dlt;
        }
      }
      se = (se / static_cast<double>((num_sets - 1) * num_sets)).cwiseSqrt();
    }
  };

  McResult r;
  reduce(&SetMeans::lnZ, r.lnZ, r.se_lnZ);
  reduce(&SetMeans::U, r.U, r.se_U);
  reduce(&SetMeans::S, r.S, r.se_S);
  reduce(&SetMeans::L, r.L, r.se_L);
  reduce(&SetMeans::dL, r.dL, r.se_dL);
  return r;
}

}  // namespace

ThermoPoint estimate_thermo(double beta, int n, const ThermoConfig& cfg) {
  Eigen::VectorXd betas(1);
  betas[0] = beta;
  McResult r = mc_evaluate(betas, -1, n, cfg);
  ThermoPoint p;
  p.lnZ = r.lnZ[0];
  p.se_lnZ = r.se_lnZ[0];
  p.U = r.U[0];
  p.se_U = r.se_U[0];
  p.S = r.S[0];
  p.se_S = r.se_S[0];
  if (beta > 0.0) {
    p.F = -r.lnZ[0] / beta;
    p.se_F = r.se_lnZ[0] / beta;
  } else {
    p.F = kNaN;
    p.se_F = kNaN;
  }
  return p;
}

AnsatzPoint ansatz_loss_and_grad(double beta, double beta_star, int n,
                                 const ThermoConfig& cfg) {
  Eigen::VectorXd betas(2);
  betas[0] = beta;
  betas[1] = beta_star;
  McResult r = mc_evaluate(betas, 1, n, cfg);
  return {r.L[0], r.dL[0], r.se_L[0], r.se_dL[0]};
}

C0Estimate estimate_c0(int n, const ThermoConfig& cfg) {
  if (n < 2) throw std::invalid_argument("estimate_c0: n must be >= 2");
  const std::size_t num_sets = static_cast<std::size_t>(cfg.num_energy_sets);
  std::vector<double> set_means(num_sets, 0.0);
  parallel_for_index(num_sets, 0, [&](std::size_t s) {
    rng::Stream stream(rng::derive_seed(cfg.seed, "energy_set", s));
    Eigen::VectorXd eps(n);
    double acc = 0.0;
    for (int b = 0; b < cfg.batch_per_set; ++b) {
      stream.fill_normal(eps);
      acc += eps.minCoeff();
    }
    set_means[s] = acc / static_cast<double>(cfg.batch_per_set);
  });
  double mean = 0.0;
  for (double v : set_means) mean += v;
  mean /= static_cast<double>(num_sets);
  double se = 0.0;
  if (num_sets > 1) {
    for (double v : set_means) se += (v - mean) * (v - mean);
    se = std::sqrt(se / static_cast<double>((num_sets - 1) * num_sets));
  }
  return {-mean, se, std::sqrt(2.0 * std::log(static_cast<double>(n)))};
}

ThermoCurve compute_curve(double beta_star, int n, const ThermoConfig& cfg,
                          int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("compute_curve: need >= 2 grid points");
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(grid_points, 0.0, beta_star);
  return compute_curve_on_grid(grid, beta_star, n, cfg);
}

ThermoCurve compute_curve_on_grid(const Eigen::Ref<const Eigen::VectorXd>& beta_grid,
                                  double beta_star, int n, const ThermoConfig& cfg) {
  // The pairing point beta_star is appended when it is not already the last
  // grid entry; CRN pairing holds either way.
  const Eigen::Index g = beta_grid.size();
  const bool append = (g == 0 || beta_grid[g - 1] != beta_star);
  Eigen::VectorXd betas(g + (append ? 1 : 0));
  betas.head(g) = beta_grid;
  if (append) betas[g] = beta_star;
  const int pair_idx = static_cast<int>(betas.size() - 1);

  McResult r = mc_evaluate(betas, pair_idx, n, cfg);

  ThermoCurve curve;
  curve.beta_star = beta_star;
  curve.n = n;
  curve.beta_grid = beta_grid;
  curve.lnZ = r.lnZ.head(g);
  curve.U = r.U.head(g);
  curve.S = r.S.head(g);
  curve.L = r.L.head(g);
  curve.dLdBeta = r.dL.head(g);
  curve.se_lnZ = r.se_lnZ.head(g);
  curve.se_U = r.se_U.head(g);
  curve.se_S = r.se_S.head(g);
  curve.se_L = r.se_L.head(g);
  curve.se_dLdBeta = r.se_dL.head(g);
  curve.F.setConstant(g, kNaN);
  curve.se_F.setConstant(g, kNaN);
  for (Eigen::Index i = 0; i < g; ++i) {
    if (beta_grid[i] > 0.0) {
      curve.F[i] = -curve.lnZ[i] / beta_grid[i];
      curve.se_F[i] = curve.se_lnZ[i] / beta_grid[i];
    }
  }
  return curve;
}

ExpansionCoeffs fit_expansion_coeffs(const ThermoCurve& curve, double window_lo,
                                     double window_hi) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < curve.beta_grid.size(); ++i) {
    const double b = curve.beta_grid[i];
    if (b >= window_lo && b <= window_hi) idx.push_back(i);
  }
  if (idx.size() < 4) {
    throw std::invalid_argument("fit_expansion_coeffs: window holds fewer than 4 points");
  }
  const double c0_proxy = -curve.U.minCoeff();
  if (window_lo <= 2.0 * c0_proxy) {
    throw std::invalid_argument(
        "fit_expansion_coeffs: window must start above twice c0 (got lo=" +
        std::to_string(window_lo) + ", 2*c0~" + std::to_string(2.0 * c0_proxy) + ")");
  }

  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd a(m, 2);
  Eigen::VectorXd u(m);
  Eigen::MatrixXd af(m, 3);
  Eigen::VectorXd fv(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double b = curve.beta_grid[idx[static_cast<std::size_t>(r)]];
    const double x = 1.0 / b;
    a(r, 0) = 1.0;
    a(r, 1) = x * x;
    u[r] = curve.U[idx[static_cast<std::size_t>(r)]];
    af(r, 0) = 1.0;
    af(r, 1) = x;
    af(r, 2) = x * x;
    fv[r] = curve.F[idx[static_cast<std::size_t>(r)]];
  }
  Eigen::Vector2d pu = a.colPivHouseholderQr().solve(u);
  Eigen::Vector3d pf = af.colPivHouseholderQr().solve(fv);

  ExpansionCoeffs out;
  out.c0 = -pu[0];
  out.c2 = pu[1];
  out.c1 = -pf[1];
  out.window_lo = window_lo;
  out.window_hi = window_hi;
  Eigen::VectorXd resid = u - a * pu;
  out.residual = std::sqrt(resid.squaredNorm() / static_cast<double>(m));
  if (m > 2) {
    const double sigma2 = resid.squaredNorm() / static_cast<double>(m - 2);
    Eigen::Matrix2d cov = sigma2 * (a.transpose() * a).inverse();
    out.se_c0 = std::sqrt(cov(0, 0));
    out.se_c2 = std::sqrt(cov(1, 1));
  }
  return out;
}

}  // namespace sclab::thermo
