#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/adjust.hpp"
#include "bergm/error.hpp"
#include "bergm/exchange.hpp"
#include "bergm/parallel.hpp"
#include "bergm/prior.hpp"
#include "bergm/rng.hpp"

namespace bergm {

enum class EvidenceMethod { cj, pp };

inline std::string to_string(EvidenceMethod m) { return m == EvidenceMethod::cj ? "CJ" : "PP"; }

struct EvidenceSettings {
  /// Random-walk proposal covariance is
  /// v_proposal * 2.38^2 / d * (-H_L + Sigma_prior^-1)^-1.
  double v_proposal = 1.5;
  int burn_in = 5000;
  int main_iters = 30000;
  int num_samples = 25000;  // draws used by the ordinate estimate
  int rungs = 20;           // power posterior: temperatures (i / rungs)^power
  double ladder_power = 5.0;
  int rung_burn_in = 500;
  int rung_iters = 5000;
  bool warm_start = true;  // power posterior rungs run serially, each from the previous one
  std::uint64_t seed = 1;
  int threads = 0;
};

struct EvidenceEstimate {
  EvidenceMethod method = EvidenceMethod::cj;
  double log_evidence = 0.0;
  PosteriorSample sample;  // CJ: the retained chain; PP: the t = 1 rung
  Vector theta_star;
  double log_ordinate = 0.0;
  std::vector<double> temperatures;
  std::vector<double> rung_means;
  std::vector<double> rung_variances;
  std::vector<double> rung_acceptance;
  double wall_seconds = 0.0;
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// Gaussian random-walk proposal with covariance v * 2.38^2 / d * (-t H + P)^-1.
struct RandomWalk {
  Matrix factor;     // lower Cholesky factor of the proposal covariance
  Matrix precision;  // its inverse
  double log_norm = 0.0;

  RandomWalk(const Matrix& neg_hessian, const Matrix& prior_precision, double t, double v) {
    const auto d = static_cast<double>(neg_hessian.rows());
    const Matrix target_precision = t * neg_hessian + prior_precision;
    const Matrix cov = (v * 2.38 * 2.38 / d) * target_precision.inverse();
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::numeric, "proposal covariance is not positive definite");
    factor = llt.matrixL();
    precision = llt.solve(Matrix::Identity(cov.rows(), cov.cols()));
    log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - factor.diagonal().array().log().sum();
  }

  Vector step(Rng& rng) const {
    Vector z(factor.rows());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
    return factor * z;
  }

  double log_density(const Vector& diff) const { return log_norm - 0.5 * diff.dot(precision * diff); }
};

}  // namespace detail

/// Chib-Jeliazkov estimate of log int f~(y | theta) p(theta) dtheta.
///
/// A random-walk Metropolis chain on log f~ + log p starts at theta_MLE;
/// after burn_in it keeps main_iters draws. theta* is their mean. With
/// num_samples evenly spaced draws theta_g and num_samples proposals theta_j
/// from theta*, the ordinate is
/// mean_g[a(theta_g, theta*) q(theta_g, theta*)] / mean_j[a(theta*, theta_j)].
inline EvidenceEstimate evidence_cj(const AdjustedPseudoLikelihood& apl, const GaussianPrior& prior_in,
                                    const EvidenceSettings& s) {
  const auto started = std::chrono::steady_clock::now();
  const int d = apl.dim();
  if (prior_in.dim() != d) {
    throw Error(ErrorKind::dimension, "prior has dimension " + std::to_string(prior_in.dim()) + ", model has " +
                                          std::to_string(d) + " free coordinates");
  }
  if (s.main_iters < 1 || s.burn_in < 0 || s.num_samples < 1) {
    throw Error(ErrorKind::usage, "need main_iters >= 1, burn_in >= 0, num_samples >= 1");
  }
  const GaussianPrior& prior = prior_in;
  const detail::RandomWalk walk(-apl.h_l, prior.precision(), 1.0, s.v_proposal);
  auto log_target = [&](const Vector& th) { return apl.log_apl(th) + prior.log_density(th); };

  Rng rng(s.seed, 0xC1C1ULL);
  EvidenceEstimate out;
  out.method = EvidenceMethod::cj;
  out.sample.names = apl.names;
  out.sample.nchains = 1;
  out.sample.main_iters = s.main_iters;
  out.sample.draws.resize(s.main_iters, d);
  Vector theta = apl.theta_mle;
  double lt = log_target(theta);
  for (int it = 0; it < s.burn_in + s.main_iters; ++it) {
    const Vector cand = theta + walk.step(rng);
    const double lc = log_target(cand);
    const bool accept = lc >= lt || std::log(rng.uniform()) < lc - lt;
    if (accept) {
      theta = cand;
      lt = lc;
    }
    if (it >= s.burn_in) {
      out.sample.draws.row(it - s.burn_in) = theta.transpose();
      ++out.sample.proposals;
      out.sample.accepted += accept ? 1 : 0;
    }
  }
  out.theta_star = out.sample.draws.colwise().mean().transpose();
  const double lt_star = log_target(out.theta_star);

  const int m = std::min(s.num_samples, s.main_iters);
  std::vector<double> num(m);
  for (int k = 0; k < m; ++k) {
    const auto row = static_cast<Eigen::Index>(std::floor(static_cast<double>(k) * s.main_iters / m));
    const Vector th = out.sample.draws.row(row).transpose();
    const double log_a = std::min(0.0, lt_star - log_target(th));
    num[k] = log_a + walk.log_density(out.theta_star - th);
  }
  std::vector<double> den(s.num_samples);
  for (int j = 0; j < s.num_samples; ++j) {
    const Vector cand = out.theta_star + walk.step(rng);
    den[j] = std::min(0.0, log_target(cand) - lt_star);
  }
  const double log_num = detail::log_sum_exp(num) - std::log(static_cast<double>(m));
  const double log_den = detail::log_sum_exp(den) - std::log(static_cast<double>(s.num_samples));
  if (!std::isfinite(log_den)) {
    throw Error(ErrorKind::numeric, "no proposal from theta* has positive acceptance; retune v_proposal");
  }
  out.log_ordinate = log_num - log_den;
  out.log_evidence = lt_star - out.log_ordinate;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

/// Power-posterior estimate: temperatures t_i = (i / rungs)^power, each rung
/// sampled from f~(y | theta)^t p(theta) by random-walk Metropolis, and
/// log evidence = sum_i (t_{i+1} - t_i) (E_i + E_{i+1}) / 2
///              - sum_i (t_{i+1} - t_i)^2 (V_{i+1} - V_i) / 12,
/// with E and V the rung mean and variance of log f~.
inline EvidenceEstimate evidence_pp(const AdjustedPseudoLikelihood& apl, const GaussianPrior& prior,
                                    const EvidenceSettings& s) {
  const auto started = std::chrono::steady_clock::now();
  const int d = apl.dim();
  if (prior.dim() != d) {
    throw Error(ErrorKind::dimension, "prior has dimension " + std::to_string(prior.dim()) + ", model has " +
                                          std::to_string(d) + " free coordinates");
  }
  if (s.rungs < 1 || s.rung_iters < 2 || s.rung_burn_in < 0) {
    throw Error(ErrorKind::usage, "need rungs >= 1, rung_iters >= 2, rung_burn_in >= 0");
  }
  const Matrix prior_precision = prior.precision();
  EvidenceEstimate out;
  out.method = EvidenceMethod::pp;
  const int count = s.rungs + 1;
  for (int i = 0; i < count; ++i) out.temperatures.push_back(std::pow(static_cast<double>(i) / s.rungs, s.ladder_power));
  out.rung_means.assign(count, 0.0);
  out.rung_variances.assign(count, 0.0);
  out.rung_acceptance.assign(count, 0.0);
  std::vector<Vector> last(count);
  Matrix final_draws;

  auto run_rung = [&](int i, const Vector& start) {
    const double t = out.temperatures[i];
    const detail::RandomWalk walk(-apl.h_l, prior_precision, t, s.v_proposal);
    Rng rng(s.seed, 0x9900ULL + static_cast<std::uint64_t>(i));
    Vector theta = start;
    double ll = apl.log_apl(theta);
    double lp = prior.log_density(theta);
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t accepted = 0;
    Matrix draws;
    if (i == count - 1) draws.resize(s.rung_iters, d);
    for (int it = 0; it < s.rung_burn_in + s.rung_iters; ++it) {
      const Vector cand = theta + walk.step(rng);
      const double cl = apl.log_apl(cand);
      const double cp = prior.log_density(cand);
      const double log_alpha = t * (cl - ll) + (cp - lp);
      const bool accept = log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha;
      if (accept) {
        theta = cand;
        ll = cl;
        lp = cp;
      }
      if (it >= s.rung_burn_in) {
        sum += ll;
        sum_sq += ll * ll;
        accepted += accept ? 1 : 0;
        if (i == count - 1) draws.row(it - s.rung_burn_in) = theta.transpose();
      }
    }
    if (accepted == 0) {
      throw Error(ErrorKind::numeric, "power-posterior rung " + std::to_string(i) +
                                          " accepted no proposals; retune v_proposal");
    }
    const double n = s.rung_iters;
    out.rung_means[i] = sum / n;
    out.rung_variances[i] = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
    out.rung_acceptance[i] = static_cast<double>(accepted) / n;
    last[i] = theta;
    if (i == count - 1) {
      final_draws = std::move(draws);
      out.sample.accepted = accepted;
      out.sample.proposals = static_cast<std::uint64_t>(s.rung_iters);
    }
  };

  if (s.warm_start) {
    // the t = 0 rung is the prior; start it at the prior mean
    Vector start = prior.mean();
    for (int i = 0; i < count; ++i) {
      run_rung(i, start);
      start = last[i];
    }
  } else {
    parallel_for(static_cast<std::size_t>(count), s.threads,
                 [&](std::size_t i) { run_rung(static_cast<int>(i), apl.theta_mle); });
  }

  double log_z = 0.0;
  for (int i = 0; i + 1 < count; ++i) {
    const double dt = out.temperatures[i + 1] - out.temperatures[i];
    log_z += 0.5 * dt * (out.rung_means[i] + out.rung_means[i + 1]);
    log_z -= dt * dt * (out.rung_variances[i + 1] - out.rung_variances[i]) / 12.0;
  }
  out.log_evidence = log_z;
  out.sample.names = apl.names;
  out.sample.nchains = 1;
  out.sample.main_iters = s.rung_iters;
  out.sample.draws = std::move(final_draws);
  out.theta_star = out.sample.draws.colwise().mean().transpose();
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

struct ModelComparison {
  Matrix log_bayes_factors;  // (m, m'): log Z_m - log Z_m'
  Vector posterior_probs;
};

/// Bayes factors and posterior model probabilities, in log space.
inline ModelComparison compare(const Vector& log_evidence, const Vector& prior_probs) {
  const Eigen::Index m = log_evidence.size();
  if (m < 1 || prior_probs.size() != m) throw Error(ErrorKind::dimension, "one prior probability per model required");
  if ((prior_probs.array() <= 0.0).any() || std::abs(prior_probs.sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::usage, "prior model probabilities must be positive and sum to 1");
  }
  if (!log_evidence.allFinite()) throw Error(ErrorKind::numeric, "log evidence values must be finite");
  ModelComparison out;
  out.log_bayes_factors.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out.log_bayes_factors(a, b) = log_evidence[a] - log_evidence[b];
  const Vector w = log_evidence + prior_probs.array().log().matrix();
  const double mx = w.maxCoeff();
  const Vector e = (w.array() - mx).exp();
  out.posterior_probs = e / e.sum();
  return out;
}

}  // namespace bergm
