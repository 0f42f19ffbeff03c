#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/parallel.hpp"
#include "bergm/pseudo.hpp"
#include "bergm/rng.hpp"
#include "bergm/sampler.hpp"
#include "bergm/stats.hpp"

namespace bergm {

enum class MleMethod { cd, mle };

inline std::string to_string(MleMethod m) { return m == MleMethod::cd ? "CD" : "MLE"; }

struct AplSettings {
  std::uint64_t aux_iters = 2500;  // burn-in before the first draw of a run
  int n_aux_draws = 50;            // draws per path rung
  std::uint64_t aux_thin = 50;     // toggles between consecutive draws
  int ladder = 200;                // path points, both ends included
  MleMethod estimate = MleMethod::cd;
  int mle_draws = 200;          // simulated statistic vectors per Newton step
  int max_iter = 25;
  double tol = 0.1;             // max standardized |s(y) - mean| for convergence
  std::uint64_t cd_steps = 0;   // toggles per CD run; 0 selects the dyad count
  int curvature_draws = 1000;   // draws for the likelihood Hessian
  /// Dyad-independent models have a tractable likelihood equal to the
  /// pseudo-likelihood; use the exact quantities instead of simulation.
  bool exact_independent = true;
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Statistics of `draws` networks from one chain started at g: the first
/// after `burn` toggles, then one every `thin` toggles. Rows are draws, all
/// model coordinates.
inline Matrix simulate_stats(const Model& model, const Vector& theta_full, const Graph& g, std::uint64_t burn,
                             int draws, std::uint64_t thin, Rng& rng) {
  Matrix out(draws, model.dim());
  Graph y = g;
  Vector s = suff_stats(model, y);
  ToggleSampler sampler(model);
  sampler.run(theta_full, y, burn, rng, &s);
  for (int k = 0; k < draws; ++k) {
    if (k > 0) sampler.run(theta_full, y, thin, rng, &s);
    out.row(k) = s.transpose();
  }
  return out;
}

/// Statistics after `steps` toggles from g, for `draws` independent runs.
inline Matrix contrastive_stats(const Model& model, const Vector& theta_full, const Graph& g, int draws,
                                std::uint64_t steps, Rng& rng) {
  Matrix out(draws, model.dim());
  const Vector s0 = suff_stats(model, g);
  ToggleSampler sampler(model);
  for (int k = 0; k < draws; ++k) {
    Graph y = g;
    Vector s = s0;
    sampler.run(theta_full, y, steps, rng, &s);
    out.row(k) = s.transpose();
  }
  return out;
}

inline Matrix sample_covariance(const Matrix& x) {
  const Vector mean = x.colwise().mean();
  const Matrix c = x.rowwise() - mean.transpose();
  return (c.transpose() * c) / std::max<double>(1.0, static_cast<double>(x.rows() - 1));
}

inline Matrix free_columns(const Model& model, const Matrix& stats) {
  Matrix out(stats.rows(), model.free_dim());
  for (int k = 0; k < model.free_dim(); ++k) out.col(k) = stats.col(model.free_index()[k]);
  return out;
}

struct MleFit {
  Vector theta;  // free coordinates
  int iterations = 0;
  bool converged = false;
  double discrepancy = 0.0;  // max standardized |s(y) - mean| at the last step
};

/// Monte Carlo Newton iterations theta <- theta + Cov(s)^-1 (s(y) - mean(s))
/// from `start` over the free coordinates. CD draws come from short runs
/// started at y; MLE draws from one long run per step. Stops after the step
/// whose standardized discrepancy is below settings.tol, or after max_iter
/// steps with converged = false.
inline MleFit estimate_mle(const Model& model, const Graph& g, const Vector& start, const AplSettings& settings) {
  if (start.size() != model.free_dim()) throw Error(ErrorKind::dimension, "start has the wrong length");
  if (settings.mle_draws < 2) throw Error(ErrorKind::usage, "mle_draws must be at least 2");
  const std::uint64_t steps = settings.cd_steps == 0 ? g.dyad_count() : settings.cd_steps;
  const Vector s_obs = model.free_part(suff_stats(model, g));
  Rng rng(settings.seed, 0x3113ULL);
  MleFit fit;
  fit.theta = start;
  for (int it = 0; it < settings.max_iter; ++it) {
    const Vector full = model.full_theta(fit.theta);
    const Matrix sims = free_columns(
        model, settings.estimate == MleMethod::cd
                   ? contrastive_stats(model, full, g, settings.mle_draws, steps, rng)
                   : simulate_stats(model, full, g, settings.aux_iters, settings.mle_draws, settings.aux_thin, rng));
    const Vector mean = sims.colwise().mean();
    const Matrix cov = sample_covariance(sims);
    const Vector sd = cov.diagonal().cwiseSqrt();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (sd.minCoeff() <= 0.0 || eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
      throw Error(ErrorKind::numeric, "singular simulated statistic covariance at Newton step " +
                                          std::to_string(it + 1) + "; increase mle_draws or cd_steps");
    }
    const Vector gap = s_obs - mean;
    fit.discrepancy = (gap.array() / sd.array()).abs().maxCoeff();
    fit.theta += cov.ldlt().solve(gap);
    fit.iterations = it + 1;
    if (fit.discrepancy < settings.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

/// Q = M_P^-1 M_L where -H_L = M_L' M_L and -H_PL = M_P' M_P are upper
/// Cholesky factorisations; then Q' H_PL Q = H_L.
inline Matrix curvature_matrix(const Matrix& h_l, const Matrix& h_pl) {
  if (h_l.rows() != h_pl.rows() || h_l.cols() != h_pl.cols()) {
    throw Error(ErrorKind::dimension, "Hessians have different shapes");
  }
  Eigen::LLT<Matrix> ll(-h_l), lp(-h_pl);
  if (ll.info() != Eigen::Success) throw Error(ErrorKind::numeric, "likelihood Hessian is not negative definite");
  if (lp.info() != Eigen::Success) throw Error(ErrorKind::numeric, "pseudo-likelihood Hessian is not negative definite");
  const Matrix m_l = ll.matrixU();
  const Matrix m_p = lp.matrixU();
  return m_p.triangularView<Eigen::Upper>().solve(m_l);
}

/// log z of a dyad-independent parameter: sum over all dyads of
/// log(1 + exp(theta' delta)). Only coordinates of dyad-independent terms may
/// be nonzero.
inline double independent_log_z(const Model& model, const Graph& g, const Vector& theta_full) {
  const auto indep = model.independent_coordinates();
  for (int c = 0; c < model.dim(); ++c) {
    if (!indep[c] && theta_full[c] != 0.0) {
      throw Error(ErrorKind::model, "independent_log_z needs zero coefficients on dyad-dependent coordinates");
    }
  }
  Graph empty(g.size(), g.directed());
  for (const auto& [name, values] : g.attributes()) empty.set_attribute(name, values);
  std::vector<double> delta(model.dim());
  double v = 0.0;
  for (const Dyad& d : empty.all_dyads()) {
    change_stats(model, empty, d, delta);
    double eta = 0.0;
    for (int c = 0; c < model.dim(); ++c) eta += indep[c] ? theta_full[c] * delta[c] : 0.0;
    v += softplus(eta);
  }
  return v;
}

struct PathEstimate {
  double log_z = 0.0;
  double log_z_ref = 0.0;
  std::vector<double> rung_means;  // E_t[(theta - theta_ref)'s(y)]
  std::vector<std::string> warnings;
};

/// Path sampling for log z(theta) from theta_ref (dyad-independent, analytic
/// z) along theta(t) = theta_ref + t (theta - theta_ref), t uniform on
/// `ladder` points; trapezoid rule over rung means. Each rung is an
/// independent chain from g.
inline PathEstimate path_log_z(const Model& model, const Graph& g, const Vector& theta_full, const Vector& ref_full,
                               const AplSettings& settings) {
  if (settings.ladder < 2) throw Error(ErrorKind::usage, "ladder must be at least 2");
  if (settings.n_aux_draws < 1) throw Error(ErrorKind::usage, "n_aux_draws must be at least 1");
  PathEstimate out;
  out.log_z_ref = independent_log_z(model, g, ref_full);
  const Vector dir = theta_full - ref_full;
  const int rungs = settings.ladder;
  out.rung_means.assign(rungs, 0.0);
  std::vector<char> degenerate(rungs, 0);
  parallel_for(static_cast<std::size_t>(rungs), settings.threads, [&](std::size_t k) {
    const double t = static_cast<double>(k) / (rungs - 1);
    Rng rng(settings.seed, 0x9a7e0000ULL + k);
    const Matrix s = simulate_stats(model, ref_full + t * dir, g, settings.aux_iters, settings.n_aux_draws,
                                    settings.aux_thin, rng);
    const Vector proj = s * dir;
    out.rung_means[k] = proj.mean();
    degenerate[k] = settings.n_aux_draws > 1 && (proj.array() == proj[0]).all();
  });
  for (int k = 0; k < rungs; ++k) {
    if (degenerate[k]) {
      out.warnings.push_back("path rung " + std::to_string(k) + " drew identical statistics; its mean is unreliable");
    }
  }
  double integral = 0.0;
  for (int k = 0; k + 1 < rungs; ++k) integral += 0.5 * (out.rung_means[k] + out.rung_means[k + 1]) / (rungs - 1);
  out.log_z = out.log_z_ref + integral;
  return out;
}

/// Fully adjusted pseudo-likelihood
/// log f~(y | theta) = log C + log PL(theta_MPLE + Q (theta - theta_MLE)),
/// over the free coordinates.
struct AdjustedPseudoLikelihood {
  std::vector<std::string> names;
  Vector theta_mple;
  Vector theta_mle;
  Matrix Q;
  double log_C = 0.0;
  Matrix h_pl;  // log-PL Hessian at theta_mple
  Matrix h_l;   // log-likelihood Hessian estimate at theta_mle
  Vector s_obs;
  double log_z_mle = 0.0;  // estimated log z at theta_mle
  double log_z_ref = 0.0;
  int mle_iterations = 0;
  bool mle_converged = true;
  bool exact = false;  // dyad-independent shortcut used
  std::vector<std::string> warnings;
  std::shared_ptr<const PseudoLikelihood> pl;

  int dim() const noexcept { return static_cast<int>(theta_mle.size()); }

  double log_apl(const Vector& theta) const {
    if (theta.size() != dim()) throw Error(ErrorKind::dimension, "theta has the wrong length");
    return log_C + pl->value(theta_mple + Q * (theta - theta_mle));
  }
};

/// Builds the adjustment: MPLE, MLE (CD or Monte Carlo), Q from the simulated
/// likelihood Hessian, and C from a path-sampling estimate of log z at the
/// MLE.
inline AdjustedPseudoLikelihood ergm_apl(const Model& model, const Graph& g, const AplSettings& settings = {}) {
  if (g.has_missing()) throw Error(ErrorKind::data, "adjusted pseudo-likelihood needs a fully observed network");
  if (settings.curvature_draws < 2) throw Error(ErrorKind::usage, "curvature_draws must be at least 2");
  AdjustedPseudoLikelihood apl;
  apl.names = model.free_names();
  auto pl = std::make_shared<PseudoLikelihood>(model, g);
  const PseudoFit fit = mple(*pl);
  apl.pl = pl;
  apl.theta_mple = fit.theta_mple;
  apl.h_pl = fit.hessian;
  const Vector s_full = suff_stats(model, g);
  apl.s_obs = model.free_part(s_full);

  if (model.dyad_independent() && settings.exact_independent) {
    apl.exact = true;
    apl.theta_mle = apl.theta_mple;
    apl.h_l = apl.h_pl;
    const Vector full = model.full_theta(apl.theta_mle);
    apl.log_z_ref = apl.log_z_mle = independent_log_z(model, g, full);
  } else {
    const MleFit mle_fit = estimate_mle(model, g, apl.theta_mple, settings);
    apl.theta_mle = mle_fit.theta;
    apl.mle_iterations = mle_fit.iterations;
    apl.mle_converged = mle_fit.converged;
    if (!mle_fit.converged) {
      apl.warnings.push_back(to_string(settings.estimate) + " estimate did not converge in " +
                             std::to_string(settings.max_iter) + " steps (discrepancy " +
                             format_number(mle_fit.discrepancy) + ")");
    }
    const Vector full = model.full_theta(apl.theta_mle);
    Rng rng(settings.seed, 0xC0C0ULL);
    const Matrix sims = free_columns(model, simulate_stats(model, full, g, settings.aux_iters,
                                                           settings.curvature_draws, settings.aux_thin, rng));
    apl.h_l = -sample_covariance(sims);
    Vector ref = model.full_theta(apl.theta_mple);
    const auto indep = model.independent_coordinates();
    for (int c = 0; c < model.dim(); ++c)
      if (!indep[c]) ref[c] = 0.0;
    const PathEstimate path = path_log_z(model, g, full, ref, settings);
    apl.log_z_ref = path.log_z_ref;
    apl.log_z_mle = path.log_z;
    apl.warnings.insert(apl.warnings.end(), path.warnings.begin(), path.warnings.end());
  }
  apl.Q = curvature_matrix(apl.h_l, apl.h_pl);
  const double log_lik = model.full_theta(apl.theta_mle).dot(s_full) - apl.log_z_mle;
  apl.log_C = log_lik - fit.log_pl_at_mode;
  return apl;
}

}  // namespace bergm
