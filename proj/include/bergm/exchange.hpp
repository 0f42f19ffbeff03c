#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/prior.hpp"
#include "bergm/pseudo.hpp"
#include "bergm/rng.hpp"
#include "bergm/sampler.hpp"
#include "bergm/stats.hpp"

namespace bergm {

struct ExchangeSettings {
  int burn_in = 100;
  int main_iters = 1000;
  std::uint64_t aux_iters = 1000;
  int nchains = 0;  // 0 selects twice the number of free coordinates
  double gamma = 0.5;
  std::optional<Matrix> v_proposal;  // unset selects 0.0025 * I
  std::uint64_t seed = 1;
  /// Starting states, one row per chain. Unset: MPLE plus U(-0.1, 0.1)
  /// jitter per coordinate, or the prior mean when the MPLE does not exist.
  std::optional<Matrix> start;
  // missing-data variant only
  int n_imp = 0;
  std::uint64_t missing_update = 0;  // 0 selects the number of masked dyads
};

/// Pooled draws over the free coordinates. Row r belongs to chain
/// r / main_iters at post-burn-in iteration r % main_iters.
struct PosteriorSample {
  std::vector<std::string> names;
  Matrix draws;
  int nchains = 0;
  int main_iters = 0;
  std::uint64_t accepted = 0;
  std::uint64_t proposals = 0;
  std::vector<Graph> imputed;
  std::vector<int> imputed_iterations;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
  int chain_of(Eigen::Index row) const { return static_cast<int>(row / main_iters); }
  int iteration_of(Eigen::Index row) const { return static_cast<int>(row % main_iters); }
};

/// Square-root factor F of a proposal covariance (V = F F'); semi-definite
/// input is allowed, so V = 0 gives a deterministic move.
inline Matrix proposal_factor(const Matrix& v) {
  if (v.rows() != v.cols()) throw Error(ErrorKind::dimension, "proposal covariance must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::numeric, "cannot factor proposal covariance");
  const Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-10 * std::max(1.0, lambda.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::numeric, "proposal covariance is not positive semi-definite");
  }
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// theta_h + gamma (theta_h1 - theta_h2) + eps, eps ~ N(0, F F'), with
/// h1 != h2 drawn uniformly from the chains other than h. `state` holds one
/// chain per row.
inline Vector ads_propose(const Matrix& state, int h, double gamma, const Matrix& factor, Rng& rng) {
  const int chains = static_cast<int>(state.rows());
  if (chains < 4) throw Error(ErrorKind::usage, "parallel ADS needs at least 4 chains");
  int h1 = static_cast<int>(rng.below(chains - 1));
  if (h1 >= h) ++h1;
  int h2 = static_cast<int>(rng.below(chains - 2));
  // skip h and h1 in increasing order
  const int lo = std::min(h, h1), hi = std::max(h, h1);
  if (h2 >= lo) ++h2;
  if (h2 >= hi) ++h2;
  Vector eps(state.cols());
  for (Eigen::Index k = 0; k < eps.size(); ++k) eps[k] = rng.normal();
  return state.row(h).transpose() + gamma * (state.row(h1) - state.row(h2)).transpose() + factor * eps;
}

namespace detail {

struct ExchangeSetup {
  GaussianPrior prior;
  Matrix factor;
  int nchains;
  Matrix start;
};

inline ExchangeSetup exchange_setup(const Model& model, const Graph& g, const GaussianPrior& full_prior,
                                    const ExchangeSettings& s) {
  const int d = model.free_dim();
  if (model.dim() < 2) throw Error(ErrorKind::model, "model dimension " + std::to_string(model.dim()) + " < 2");
  if (s.burn_in < 0 || s.main_iters < 1) throw Error(ErrorKind::usage, "need burn_in >= 0 and main_iters >= 1");
  if (s.aux_iters < 1) throw Error(ErrorKind::usage, "aux_iters must be at least 1");
  if (!(s.gamma >= 0.0) || !std::isfinite(s.gamma)) throw Error(ErrorKind::usage, "gamma must be finite and >= 0");
  GaussianPrior prior = full_prior.for_model(model);
  const int nchains = s.nchains == 0 ? std::max(4, 2 * d) : s.nchains;
  if (nchains < 4) throw Error(ErrorKind::usage, "nchains must be greater than 3");
  const Matrix v = s.v_proposal ? *s.v_proposal : Matrix(Matrix::Identity(d, d) * 0.0025);
  if (v.rows() != d) {
    throw Error(ErrorKind::dimension, "proposal covariance is " + std::to_string(v.rows()) + "x" +
                                          std::to_string(v.cols()) + ", expected " + std::to_string(d));
  }
  Matrix start(nchains, d);
  if (s.start) {
    if (s.start->rows() != nchains || s.start->cols() != d) {
      throw Error(ErrorKind::dimension, "start matrix must be nchains x free dimension");
    }
    start = *s.start;
  } else {
    Vector centre = prior.mean();
    try {
      centre = mple(model, g).theta_mple;
    } catch (const Error&) {
      // no finite MPLE: fall back to the prior mean
    }
    Rng rng(s.seed, 0xADADADADULL);
    for (int h = 0; h < nchains; ++h)
      for (int k = 0; k < d; ++k) start(h, k) = centre[k] + (rng.uniform() * 0.2 - 0.1);
  }
  return {std::move(prior), proposal_factor(v), nchains, std::move(start)};
}

}  // namespace detail

/// Approximate exchange algorithm with parallel ADS proposals.
///
/// Every iteration updates chains 0..H-1 in order. Chain h proposes theta'
/// by ads_propose from the current population, draws y' ~ f(. | theta') by
/// aux_iters toggles started at y, and accepts with
/// log a = min(0, (theta_h - theta')'(s(y') - s(y)) + log p(theta') - log p(theta_h)).
/// The acceptance rate counts post-burn-in proposals only.
inline PosteriorSample exchange_fit(const Model& model, const Graph& g, const GaussianPrior& prior,
                                    const ExchangeSettings& settings) {
  if (g.has_missing()) throw Error(ErrorKind::data, "network has masked dyads; use the missing-data variant");
  auto setup = detail::exchange_setup(model, g, prior, settings);
  const int d = model.free_dim();
  const int chains = setup.nchains;
  Matrix state = setup.start;
  Vector log_prior(chains);
  for (int h = 0; h < chains; ++h) log_prior[h] = setup.prior.log_density(state.row(h).transpose());

  PosteriorSample out;
  out.names = model.free_names();
  out.nchains = chains;
  out.main_iters = settings.main_iters;
  out.draws.resize(static_cast<Eigen::Index>(chains) * settings.main_iters, d);

  std::vector<Rng> rngs;
  rngs.reserve(chains);
  for (int h = 0; h < chains; ++h) rngs.emplace_back(settings.seed, static_cast<std::uint64_t>(h) + 1);
  ToggleSampler sampler(model);
  Vector change(model.dim());
  const auto& free = model.free_index();

  const int total = settings.burn_in + settings.main_iters;
  for (int it = 0; it < total; ++it) {
    const bool keep = it >= settings.burn_in;
    for (int h = 0; h < chains; ++h) {
      Rng& rng = rngs[h];
      const Vector proposal = ads_propose(state, h, settings.gamma, setup.factor, rng);
      const double lp_new = setup.prior.log_density(proposal);
      Graph aux = g;
      change.setZero();
      sampler.run(model.full_theta(proposal), aux, settings.aux_iters, rng, &change);
      double log_alpha = lp_new - log_prior[h];
      for (int k = 0; k < d; ++k) log_alpha += (state(h, k) - proposal[k]) * change[free[k]];
      const bool accept = log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha;
      if (accept) {
        state.row(h) = proposal.transpose();
        log_prior[h] = lp_new;
      }
      if (keep) {
        ++out.proposals;
        out.accepted += accept ? 1 : 0;
        out.draws.row(static_cast<Eigen::Index>(h) * settings.main_iters + (it - settings.burn_in)) = state.row(h);
      }
    }
  }
  return out;
}

/// Post-burn-in iterations at which imputed networks are kept: n_imp
/// iterations spread as evenly as possible over [0, main_iters).
inline std::vector<int> imputation_schedule(int n_imp, int main_iters) {
  std::vector<int> at;
  if (n_imp <= 0) return at;
  if (n_imp == 1) return {main_iters - 1};
  for (int k = 0; k < n_imp; ++k) {
    const double pos = static_cast<double>(k) * (main_iters - 1) / (n_imp - 1);
    at.push_back(static_cast<int>(std::lround(pos)));
  }
  return at;
}

/// Exchange algorithm with data augmentation for masked dyads.
///
/// y* starts from the observed ties with masked dyads imputed i.i.d.
/// Bernoulli(observed density). All chains share y*: acceptance uses
/// s(y') - s(y*), auxiliary draws start at y*, and every accepted swap
/// redraws the masked dyads of y* from f(v | u, theta') with missing_update
/// toggles.
inline PosteriorSample exchange_fit_missing(const Model& model, const Graph& g, const GaussianPrior& prior,
                                            const ExchangeSettings& settings) {
  if (!g.has_missing()) throw Error(ErrorKind::data, "network has no masked dyads; use the complete-data fit");
  if (settings.n_imp < 0) throw Error(ErrorKind::usage, "n_imp must be >= 0");
  auto setup = detail::exchange_setup(model, g, prior, settings);
  const int d = model.free_dim();
  const int chains = setup.nchains;
  const std::uint64_t updates = settings.missing_update == 0 ? g.missing_count() : settings.missing_update;

  Rng impute_rng(settings.seed, 0x1A1A1A1AULL);
  Graph y_star = g;
  const double p0 = g.density();
  for (const Dyad& dy : g.missing_dyads()) y_star.set_edge(dy.i, dy.j, impute_rng.bernoulli(p0));

  Matrix state = setup.start;
  Vector log_prior(chains);
  for (int h = 0; h < chains; ++h) log_prior[h] = setup.prior.log_density(state.row(h).transpose());

  PosteriorSample out;
  out.names = model.free_names();
  out.nchains = chains;
  out.main_iters = settings.main_iters;
  out.draws.resize(static_cast<Eigen::Index>(chains) * settings.main_iters, d);
  out.imputed_iterations = imputation_schedule(settings.n_imp, settings.main_iters);
  std::size_t next_imp = 0;

  std::vector<Rng> rngs;
  rngs.reserve(chains);
  for (int h = 0; h < chains; ++h) rngs.emplace_back(settings.seed, static_cast<std::uint64_t>(h) + 1);
  ToggleSampler sampler(model);
  Vector change(model.dim());
  const auto& free = model.free_index();
  const auto& masked = g.missing_dyads();

  const int total = settings.burn_in + settings.main_iters;
  for (int it = 0; it < total; ++it) {
    const bool keep = it >= settings.burn_in;
    for (int h = 0; h < chains; ++h) {
      Rng& rng = rngs[h];
      const Vector proposal = ads_propose(state, h, settings.gamma, setup.factor, rng);
      const Vector full = model.full_theta(proposal);
      const double lp_new = setup.prior.log_density(proposal);
      Graph aux = y_star;
      change.setZero();
      sampler.run(full, aux, settings.aux_iters, rng, &change);
      double log_alpha = lp_new - log_prior[h];
      for (int k = 0; k < d; ++k) log_alpha += (state(h, k) - proposal[k]) * change[free[k]];
      const bool accept = log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha;
      if (accept) {
        state.row(h) = proposal.transpose();
        log_prior[h] = lp_new;
        sampler.run_on(full, y_star, masked, updates, rng);
      }
      if (keep) {
        ++out.proposals;
        out.accepted += accept ? 1 : 0;
        out.draws.row(static_cast<Eigen::Index>(h) * settings.main_iters + (it - settings.burn_in)) = state.row(h);
      }
    }
    if (keep) {
      while (next_imp < out.imputed_iterations.size() && out.imputed_iterations[next_imp] == it - settings.burn_in) {
        out.imputed.push_back(y_star);
        ++next_imp;
      }
    }
  }
  return out;
}

}  // namespace bergm
