#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/stats.hpp"

namespace bergm {

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Logistic-regression view of the observed dyads: one row per distinct
/// change-statistic vector with the number of observed ties (ones) and
/// non-ties (zeros) sharing it. Masked dyads are left out.
struct DyadDesign {
  Matrix rows;  // all model coordinates
  Vector ones;
  Vector zeros;
};

inline DyadDesign dyad_design(const Model& model, const Graph& g) {
  std::map<std::vector<double>, std::pair<double, double>> groups;
  std::vector<double> delta(model.dim());
  for (const Dyad& d : g.all_dyads()) {
    if (!g.observed(d)) continue;
    change_stats(model, g, d, delta);
    auto& counts = groups[delta];
    (g.has_edge(d) ? counts.first : counts.second) += 1.0;
  }
  DyadDesign out;
  out.rows.resize(static_cast<Eigen::Index>(groups.size()), model.dim());
  out.ones.resize(static_cast<Eigen::Index>(groups.size()));
  out.zeros.resize(static_cast<Eigen::Index>(groups.size()));
  Eigen::Index r = 0;
  for (const auto& [row, counts] : groups) {
    for (int c = 0; c < model.dim(); ++c) out.rows(r, c) = row[c];
    out.ones[r] = counts.first;
    out.zeros[r] = counts.second;
    ++r;
  }
  return out;
}

/// Writes the grouped design as CSV: ones, zeros, then one column per
/// model coordinate.
inline void write_design_csv(const DyadDesign& design, const std::vector<std::string>& names,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out.precision(17);
  out << "ones,zeros";
  for (const auto& nm : names) out << ',' << nm;
  out << '\n';
  for (Eigen::Index r = 0; r < design.rows.rows(); ++r) {
    out << design.ones[r] << ',' << design.zeros[r];
    for (Eigen::Index c = 0; c < design.rows.cols(); ++c) out << ',' << design.rows(r, c);
    out << '\n';
  }
}

/// Log pseudo-likelihood over the free coordinates of a model; offset
/// coordinates enter the linear predictor with their fixed coefficients.
class PseudoLikelihood {
 public:
  PseudoLikelihood(const Model& model, const Graph& g) : names_(model.free_names()) {
    const DyadDesign design = dyad_design(model, g);
    if (design.rows.rows() == 0) throw Error(ErrorKind::data, "no observed dyads");
    ones_ = design.ones;
    zeros_ = design.zeros;
    x_.resize(design.rows.rows(), model.free_dim());
    for (int k = 0; k < model.free_dim(); ++k) x_.col(k) = design.rows.col(model.free_index()[k]);
    offset_eta_ = Vector::Zero(design.rows.rows());
    for (std::size_t k = 0; k < model.offset_index().size(); ++k) {
      offset_eta_ += design.rows.col(model.offset_index()[k]) * model.offset_values()[static_cast<Eigen::Index>(k)];
    }
  }

  int dim() const noexcept { return static_cast<int>(x_.cols()); }
  const Matrix& design() const noexcept { return x_; }
  const Vector& ones() const noexcept { return ones_; }
  const Vector& zeros() const noexcept { return zeros_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  double value(const Vector& theta) const {
    const Vector eta = x_ * theta + offset_eta_;
    double v = 0.0;
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      v += ones_[r] * eta[r] - (ones_[r] + zeros_[r]) * softplus(eta[r]);
    }
    return v;
  }

  Vector gradient(const Vector& theta) const {
    const Vector eta = x_ * theta + offset_eta_;
    Vector resid(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) resid[r] = ones_[r] - (ones_[r] + zeros_[r]) * logistic(eta[r]);
    return x_.transpose() * resid;
  }

  /// Hessian of the log pseudo-likelihood (negative semi-definite).
  Matrix hessian(const Vector& theta) const {
    const Vector eta = x_ * theta + offset_eta_;
    Vector w(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      const double p = logistic(eta[r]);
      w[r] = (ones_[r] + zeros_[r]) * p * (1.0 - p);
    }
    return -(x_.transpose() * w.asDiagonal() * x_);
  }

 private:
  Matrix x_;
  Vector ones_;
  Vector zeros_;
  Vector offset_eta_;
  std::vector<std::string> names_;
};

/// Log pseudo-likelihood at a full parameter vector (offsets included):
/// sum over observed dyads of y*eta - log(1 + exp(eta)), eta = theta'delta.
inline double log_pl(const Model& model, const Graph& g, const Vector& theta) {
  if (theta.size() != model.dim()) throw Error(ErrorKind::dimension, "theta length does not match the model");
  std::vector<double> delta(model.dim());
  double v = 0.0;
  for (const Dyad& d : g.all_dyads()) {
    if (!g.observed(d)) continue;
    change_stats(model, g, d, delta);
    double eta = 0.0;
    for (int c = 0; c < model.dim(); ++c) eta += theta[c] * delta[c];
    v += (g.has_edge(d) ? eta : 0.0) - softplus(eta);
  }
  return v;
}

struct PseudoFit {
  Vector theta_mple;  // free coordinates
  Matrix hessian;     // log pseudo-likelihood Hessian at theta_mple
  double log_pl_at_mode = 0.0;
  int iterations = 0;

  /// Naive standard errors from the inverse negative Hessian; they ignore
  /// dyad dependence and understate uncertainty for dependent models.
  Vector naive_se() const {
    const Matrix cov = (-hessian).inverse();
    return cov.diagonal().cwiseSqrt();
  }
};

struct MpleSettings {
  double gradient_tol = 1e-8;
  int max_iter = 100;
};

namespace detail {

inline void check_design(const PseudoLikelihood& pl) {
  const Matrix& x = pl.design();
  const Vector total = pl.ones() + pl.zeros();
  // rank of the dyad design (each distinct row weighted by its multiplicity)
  const Matrix gram = x.transpose() * total.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Matrix> qr(gram);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    std::string names;
    const auto perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < x.cols(); ++k) names += (names.empty() ? "" : ", ") + pl.names()[perm[k]];
    throw Error(ErrorKind::numeric, "rank-deficient pseudo-likelihood design; collinear terms: " + names);
  }
  // one coordinate alone separating ties from non-ties
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const bool nonneg = (x.col(c).array() >= 0).all();
    const bool nonpos = (x.col(c).array() <= 0).all();
    if (!nonneg && !nonpos) continue;
    double ones = 0, zeros = 0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (x(r, c) != 0.0) {
        ones += pl.ones()[r];
        zeros += pl.zeros()[r];
      }
    }
    if (ones + zeros > 0 && (ones == 0 || zeros == 0)) {
      throw Error(ErrorKind::numeric, "complete separation: coordinate '" + pl.names()[c] +
                                          "' has an unbounded pseudo-likelihood optimum");
    }
  }
}

}  // namespace detail

/// Maximum pseudo-likelihood estimate by Newton-Raphson with step halving.
inline PseudoFit mple(const PseudoLikelihood& pl, const MpleSettings& settings = {}) {
  detail::check_design(pl);
  Vector theta = Vector::Zero(pl.dim());
  double value = pl.value(theta);
  PseudoFit fit;
  bool converged = false;
  for (int it = 0; it < settings.max_iter; ++it) {
    const Vector grad = pl.gradient(theta);
    fit.iterations = it;
    if (grad.lpNorm<Eigen::Infinity>() < settings.gradient_tol) {
      converged = true;
      break;
    }
    const Matrix neg_h = -pl.hessian(theta);
    Eigen::LDLT<Matrix> ldlt(neg_h);
    Vector step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad;
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      const Vector cand = theta + scale * step;
      const double v = pl.value(cand);
      if (std::isfinite(v) && v >= value - 1e-12 * std::abs(value)) {
        theta = cand;
        value = v;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  if (!converged) {
    converged = pl.gradient(theta).lpNorm<Eigen::Infinity>() < settings.gradient_tol;
  }
  fit.theta_mple = theta;
  fit.hessian = pl.hessian(theta);
  fit.log_pl_at_mode = value;
  // A drifting optimum shows up as a near-singular Hessian.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(-fit.hessian);
  const Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < 1e-6 * std::max(1.0, lambda.maxCoeff()) || !converged) {
    Eigen::Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    throw Error(ErrorKind::numeric, "complete or quasi-complete separation: pseudo-likelihood optimum is unbounded "
                                    "along coordinate '" + pl.names()[worst] + "'");
  }
  return fit;
}

inline PseudoFit mple(const Model& model, const Graph& g, const MpleSettings& settings = {}) {
  return mple(PseudoLikelihood(model, g), settings);
}

}  // namespace bergm
