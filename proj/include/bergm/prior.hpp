#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/model.hpp"
#include "bergm/rng.hpp"

namespace bergm {

/// Multivariate normal prior N(mean, sigma) on the model parameters.
class GaussianPrior {
 public:
  GaussianPrior(Vector mean, Matrix sigma) : mean_(std::move(mean)), sigma_(std::move(sigma)) {
    if (sigma_.rows() != mean_.size() || sigma_.cols() != mean_.size()) {
      throw Error(ErrorKind::dimension, "prior mean has length " + std::to_string(mean_.size()) +
                                            " but covariance is " + std::to_string(sigma_.rows()) + "x" +
                                            std::to_string(sigma_.cols()));
    }
    if (!mean_.allFinite() || !sigma_.allFinite()) throw Error(ErrorKind::numeric, "prior contains non-finite values");
    if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, sigma_.cwiseAbs().maxCoeff())) {
      throw Error(ErrorKind::numeric, "prior covariance is not symmetric");
    }
    llt_.compute(sigma_);
    if (llt_.info() != Eigen::Success || llt_.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0) {
      throw Error(ErrorKind::numeric, "prior covariance is not positive definite");
    }
    const Matrix l = llt_.matrixL();
    log_norm_ = -0.5 * static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) -
                l.diagonal().array().log().sum();
  }

  /// N(mean, variance * I).
  static GaussianPrior isotropic(const Vector& mean, double variance) {
    return GaussianPrior(mean, Matrix::Identity(mean.size(), mean.size()) * variance);
  }

  int dim() const noexcept { return static_cast<int>(mean_.size()); }
  const Vector& mean() const noexcept { return mean_; }
  const Matrix& sigma() const noexcept { return sigma_; }

  double log_density(const Vector& theta) const {
    const Vector z = llt_.matrixL().solve(theta - mean_);
    return log_norm_ - 0.5 * z.squaredNorm();
  }

  Matrix precision() const { return llt_.solve(Matrix::Identity(dim(), dim())); }

  Vector draw(Rng& rng) const {
    Vector z(dim());
    for (int k = 0; k < dim(); ++k) z[k] = rng.normal();
    return mean_ + llt_.matrixL() * z;
  }

  /// The prior on the sampled coordinates of `model`. A prior over every
  /// coordinate is marginalised onto the free ones (the entries for offset
  /// coordinates are ignored); a prior already over the free coordinates is
  /// returned as is.
  GaussianPrior for_model(const Model& model) const {
    if (dim() == model.free_dim()) return *this;
    if (dim() != model.dim()) {
      throw Error(ErrorKind::dimension, "prior has dimension " + std::to_string(dim()) + ", model has " +
                                            std::to_string(model.dim()) + " coordinates (" +
                                            std::to_string(model.free_dim()) + " free)");
    }
    return GaussianPrior(model.free_part(mean_), model.free_block(sigma_));
  }

 private:
  Vector mean_;
  Matrix sigma_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_ = 0.0;
};

}  // namespace bergm
