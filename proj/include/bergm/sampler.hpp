#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/rng.hpp"
#include "bergm/stats.hpp"

namespace bergm {

struct SamplerSettings {
  /// Toggle proposals per network draw.
  std::uint64_t aux_iters = 1000;
};

inline void require_finite(const Vector& theta, const char* what) {
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    if (!std::isfinite(theta[k])) throw Error(ErrorKind::numeric, std::string(what) + " contains a non-finite value");
  }
}

/// Single-dyad toggle Metropolis-Hastings on f(y | theta) = exp(theta's(y)) / z(theta).
///
/// Each step picks a dyad uniformly (or uniformly among a given subset) and
/// flips it with probability min(1, exp(+-theta'delta)), where delta is the
/// change statistic and the sign is + for adding a tie. Owns its scratch
/// buffers; use one instance per chain.
class ToggleSampler {
 public:
  explicit ToggleSampler(const Model& model) : model_(&model), delta_(model.dim()) {}

  /// Runs `steps` proposals on g in place over all dyads. If `stat_change`
  /// is non-null, s(final) - s(initial) is added to it. Returns the number of
  /// accepted toggles.
  std::uint64_t run(const Vector& theta, Graph& g, std::uint64_t steps, Rng& rng, Vector* stat_change = nullptr) {
    check(theta);
    const int n = g.size();
    if (n < 2) return 0;
    std::uint64_t accepted = 0;
    for (std::uint64_t s = 0; s < steps; ++s) {
      int i = static_cast<int>(rng.below(n));
      int j = static_cast<int>(rng.below(n - 1));
      if (j >= i) ++j;
      if (!g.directed() && i > j) std::swap(i, j);
      accepted += step(theta, g, Dyad{i, j}, rng, stat_change);
    }
    return accepted;
  }

  /// Same chain restricted to proposals drawn uniformly from `dyads`.
  std::uint64_t run_on(const Vector& theta, Graph& g, std::span<const Dyad> dyads, std::uint64_t steps, Rng& rng,
                       Vector* stat_change = nullptr) {
    check(theta);
    if (dyads.empty()) throw Error(ErrorKind::data, "no dyads to update");
    std::uint64_t accepted = 0;
    for (std::uint64_t s = 0; s < steps; ++s) {
      accepted += step(theta, g, dyads[rng.below(dyads.size())], rng, stat_change);
    }
    return accepted;
  }

 private:
  void check(const Vector& theta) const {
    if (theta.size() != model_->dim()) {
      throw Error(ErrorKind::dimension, "theta has length " + std::to_string(theta.size()) + ", model has " +
                                            std::to_string(model_->dim()) + " coordinates");
    }
    require_finite(theta, "theta");
  }

  int step(const Vector& theta, Graph& g, Dyad d, Rng& rng, Vector* stat_change) {
    change_stats(*model_, g, d, std::span<double>(delta_.data(), delta_.size()));
    const bool present = g.has_edge(d);
    double log_ratio = theta.dot(delta_);
    if (present) log_ratio = -log_ratio;
    if (log_ratio >= 0.0 || rng.uniform() < std::exp(log_ratio)) {
      g.toggle(d);
      if (stat_change) {
        if (present) {
          *stat_change -= delta_;
        } else {
          *stat_change += delta_;
        }
      }
      return 1;
    }
    return 0;
  }

  const Model* model_;
  Vector delta_;
};

/// Draws a network from f(. | theta) by `settings.aux_iters` toggle steps
/// started at g0. `theta` covers every model coordinate, offsets included.
inline Graph simulate(const Model& model, const Vector& theta, const Graph& g0, const SamplerSettings& settings,
                      Rng& rng) {
  Graph g = g0;
  ToggleSampler sampler(model);
  sampler.run(theta, g, settings.aux_iters, rng);
  return g;
}

/// Updates only the masked dyads of g_star: draws v* from f(v | u, theta)
/// with `updates` toggle proposals. Observed dyads never change.
inline Graph simulate_constrained(const Model& model, const Vector& theta, const Graph& g_star,
                                  std::uint64_t updates, Rng& rng) {
  if (!g_star.has_missing()) throw Error(ErrorKind::data, "network has no masked dyads to simulate");
  Graph g = g_star;
  ToggleSampler sampler(model);
  sampler.run_on(theta, g, g.missing_dyads(), updates, rng);
  return g;
}

/// Every network on a small node set together with its statistics, for
/// exact normalising constants, probabilities and moments.
class ExactTable {
 public:
  static constexpr int max_dyads = 24;

  /// Enumerates all networks on base's node set (direction and attributes
  /// taken from `base`; its ties are ignored). Network k has dyad b present
  /// iff bit b of k is set, dyads in Graph::all_dyads() order.
  static ExactTable enumerate(const Model& model, const Graph& base) {
    ExactTable t;
    Graph g(base.size(), base.directed());
    for (const auto& [name, values] : base.attributes()) g.set_attribute(name, values);
    t.dyads_ = g.all_dyads();
    const int nd = static_cast<int>(t.dyads_.size());
    if (nd > max_dyads) {
      throw Error(ErrorKind::data, "exact enumeration limited to " + std::to_string(max_dyads) + " dyads, got " +
                                       std::to_string(nd));
    }
    t.template_ = g;
    const std::uint64_t count = std::uint64_t{1} << nd;
    t.stats_.resize(static_cast<Eigen::Index>(count), model.dim());
    // Gray-code walk: one toggle between consecutive networks.
    Vector s = suff_stats(model, g);
    Vector delta(model.dim());
    std::uint64_t code = 0;
    t.stats_.row(0) = s.transpose();
    for (std::uint64_t k = 1; k < count; ++k) {
      const int bit = std::countr_zero(k);
      const Dyad d = t.dyads_[bit];
      change_stats(model, g, d, std::span<double>(delta.data(), delta.size()));
      if (g.has_edge(d)) {
        s -= delta;
      } else {
        s += delta;
      }
      g.toggle(d);
      code ^= std::uint64_t{1} << bit;
      t.stats_.row(static_cast<Eigen::Index>(code)) = s.transpose();
    }
    return t;
  }

  std::uint64_t size() const noexcept { return static_cast<std::uint64_t>(stats_.rows()); }
  const Matrix& stats() const noexcept { return stats_; }
  const std::vector<Dyad>& dyads() const noexcept { return dyads_; }

  double log_z(const Vector& theta) const {
    const Vector e = stats_ * theta;
    const double mx = e.maxCoeff();
    return mx + std::log((e.array() - mx).exp().sum());
  }

  Vector probabilities(const Vector& theta) const {
    const Vector e = stats_ * theta;
    const double mx = e.maxCoeff();
    Vector p = (e.array() - mx).exp();
    return p / p.sum();
  }

  Vector mean(const Vector& theta) const { return stats_.transpose() * probabilities(theta); }

  Matrix covariance(const Vector& theta) const {
    const Vector p = probabilities(theta);
    const Vector mu = stats_.transpose() * p;
    const Matrix centred = stats_.rowwise() - mu.transpose();
    return centred.transpose() * p.asDiagonal() * centred;
  }

  double log_likelihood(const Vector& theta, const Vector& observed_stats) const {
    return theta.dot(observed_stats) - log_z(theta);
  }

  Graph graph(std::uint64_t index) const {
    Graph g = template_;
    for (std::size_t b = 0; b < dyads_.size(); ++b) {
      if ((index >> b) & 1U) g.toggle(dyads_[b]);
    }
    return g;
  }

  std::uint64_t index_of(const Graph& g) const {
    std::uint64_t k = 0;
    for (std::size_t b = 0; b < dyads_.size(); ++b) {
      if (g.has_edge(dyads_[b])) k |= std::uint64_t{1} << b;
    }
    return k;
  }

 private:
  Matrix stats_;
  std::vector<Dyad> dyads_;
  Graph template_;
};

inline ExactTable enumerate_exact(const Model& model, const Graph& base) { return ExactTable::enumerate(model, base); }

}  // namespace bergm
