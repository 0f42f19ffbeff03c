#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/exchange.hpp"
#include "bergm/model.hpp"

namespace bergm {

inline constexpr std::array<double, 5> summary_probs{0.025, 0.25, 0.5, 0.75, 0.975};

/// Quantile of sorted data by linear interpolation between order statistics
/// (position p (n - 1)).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::data, "quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Batch-means standard error of the mean with floor(sqrt(N)) batches of
/// equal size; trailing draws that do not fill a batch are dropped.
inline double batch_means_se(const Vector& x) {
  const Eigen::Index n = x.size();
  const auto batches = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  if (batches < 2) return std::nan("");
  const Eigen::Index size = n / batches;
  const Eigen::Index used = batches * size;
  const double mean = x.head(used).mean();
  double ss = 0.0;
  for (Eigen::Index b = 0; b < batches; ++b) {
    const double m = x.segment(b * size, size).mean();
    ss += (m - mean) * (m - mean);
  }
  const double var_mean_batch = ss / static_cast<double>(batches - 1);
  // variance of a batch mean times batch size estimates the long-run variance
  return std::sqrt(var_mean_batch * static_cast<double>(size) / static_cast<double>(n));
}

struct CoordinateSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double naive_se = 0.0;
  double ts_se = 0.0;
  std::array<double, 5> quantiles{};
};

struct SummaryTable {
  std::vector<CoordinateSummary> rows;
  double acceptance_rate = 0.0;
  Eigen::Index draws = 0;
};

/// Per-column mean, SD, naive SE, batch-means SE and quantiles of `draws`,
/// taken in row order as one sequence.
inline SummaryTable summarize(const Matrix& draws, const std::vector<std::string>& names, double acceptance_rate) {
  if (draws.rows() == 0) throw Error(ErrorKind::data, "empty posterior sample");
  if (static_cast<Eigen::Index>(names.size()) != draws.cols()) {
    throw Error(ErrorKind::dimension, "names do not match the number of columns");
  }
  SummaryTable out;
  out.acceptance_rate = acceptance_rate;
  out.draws = draws.rows();
  const auto n = static_cast<double>(draws.rows());
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const Vector x = draws.col(c);
    CoordinateSummary s;
    s.name = names[c];
    s.mean = x.mean();
    s.sd = draws.rows() > 1 ? std::sqrt((x.array() - s.mean).square().sum() / (n - 1.0)) : 0.0;
    s.naive_se = s.sd / std::sqrt(n);
    const double ts = batch_means_se(x);
    s.ts_se = std::isnan(ts) ? s.naive_se : ts;
    std::vector<double> sorted(x.data(), x.data() + x.size());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t q = 0; q < summary_probs.size(); ++q) s.quantiles[q] = quantile_sorted(sorted, summary_probs[q]);
    out.rows.push_back(s);
  }
  return out;
}

inline SummaryTable summarize(const PosteriorSample& sample) {
  return summarize(sample.draws, sample.names, sample.acceptance_rate());
}

inline void write_summary_csv(const SummaryTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out << "parameter,mean,sd,naive_se,ts_se,q2.5,q25,q50,q75,q97.5\n";
  for (const auto& r : t.rows) {
    out << r.name << ',' << format_number(r.mean) << ',' << format_number(r.sd) << ',' << format_number(r.naive_se)
        << ',' << format_number(r.ts_se);
    for (double q : r.quantiles) out << ',' << format_number(q);
    out << '\n';
  }
}

/// Raw draws as CSV: chain, iteration, then one column per coordinate.
inline void write_draws_csv(const PosteriorSample& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out << "chain,iter";
  for (const auto& nm : s.names) out << ',' << nm;
  out << '\n';
  for (Eigen::Index r = 0; r < s.draws.rows(); ++r) {
    out << s.chain_of(r) << ',' << s.iteration_of(r);
    for (Eigen::Index c = 0; c < s.draws.cols(); ++c) out << ',' << format_number(s.draws(r, c));
    out << '\n';
  }
}

}  // namespace bergm
