#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/exchange.hpp"
#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/parallel.hpp"
#include "bergm/rng.hpp"
#include "bergm/sampler.hpp"
#include "bergm/stats.hpp"
#include "bergm/summary.hpp"

namespace bergm {

/// Bin caps: degree-type families use degrees 0..cap-1, esp uses 0..cap-1
/// shared partners, geodesic uses distances 1..cap-1 plus the unreachable
/// bin. 0 selects every possible bin.
struct GofCaps {
  int n_deg = 0;
  int n_ideg = 0;
  int n_odeg = 0;
  int n_dist = 0;
  int n_esp = 0;
};

struct GofSettings {
  int sample_size = 100;
  std::uint64_t aux_iters = 10000;
  GofCaps caps;
  bool start_empty = false;  // simulations start from the empty graph instead of y
  std::uint64_t seed = 1;
  int threads = 0;
};

/// One statistic family: per bin the observed proportion and the 2.5, 25,
/// 50, 75, 97.5% quantiles of the simulated proportions.
struct GofFamily {
  std::string name;
  std::vector<std::string> bins;
  std::vector<double> observed;
  std::vector<std::array<double, 5>> quantiles;
};

struct GofReport {
  std::vector<GofFamily> families;
  int sample_size = 0;
  std::uint64_t aux_iters = 0;
  GofCaps caps;

  const GofFamily* family(const std::string& name) const {
    for (const auto& f : families)
      if (f.name == name) return &f;
    return nullptr;
  }
};

namespace detail {

// Proportions per family in a fixed bin layout. Degrees are shares of
// nodes, esp of edges, geodesics of dyads.
struct GofLayout {
  bool directed = false;
  int deg = 0, ideg = 0, odeg = 0, esp = 0, dist = 0;

  static GofLayout make(const Graph& g, const GofCaps& caps) {
    const int n = g.size();
    auto pick = [](int cap, int full) { return cap > 0 ? std::min(cap, full) : full; };
    GofLayout l;
    l.directed = g.directed();
    l.deg = pick(caps.n_deg, n);
    l.ideg = pick(caps.n_ideg, n);
    l.odeg = pick(caps.n_odeg, n);
    l.esp = pick(caps.n_esp, std::max(n - 1, 1));
    l.dist = pick(caps.n_dist, n);
    return l;
  }

  std::vector<std::pair<std::string, int>> families() const {
    if (directed) return {{"in_degree", ideg}, {"out_degree", odeg}, {"esp", esp}, {"geodesic", dist}};
    return {{"degree", deg}, {"esp", esp}, {"geodesic", dist}};
  }

  std::vector<std::vector<double>> proportions(const Graph& g) const {
    const GofDistributions s = gof_stats(g);
    const double nodes = g.size();
    const double edges = std::max<double>(1.0, static_cast<double>(g.edge_count()));
    const double dyads = static_cast<double>(g.dyad_count());
    auto head = [](const std::vector<std::int64_t>& counts, int bins, double denom) {
      std::vector<double> out(bins, 0.0);
      for (int b = 0; b < bins && b < static_cast<int>(counts.size()); ++b) out[b] = counts[b] / denom;
      return out;
    };
    std::vector<std::vector<double>> out;
    if (directed) {
      out.push_back(head(s.in_degree, ideg, nodes));
      out.push_back(head(s.out_degree, odeg, nodes));
    } else {
      out.push_back(head(s.degree, deg, nodes));
    }
    out.push_back(head(s.esp, esp, edges));
    std::vector<double> geo(dist, 0.0);
    for (int b = 1; b < dist; ++b) geo[b - 1] = b < static_cast<int>(s.geodesic.size()) ? s.geodesic[b] / dyads : 0.0;
    geo[dist - 1] = s.unreachable / dyads;
    out.push_back(geo);
    return out;
  }
};

}  // namespace detail

/// Posterior-predictive goodness of fit: sample_size parameter vectors drawn
/// with replacement from the pooled sample, one network simulated for each
/// with aux_iters toggles, and per-bin quantiles of the simulated GOF
/// proportions alongside the observed ones.
inline GofReport bgof(const PosteriorSample& sample, const Model& model, const Graph& g, const GofSettings& s) {
  if (s.sample_size < 2) throw Error(ErrorKind::usage, "sample_size must be at least 2");
  if (sample.draws.rows() == 0) throw Error(ErrorKind::data, "empty posterior sample");
  if (sample.draws.cols() != model.free_dim()) {
    throw Error(ErrorKind::dimension, "posterior draws have " + std::to_string(sample.draws.cols()) +
                                          " columns, model has " + std::to_string(model.free_dim()) +
                                          " free coordinates");
  }
  const detail::GofLayout layout = detail::GofLayout::make(g, s.caps);
  const auto fams = layout.families();
  Graph start(g.size(), g.directed());
  if (!s.start_empty) {
    start = g;
  } else {
    for (const auto& [name, values] : g.attributes()) start.set_attribute(name, values);
  }

  std::vector<std::vector<std::vector<double>>> sims(s.sample_size);
  parallel_for(static_cast<std::size_t>(s.sample_size), s.threads, [&](std::size_t k) {
    Rng rng(s.seed, 0x60F0000ULL + k);
    const auto row = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(sample.draws.rows())));
    const Vector theta = model.full_theta(sample.draws.row(row).transpose());
    Graph y = start;
    ToggleSampler sampler(model);
    sampler.run(theta, y, s.aux_iters, rng);
    sims[k] = layout.proportions(y);
  });

  GofReport report;
  report.sample_size = s.sample_size;
  report.aux_iters = s.aux_iters;
  report.caps = s.caps;
  const auto observed = layout.proportions(g);
  for (std::size_t f = 0; f < fams.size(); ++f) {
    GofFamily fam;
    fam.name = fams[f].first;
    const int bins = fams[f].second;
    for (int b = 0; b < bins; ++b) {
      if (fam.name == "geodesic") {
        fam.bins.push_back(b == bins - 1 ? "NR" : std::to_string(b + 1));
      } else {
        fam.bins.push_back(std::to_string(b));
      }
    }
    fam.observed = observed[f];
    for (int b = 0; b < bins; ++b) {
      std::vector<double> v(s.sample_size);
      for (int k = 0; k < s.sample_size; ++k) v[k] = sims[k][f][b];
      std::sort(v.begin(), v.end());
      std::array<double, 5> q{};
      for (std::size_t p = 0; p < summary_probs.size(); ++p) q[p] = quantile_sorted(v, summary_probs[p]);
      fam.quantiles.push_back(q);
    }
    report.families.push_back(std::move(fam));
  }
  return report;
}

/// Long-format CSV: family, bin, observed, then the five quantiles.
inline void write_gof_csv(const GofReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out << "statistic,bin,observed,q2.5,q25,q50,q75,q97.5\n";
  for (const auto& f : r.families) {
    for (std::size_t b = 0; b < f.bins.size(); ++b) {
      out << f.name << ',' << f.bins[b] << ',' << format_number(f.observed[b]);
      for (double q : f.quantiles[b]) out << ',' << format_number(q);
      out << '\n';
    }
  }
}

/// Long-format CSV of raw GOF counts of one network: statistic, bin, count.
inline void write_gof_counts_csv(const GofDistributions& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out << "statistic,bin,count\n";
  auto dump = [&](const char* name, const std::vector<std::int64_t>& v, int first) {
    for (std::size_t b = static_cast<std::size_t>(first); b < v.size(); ++b) out << name << ',' << b << ',' << v[b] << '\n';
  };
  if (s.directed) {
    dump("in_degree", s.in_degree, 0);
    dump("out_degree", s.out_degree, 0);
  } else {
    dump("degree", s.degree, 0);
  }
  dump("esp", s.esp, 0);
  dump("geodesic", s.geodesic, 1);
  out << "geodesic,NR," << s.unreachable << '\n';
}

}  // namespace bergm
