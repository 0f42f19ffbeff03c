#pragma once

// Reference computations used only by the tests. They work on plain
// adjacency matrices and raw attribute values, not on the library's bit rows,
// bound terms or change statistics.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bergm/graph.hpp"
#include "bergm/model.hpp"
#include "bergm/rng.hpp"

namespace oracle {

using Adj = std::vector<std::vector<int>>;

inline Adj adjacency(const bergm::Graph& g) {
  Adj a(g.size(), std::vector<int>(g.size(), 0));
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) a[i][j] = (i != j && g.has_edge(i, j)) ? 1 : 0;
  return a;
}

struct Levels {
  std::vector<std::string> names;
  std::vector<std::string> node;  // level label of each node
  bool numeric = false;
  std::vector<double> node_num;
};

inline std::string label(double v) {
  // integers print without decimals; the tests only use integers or simple decimals
  if (v == std::floor(v)) return std::to_string(static_cast<long long>(v));
  std::string s = std::to_string(v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  return s;
}

inline Levels levels_of(const bergm::AttributeValues& values) {
  Levels out;
  if (auto* num = std::get_if<std::vector<double>>(&values)) {
    out.numeric = true;
    out.node_num = *num;
    std::vector<double> u = *num;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    for (double v : u) out.names.push_back(label(v));
    for (double v : *num) out.node.push_back(label(v));
  } else {
    auto str = std::get<std::vector<std::string>>(values);
    out.node = str;
    std::sort(str.begin(), str.end());
    str.erase(std::unique(str.begin(), str.end()), str.end());
    out.names = str;
  }
  return out;
}

inline std::vector<std::pair<int, int>> edge_pairs(const Adj& a, bool directed) {
  std::vector<std::pair<int, int>> e;
  const int n = static_cast<int>(a.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a[i][j] && (directed || i < j)) e.emplace_back(i, j);
  return e;
}

inline int partners(const Adj& a, int i, int j, bool directed) {
  int c = 0;
  const int n = static_cast<int>(a.size());
  for (int k = 0; k < n; ++k) {
    if (k == i || k == j) continue;
    if (directed) {
      c += a[i][k] && a[k][j];
    } else {
      c += a[i][k] && a[j][k];
    }
  }
  return c;
}

/// Brute-force statistics of a formula on an adjacency matrix.
inline std::vector<double> statistics(const bergm::ModelSpec& spec, const Adj& a, bool directed,
                                      const std::map<std::string, bergm::AttributeValues>& attrs) {
  using bergm::TermKind;
  std::vector<double> s;
  const int n = static_cast<int>(a.size());
  const auto edges = edge_pairs(a, directed);
  auto indeg = [&](int v) { int c = 0; for (int u = 0; u < n; ++u) c += a[u][v]; return c; };
  auto outdeg = [&](int v) { int c = 0; for (int u = 0; u < n; ++u) c += a[v][u]; return c; };
  for (const auto& t : spec.terms) {
    switch (t.kind) {
      case TermKind::edges: s.push_back(static_cast<double>(edges.size())); break;
      case TermKind::mutual: {
        double m = 0;
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) m += a[i][j] && a[j][i];
        s.push_back(m);
        break;
      }
      case TermKind::nodematch: {
        const Levels lv = levels_of(attrs.at(*t.attr));
        std::vector<std::string> keep = t.levels ? *t.levels : lv.names;
        if (lv.numeric) {
          for (auto& k : keep) k = label(std::stod(k));
        }
        std::vector<std::string> order;
        for (const auto& nm : lv.names)
          if (std::find(keep.begin(), keep.end(), nm) != keep.end()) order.push_back(nm);
        std::vector<double> c(t.diff ? order.size() : 1, 0.0);
        for (auto [i, j] : edges) {
          if (lv.node[i] != lv.node[j]) continue;
          auto it = std::find(order.begin(), order.end(), lv.node[i]);
          if (it == order.end()) continue;
          c[t.diff ? it - order.begin() : 0] += 1;
        }
        s.insert(s.end(), c.begin(), c.end());
        break;
      }
      case TermKind::nodefactor: {
        const Levels lv = levels_of(attrs.at(*t.attr));
        std::vector<std::string> order;
        if (t.levels) {
          for (const auto& nm : lv.names)
            for (auto k : *t.levels) {
              if (lv.numeric) k = label(std::stod(k));
              if (k == nm) order.push_back(nm);
            }
        } else {
          order.assign(lv.names.begin() + 1, lv.names.end());
        }
        std::vector<double> c(order.size(), 0.0);
        for (auto [i, j] : edges) {
          for (int v : {i, j}) {
            auto it = std::find(order.begin(), order.end(), lv.node[v]);
            if (it != order.end()) c[it - order.begin()] += 1;
          }
        }
        s.insert(s.end(), c.begin(), c.end());
        break;
      }
      case TermKind::absdiff: {
        const auto& x = std::get<std::vector<double>>(attrs.at(*t.attr));
        double v = 0;
        for (auto [i, j] : edges) v += std::abs(x[i] - x[j]);
        s.push_back(v);
        break;
      }
      case TermKind::idegree:
      case TermKind::odegree:
      case TermKind::degree:
        for (int k : t.degrees) {
          double c = 0;
          for (int v = 0; v < n; ++v) {
            const int d = t.kind == TermKind::idegree ? indeg(v) : outdeg(v);
            c += d == k;
          }
          s.push_back(c);
        }
        break;
      case TermKind::gwesp: {
        const double r = 1.0 - std::exp(-t.decay);
        double v = 0;
        for (auto [i, j] : edges) {
          const int k = partners(a, i, j, directed);
          v += std::exp(t.decay) * (1.0 - std::pow(r, k));
        }
        s.push_back(v);
        break;
      }
    }
  }
  return s;
}

inline std::vector<double> statistics(const bergm::ModelSpec& spec, const bergm::Graph& g) {
  return statistics(spec, adjacency(g), g.directed(), g.attributes());
}

/// Random graph with independent ties at probability p.
inline bergm::Graph random_graph(int n, bool directed, double p, bergm::Rng& rng) {
  bergm::Graph g(n, directed);
  for (const auto& d : g.all_dyads())
    if (rng.bernoulli(p)) g.toggle(d);
  return g;
}

/// Standard normal CDF.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Kolmogorov distribution tail P(K > x) (asymptotic).
inline double kolmogorov_tail(double x) {
  if (x <= 0) return 1.0;
  double s = 0;
  for (int k = 1; k < 200; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

/// Upper tail of the chi-square distribution via the regularized gamma
/// function (series / continued fraction).
inline double chi_square_tail(double x, double dof) {
  const double a = dof / 2.0, z = x / 2.0;
  if (z <= 0) return 1.0;
  const double lg = std::lgamma(a);
  if (z < a + 1.0) {
    double sum = 1.0 / a, term = sum;
    for (int n = 1; n < 10000; ++n) {
      term *= z / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return 1.0 - sum * std::exp(-z + a * std::log(z) - lg);
  }
  double b = z + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-z + a * std::log(z) - lg) * h;
}

/// Every network on n nodes, statistics by brute force. Graph k has the
/// pair list entry b present iff bit b of k is set.
struct Enumerated {
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::vector<double>> stats;

  Adj graph(std::size_t k, int n, bool directed) const {
    Adj a(n, std::vector<int>(n, 0));
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      if ((k >> b) & 1U) {
        a[pairs[b].first][pairs[b].second] = 1;
        if (!directed) a[pairs[b].second][pairs[b].first] = 1;
      }
    }
    return a;
  }
};

inline Enumerated enumerate(const bergm::ModelSpec& spec, int n, bool directed,
                            const std::map<std::string, bergm::AttributeValues>& attrs) {
  Enumerated e;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && (directed || i < j)) e.pairs.emplace_back(i, j);
  const std::size_t count = std::size_t{1} << e.pairs.size();
  for (std::size_t k = 0; k < count; ++k) e.stats.push_back(statistics(spec, e.graph(k, n, directed), directed, attrs));
  return e;
}

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = *std::max_element(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Exact log-likelihood theta's(y) - log z(theta) from enumerated statistics.
inline double log_likelihood(const Enumerated& e, const std::vector<double>& theta, const std::vector<double>& s_obs) {
  std::vector<double> v;
  v.reserve(e.stats.size());
  for (const auto& s : e.stats) v.push_back(dot(theta, s));
  return dot(theta, s_obs) - log_sum_exp(v);
}

/// Midpoint-rule quadrature of exp(log_post) on a square 2-D grid.
struct Grid2D {
  double lo0, hi0, lo1, hi1;
  int n;
  std::vector<double> x0, x1;
  std::vector<double> logw;  // log unnormalised density at each cell centre, row-major (i0, i1)
  double log_mass = 0;       // log of the integral
  double mean0 = 0, mean1 = 0;
  std::vector<double> marg0, marg1;  // marginal cell probabilities

  template <class F>
  Grid2D(double l0, double h0, double l1, double h1, int cells, F&& log_post)
      : lo0(l0), hi0(h0), lo1(l1), hi1(h1), n(cells) {
    const double d0 = (hi0 - lo0) / n, d1 = (hi1 - lo1) / n;
    for (int i = 0; i < n; ++i) x0.push_back(lo0 + (i + 0.5) * d0);
    for (int i = 0; i < n; ++i) x1.push_back(lo1 + (i + 0.5) * d1);
    logw.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) logw[i * n + j] = log_post(x0[i], x1[j]);
    log_mass = log_sum_exp(logw) + std::log(d0 * d1);
    marg0.assign(n, 0);
    marg1.assign(n, 0);
    const double mx = *std::max_element(logw.begin(), logw.end());
    double total = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double w = std::exp(logw[i * n + j] - mx);
        marg0[i] += w;
        marg1[j] += w;
        total += w;
      }
    for (int i = 0; i < n; ++i) {
      marg0[i] /= total;
      marg1[i] /= total;
      mean0 += marg0[i] * x0[i];
      mean1 += marg1[i] * x1[i];
    }
  }

  /// Marginal CDF, linear within cells.
  double cdf(int coord, double x) const {
    const auto& m = coord == 0 ? marg0 : marg1;
    const double lo = coord == 0 ? lo0 : lo1, hi = coord == 0 ? hi0 : hi1;
    if (x <= lo) return 0.0;
    if (x >= hi) return 1.0;
    const double pos = (x - lo) / (hi - lo) * n;
    const int cell = std::min(static_cast<int>(pos), n - 1);
    double c = 0;
    for (int i = 0; i < cell; ++i) c += m[i];
    return c + (pos - cell) * m[cell];
  }
};

/// One-sample Kolmogorov-Smirnov p-value (asymptotic) of `xs` against `cdf`.
template <class F>
double ks_pvalue(std::vector<double> xs, F&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = cdf(xs[k]);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

inline double log_normal_diag(const std::vector<double>& x, const std::vector<double>& mean, double var) {
  double v = 0;
  for (std::size_t k = 0; k < x.size(); ++k) v += -0.5 * std::log(2 * M_PI * var) - 0.5 * (x[k] - mean[k]) * (x[k] - mean[k]) / var;
  return v;
}

}  // namespace oracle
