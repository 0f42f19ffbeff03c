#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bergm/graph.hpp"
#include "bergm/model.hpp"

namespace bergm {

namespace detail {

// Shared-partner count of the tie a-b as seen by gwesp/esp. Directed graphs
// use outgoing two-paths: partners k with a -> k and k -> b.
inline int shared_partners(const Graph& g, int a, int b) {
  return Graph::common_count(g.out_row(a), g.in_row(b));
}

inline double gwesp_weight(const BoundTerm& t, int partners) {
  return t.weight_scale * (1.0 - std::pow(t.weight_base, partners));
}

inline void degree_change(const BoundTerm& t, int before, double* out) {
  for (int k = 0; k < t.width; ++k) {
    const int target = t.term.degrees[k];
    out[t.first + k] += (before + 1 == target ? 1.0 : 0.0) - (before == target ? 1.0 : 0.0);
  }
}

inline double gwesp_change(const BoundTerm& t, const Graph& g, Dyad d) {
  const int i = d.i, j = d.j;
  const int y = g.has_edge(i, j) ? 1 : 0;
  const double r = t.weight_base;
  double delta = gwesp_weight(t, shared_partners(g, i, j));
  if (g.directed()) {
    // ties i -> b with j -> b gain partner j
    Graph::for_each_common(g.out_row(i), g.out_row(j), [&](int b) {
      delta += std::pow(r, shared_partners(g, i, b) - y);
    });
    // ties a -> j with a -> i gain partner i
    Graph::for_each_common(g.in_row(j), g.in_row(i), [&](int a) {
      delta += std::pow(r, shared_partners(g, a, j) - y);
    });
  } else {
    Graph::for_each_common(g.out_row(i), g.out_row(j), [&](int k) {
      delta += std::pow(r, shared_partners(g, i, k) - y);
      delta += std::pow(r, shared_partners(g, j, k) - y);
    });
  }
  return delta;
}

}  // namespace detail

/// Writes s(y with d present) - s(y with d absent) into `out` (length
/// model.dim()), whatever the current value of d. Only the local
/// neighbourhood of d is inspected.
inline void change_stats(const Model& model, const Graph& g, Dyad d, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const int i = d.i, j = d.j;
  const int y = g.has_edge(i, j) ? 1 : 0;
  for (const BoundTerm& t : model.terms()) {
    double* o = out.data();
    switch (t.term.kind) {
      case TermKind::edges: o[t.first] = 1.0; break;
      case TermKind::mutual: o[t.first] = g.has_edge(j, i) ? 1.0 : 0.0; break;
      case TermKind::nodematch: {
        const int li = t.node_level[i];
        if (li >= 0 && li == t.node_level[j]) o[t.first + (t.term.diff ? li : 0)] = 1.0;
        break;
      }
      case TermKind::nodefactor:
        if (t.node_level[i] >= 0) o[t.first + t.node_level[i]] += 1.0;
        if (t.node_level[j] >= 0) o[t.first + t.node_level[j]] += 1.0;
        break;
      case TermKind::absdiff: o[t.first] = std::abs(t.node_value[i] - t.node_value[j]); break;
      case TermKind::idegree: detail::degree_change(t, g.in_degree(j) - y, o); break;
      case TermKind::odegree: detail::degree_change(t, g.out_degree(i) - y, o); break;
      case TermKind::degree:
        detail::degree_change(t, g.degree(i) - y, o);
        detail::degree_change(t, g.degree(j) - y, o);
        break;
      case TermKind::gwesp: o[t.first] = detail::gwesp_change(t, g, d); break;
    }
  }
}

inline Vector change_stats(const Model& model, const Graph& g, Dyad d) {
  Vector out(model.dim());
  change_stats(model, g, d, std::span<double>(out.data(), out.size()));
  return out;
}

/// Sufficient statistics s(y) in model coordinate order.
inline Vector suff_stats(const Model& model, const Graph& g) {
  Vector s = Vector::Zero(model.dim());
  const auto edges = g.edges();
  for (const BoundTerm& t : model.terms()) {
    switch (t.term.kind) {
      case TermKind::edges: s[t.first] = static_cast<double>(g.edge_count()); break;
      case TermKind::mutual: {
        double m = 0;
        for (const Dyad& e : edges) m += (e.i < e.j && g.has_edge(e.j, e.i)) ? 1.0 : 0.0;
        s[t.first] = m;
        break;
      }
      case TermKind::nodematch:
        for (const Dyad& e : edges) {
          const int li = t.node_level[e.i];
          if (li >= 0 && li == t.node_level[e.j]) s[t.first + (t.term.diff ? li : 0)] += 1.0;
        }
        break;
      case TermKind::nodefactor:
        for (const Dyad& e : edges) {
          if (t.node_level[e.i] >= 0) s[t.first + t.node_level[e.i]] += 1.0;
          if (t.node_level[e.j] >= 0) s[t.first + t.node_level[e.j]] += 1.0;
        }
        break;
      case TermKind::absdiff:
        for (const Dyad& e : edges) s[t.first] += std::abs(t.node_value[e.i] - t.node_value[e.j]);
        break;
      case TermKind::idegree:
      case TermKind::odegree:
      case TermKind::degree:
        for (int v = 0; v < g.size(); ++v) {
          const int deg = t.term.kind == TermKind::idegree   ? g.in_degree(v)
                          : t.term.kind == TermKind::odegree ? g.out_degree(v)
                                                             : g.degree(v);
          for (int k = 0; k < t.width; ++k) s[t.first + k] += deg == t.term.degrees[k] ? 1.0 : 0.0;
        }
        break;
      case TermKind::gwesp:
        for (const Dyad& e : edges) s[t.first] += detail::gwesp_weight(t, detail::shared_partners(g, e.i, e.j));
        break;
    }
  }
  return s;
}

/// Degree, edgewise-shared-partner and geodesic-distance histograms.
struct GofDistributions {
  bool directed = false;
  std::vector<std::int64_t> degree;      // undirected only; index = degree
  std::vector<std::int64_t> in_degree;   // directed only
  std::vector<std::int64_t> out_degree;  // directed only
  std::vector<std::int64_t> esp;         // index = shared partners
  std::vector<std::int64_t> geodesic;    // index = distance; [0] unused
  std::int64_t unreachable = 0;
};

inline GofDistributions gof_stats(const Graph& g) {
  const int n = g.size();
  if (n < 2) throw Error(ErrorKind::data, "goodness-of-fit statistics need at least two nodes");
  GofDistributions out;
  out.directed = g.directed();
  if (g.directed()) {
    out.in_degree.assign(n, 0);
    out.out_degree.assign(n, 0);
    for (int v = 0; v < n; ++v) {
      ++out.in_degree[g.in_degree(v)];
      ++out.out_degree[g.out_degree(v)];
    }
  } else {
    out.degree.assign(n, 0);
    for (int v = 0; v < n; ++v) ++out.degree[g.degree(v)];
  }
  out.esp.assign(std::max(n - 1, 1), 0);
  for (const Dyad& e : g.edges()) ++out.esp[detail::shared_partners(g, e.i, e.j)];

  // breadth-first search over bit rows
  out.geodesic.assign(n, 0);
  const int words = g.words();
  std::vector<std::uint64_t> visited(words), frontier(words), next(words);
  for (int src = 0; src < n; ++src) {
    std::fill(visited.begin(), visited.end(), 0);
    std::fill(frontier.begin(), frontier.end(), 0);
    visited[src >> 6] |= std::uint64_t{1} << (src & 63);
    frontier[src >> 6] |= std::uint64_t{1} << (src & 63);
    for (int dist = 1; dist < n; ++dist) {
      std::fill(next.begin(), next.end(), 0);
      Graph::for_each_bit(frontier, [&](int v) {
        const auto row = g.out_row(v);
        for (int w = 0; w < words; ++w) next[w] |= row[w];
      });
      bool any = false;
      for (int w = 0; w < words; ++w) {
        next[w] &= ~visited[w];
        visited[w] |= next[w];
        any |= next[w] != 0;
      }
      if (!any) break;
      // count reached targets; undirected pairs are counted once (src < target)
      Graph::for_each_bit(next, [&](int target) {
        if (g.directed() || target > src) ++out.geodesic[dist];
      });
      frontier.swap(next);
    }
  }
  const std::int64_t pairs = static_cast<std::int64_t>(g.dyad_count());
  std::int64_t reached = 0;
  for (auto c : out.geodesic) reached += c;
  out.unreachable = pairs - reached;
  return out;
}

}  // namespace bergm
