#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bergm/error.hpp"

namespace bergm {

/// A node pair. Undirected graphs store it canonicalized with i < j; for
/// directed graphs (i, j) is the tie i -> j.
struct Dyad {
  int i = 0;
  int j = 0;

  auto operator<=>(const Dyad&) const = default;
};

/// Per-node attribute values: numeric when every entry parsed as a number,
/// categorical otherwise.
using AttributeValues = std::variant<std::vector<double>, std::vector<std::string>>;

inline std::size_t attribute_length(const AttributeValues& values) {
  return std::visit([](const auto& v) { return v.size(); }, values);
}

/// Binary network on n nodes held as dense bit rows.
///
/// Missing ties are tracked by an observation mask. A masked dyad still holds
/// a working value (the current imputation) so statistics are always defined
/// on the augmented network; estimators decide whether to look at it.
class Graph {
 public:
  Graph() = default;

  Graph(int n, bool directed)
      : n_(n),
        directed_(directed),
        words_((n + 63) / 64),
        out_bits_(static_cast<std::size_t>(n) * words_, 0),
        in_bits_(directed ? static_cast<std::size_t>(n) * words_ : 0, 0),
        out_degree_(n, 0),
        in_degree_(directed ? n : 0, 0),
        missing_(static_cast<std::size_t>(n) * n, 0) {
    if (n < 1) throw Error(ErrorKind::data, "graph needs at least one node");
  }

  /// Builds a fully observed graph. Repeated pairs are accepted once; a note
  /// is appended to `warnings` for each repeat when it is non-null.
  static Graph from_edge_list(std::span<const std::pair<int, int>> edges, int n, bool directed,
                              std::vector<std::string>* warnings = nullptr) {
    Graph g(n, directed);
    for (const auto& [a, b] : edges) {
      const Dyad d = g.dyad(a, b);
      if (g.has_edge(d.i, d.j)) {
        if (warnings) {
          warnings->push_back("duplicate edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") ignored");
        }
        continue;
      }
      g.set_edge(d.i, d.j, true);
    }
    return g;
  }

  int size() const noexcept { return n_; }
  bool directed() const noexcept { return directed_; }
  int words() const noexcept { return words_; }

  /// Validates (i, j) and returns the canonical dyad.
  Dyad dyad(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
      throw Error(ErrorKind::data, "node index out of range: (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") with n=" + std::to_string(n_));
    }
    if (i == j) throw Error(ErrorKind::data, "self-loop (" + std::to_string(i) + "," + std::to_string(i) + ") not allowed");
    if (!directed_ && i > j) std::swap(i, j);
    return {i, j};
  }

  std::uint64_t dyad_count() const noexcept {
    const auto n = static_cast<std::uint64_t>(n_);
    return directed_ ? n * (n - 1) : n * (n - 1) / 2;
  }

  /// Enumerates all dyads in canonical order (row-major).
  std::vector<Dyad> all_dyads() const {
    std::vector<Dyad> out;
    out.reserve(dyad_count());
    for (int i = 0; i < n_; ++i) {
      for (int j = directed_ ? 0 : i + 1; j < n_; ++j) {
        if (i != j) out.push_back({i, j});
      }
    }
    return out;
  }

  bool has_edge(int i, int j) const noexcept {
    return (out_bits_[row_offset(i) + (j >> 6)] >> (j & 63)) & 1U;
  }
  bool has_edge(Dyad d) const noexcept { return has_edge(d.i, d.j); }

  void set_edge(int i, int j, bool value) {
    if (has_edge(i, j) == value) return;
    flip(i, j);
  }

  /// Flips the tie at d in place (and its mirror for undirected graphs).
  void toggle(Dyad d) { flip(d.i, d.j); }

  /// Copy of this graph with the tie at d flipped.
  Graph toggled(Dyad d) const {
    const Dyad c = dyad(d.i, d.j);
    Graph out = *this;
    out.flip(c.i, c.j);
    return out;
  }

  std::uint64_t edge_count() const noexcept { return edges_; }

  int out_degree(int i) const noexcept { return out_degree_[i]; }
  int in_degree(int i) const noexcept { return directed_ ? in_degree_[i] : out_degree_[i]; }
  int degree(int i) const noexcept { return out_degree_[i]; }

  /// Out-neighbour bit row (all neighbours when undirected).
  std::span<const std::uint64_t> out_row(int i) const noexcept {
    return {out_bits_.data() + row_offset(i), static_cast<std::size_t>(words_)};
  }
  /// In-neighbour bit row (all neighbours when undirected).
  std::span<const std::uint64_t> in_row(int i) const noexcept {
    const auto& bits = directed_ ? in_bits_ : out_bits_;
    return {bits.data() + row_offset(i), static_cast<std::size_t>(words_)};
  }

  /// Canonical edge list in row-major order.
  std::vector<Dyad> edges() const {
    std::vector<Dyad> out;
    out.reserve(edges_);
    for (int i = 0; i < n_; ++i) {
      for_each_bit(out_row(i), [&](int j) {
        if (directed_ || j > i) out.push_back({i, j});
      });
    }
    return out;
  }

  // --- observation mask ---

  bool observed(int i, int j) const noexcept {
    return missing_[static_cast<std::size_t>(i) * n_ + j] == 0;
  }
  bool observed(Dyad d) const noexcept { return observed(d.i, d.j); }

  /// Marks dyads as unobserved (mirrored for undirected graphs). Tie values
  /// at those dyads are kept as the working imputation.
  void apply_missing_mask(std::span<const Dyad> dyads) {
    for (const Dyad& raw : dyads) {
      const Dyad d = dyad(raw.i, raw.j);
      if (!observed(d)) continue;
      missing_[static_cast<std::size_t>(d.i) * n_ + d.j] = 1;
      if (!directed_) missing_[static_cast<std::size_t>(d.j) * n_ + d.i] = 1;
      missing_list_.push_back(d);
    }
    std::sort(missing_list_.begin(), missing_list_.end());
  }

  Graph with_missing(std::span<const Dyad> dyads) const {
    Graph out = *this;
    out.apply_missing_mask(dyads);
    return out;
  }

  const std::vector<Dyad>& missing_dyads() const noexcept { return missing_list_; }
  std::size_t missing_count() const noexcept { return missing_list_.size(); }
  bool has_missing() const noexcept { return !missing_list_.empty(); }

  /// Observed-edge count over observed-dyad count.
  double density() const {
    if (n_ < 2) throw Error(ErrorKind::data, "density needs at least two nodes");
    const std::uint64_t observed_dyads = dyad_count() - missing_list_.size();
    if (observed_dyads == 0) throw Error(ErrorKind::data, "no observed dyads");
    std::uint64_t masked_edges = 0;
    for (const Dyad& d : missing_list_) masked_edges += has_edge(d) ? 1 : 0;
    return static_cast<double>(edges_ - masked_edges) / static_cast<double>(observed_dyads);
  }

  // --- attributes and labels ---

  void set_attribute(const std::string& name, AttributeValues values) {
    if (attribute_length(values) != static_cast<std::size_t>(n_)) {
      throw Error(ErrorKind::data, "attribute '" + name + "' has " +
                                       std::to_string(attribute_length(values)) +
                                       " values for " + std::to_string(n_) + " nodes");
    }
    attributes_[name] = std::move(values);
  }

  const AttributeValues* attribute(const std::string& name) const {
    auto it = attributes_.find(name);
    return it == attributes_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, AttributeValues>& attributes() const noexcept { return attributes_; }

  void set_labels(std::vector<std::string> labels) {
    if (labels.size() != static_cast<std::size_t>(n_)) {
      throw Error(ErrorKind::data, "label count does not match node count");
    }
    labels_ = std::move(labels);
  }
  /// Node label; the decimal index when no labels were loaded.
  std::string label(int i) const { return labels_.empty() ? std::to_string(i) : labels_[i]; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Same node count, direction, ties and mask.
  bool same_state(const Graph& other) const {
    return n_ == other.n_ && directed_ == other.directed_ && out_bits_ == other.out_bits_ &&
           missing_ == other.missing_;
  }

  template <typename F>
  static void for_each_bit(std::span<const std::uint64_t> row, F&& f) {
    for (std::size_t w = 0; w < row.size(); ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        f(static_cast<int>(w * 64 + b));
        bits &= bits - 1;
      }
    }
  }

  static int common_count(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    int c = 0;
    for (std::size_t w = 0; w < a.size(); ++w) c += std::popcount(a[w] & b[w]);
    return c;
  }

  template <typename F>
  static void for_each_common(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                              F&& f) {
    for (std::size_t w = 0; w < a.size(); ++w) {
      std::uint64_t bits = a[w] & b[w];
      while (bits) {
        const int k = std::countr_zero(bits);
        f(static_cast<int>(w * 64 + k));
        bits &= bits - 1;
      }
    }
  }

 private:
  std::size_t row_offset(int i) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(words_);
  }

  void flip_bit(std::vector<std::uint64_t>& bits, int i, int j) {
    bits[row_offset(i) + (j >> 6)] ^= std::uint64_t{1} << (j & 63);
  }

  void flip(int i, int j) {
    const bool was = has_edge(i, j);
    const int step = was ? -1 : 1;
    flip_bit(out_bits_, i, j);
    if (directed_) {
      flip_bit(in_bits_, j, i);
      out_degree_[i] += step;
      in_degree_[j] += step;
    } else {
      flip_bit(out_bits_, j, i);
      out_degree_[i] += step;
      out_degree_[j] += step;
    }
    edges_ = was ? edges_ - 1 : edges_ + 1;
  }

  int n_ = 0;
  bool directed_ = false;
  int words_ = 0;
  std::vector<std::uint64_t> out_bits_;
  std::vector<std::uint64_t> in_bits_;
  std::vector<int> out_degree_;
  std::vector<int> in_degree_;
  std::uint64_t edges_ = 0;
  std::vector<std::uint8_t> missing_;
  std::vector<Dyad> missing_list_;
  std::map<std::string, AttributeValues> attributes_;
  std::vector<std::string> labels_;
};

}  // namespace bergm
