#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"

namespace bergm::io {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Splits on ',' when present, else on '\t' when present, else on whitespace.
inline std::vector<std::string> split_fields(const std::string& line, char delim = 0) {
  if (delim == 0) {
    delim = line.find(',') != std::string::npos ? ',' : (line.find('\t') != std::string::npos ? '\t' : ' ');
  }
  std::vector<std::string> out;
  if (delim == ' ') {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(trim(tok));
    return out;
  }
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

struct AttributeTable {
  std::vector<std::string> labels;
  std::map<std::string, AttributeValues> columns;
};

/// Reads a delimited table: header row, first column node label, remaining
/// columns attributes typed numeric-if-all-parse.
inline AttributeTable read_attributes(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw Error(ErrorKind::data, "attribute file is empty: " + path);
  const auto header = split_fields(lines.front());
  if (header.size() < 2) throw Error(ErrorKind::data, "attribute file needs a label column and at least one attribute: " + path);
  std::vector<std::vector<std::string>> cols(header.size() - 1);
  AttributeTable table;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split_fields(lines[r]);
    if (f.size() != header.size()) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(r + 1) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(f.size()));
    }
    table.labels.push_back(f[0]);
    for (std::size_t c = 1; c < f.size(); ++c) cols[c - 1].push_back(f[c]);
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::vector<double> nums;
    bool numeric = true;
    for (const auto& v : cols[c]) {
      auto x = parse_number(v);
      if (!x) {
        numeric = false;
        break;
      }
      nums.push_back(*x);
    }
    if (numeric) {
      table.columns[header[c + 1]] = std::move(nums);
    } else {
      table.columns[header[c + 1]] = std::move(cols[c]);
    }
  }
  return table;
}

struct PairReadOptions {
  /// Label -> index map (from an attribute file). When empty, tokens must be
  /// integers offset by `index_base`.
  const std::map<std::string, int>* label_index = nullptr;
  int index_base = 0;
};

/// Reads `i j` or `i,j` pairs. A first line that does not resolve to a pair
/// of nodes is treated as a header.
inline std::vector<std::pair<int, int>> read_pairs(const std::string& path, const PairReadOptions& opt = {}) {
  const auto lines = read_lines(path);
  std::vector<std::pair<int, int>> pairs;
  auto resolve = [&](const std::string& tok) -> std::optional<int> {
    if (opt.label_index) {
      auto it = opt.label_index->find(tok);
      if (it == opt.label_index->end()) return std::nullopt;
      return it->second;
    }
    auto v = parse_integer(tok);
    if (!v) return std::nullopt;
    return static_cast<int>(*v - opt.index_base);
  };
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto f = split_fields(lines[r]);
    std::optional<int> a, b;
    if (f.size() >= 2) {
      a = resolve(f[0]);
      b = resolve(f[1]);
    }
    if (!a || !b) {
      if (r == 0) continue;  // header
      throw Error(ErrorKind::parse, path + ":" + std::to_string(r + 1) + ": cannot read node pair from '" +
                                        trim(lines[r]) + "'");
    }
    pairs.emplace_back(*a, *b);
  }
  return pairs;
}

struct NetworkFiles {
  std::string edges;
  std::string attributes;  // optional
  std::string missing;     // optional
  std::optional<int> n;
  bool directed = false;
  int index_base = 0;
};

/// Loads a network from an edge list plus optional attribute and missing-dyad
/// files. With an attribute file, node order and count come from its rows.
inline Graph load_network(const NetworkFiles& files, std::vector<std::string>* warnings = nullptr) {
  std::optional<AttributeTable> attrs;
  std::map<std::string, int> index;
  PairReadOptions opt;
  opt.index_base = files.index_base;
  if (!files.attributes.empty()) {
    attrs = read_attributes(files.attributes);
    for (std::size_t i = 0; i < attrs->labels.size(); ++i) {
      if (!index.emplace(attrs->labels[i], static_cast<int>(i)).second) {
        throw Error(ErrorKind::data, "duplicate node label '" + attrs->labels[i] + "' in " + files.attributes);
      }
    }
    opt.label_index = &index;
  }
  const auto pairs = read_pairs(files.edges, opt);
  int n = 0;
  if (attrs) {
    n = static_cast<int>(attrs->labels.size());
    if (files.n && *files.n != n) {
      throw Error(ErrorKind::dimension, "--n=" + std::to_string(*files.n) + " but attribute file lists " +
                                            std::to_string(n) + " nodes");
    }
  } else if (files.n) {
    n = *files.n;
  } else {
    for (const auto& [a, b] : pairs) n = std::max({n, a + 1, b + 1});
  }
  Graph g = Graph::from_edge_list(pairs, n, files.directed, warnings);
  if (attrs) {
    g.set_labels(attrs->labels);
    for (auto& [name, values] : attrs->columns) g.set_attribute(name, values);
  }
  if (!files.missing.empty()) {
    const auto miss = read_pairs(files.missing, opt);
    std::vector<Dyad> dyads;
    for (const auto& [a, b] : miss) dyads.push_back(g.dyad(a, b));
    g.apply_missing_mask(dyads);
  }
  return g;
}

inline void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write file: " + path);
  out << "from,to\n";
  for (const Dyad& d : g.edges()) out << g.label(d.i) << ',' << g.label(d.j) << '\n';
}

}  // namespace bergm::io
