#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bergm/error.hpp"
#include "bergm/graph.hpp"

namespace bergm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class TermKind { edges, mutual, nodematch, nodefactor, absdiff, gwesp, idegree, odegree, degree };

inline std::string_view to_string(TermKind k) {
  switch (k) {
    case TermKind::edges: return "edges";
    case TermKind::mutual: return "mutual";
    case TermKind::nodematch: return "nodematch";
    case TermKind::nodefactor: return "nodefactor";
    case TermKind::absdiff: return "absdiff";
    case TermKind::gwesp: return "gwesp";
    case TermKind::idegree: return "idegree";
    case TermKind::odegree: return "odegree";
    case TermKind::degree: return "degree";
  }
  return "?";
}

inline std::optional<TermKind> term_kind_from(std::string_view name) {
  for (auto k : {TermKind::edges, TermKind::mutual, TermKind::nodematch, TermKind::nodefactor,
                 TermKind::absdiff, TermKind::gwesp, TermKind::idegree, TermKind::odegree,
                 TermKind::degree}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

/// Shortest round-trip decimal text for a number.
inline std::string format_number(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

struct Term {
  TermKind kind = TermKind::edges;
  std::optional<std::string> attr;
  bool diff = false;
  std::optional<std::vector<std::string>> levels;
  double decay = 0.0;
  bool fixed = false;
  std::vector<int> degrees;
  bool offset = false;

  /// Coordinate count when it does not depend on attribute levels.
  std::optional<int> known_width() const {
    switch (kind) {
      case TermKind::nodematch:
        if (!diff) return 1;
        if (levels) return static_cast<int>(levels->size());
        return std::nullopt;
      case TermKind::nodefactor:
        if (levels) return static_cast<int>(levels->size());
        return std::nullopt;
      case TermKind::idegree:
      case TermKind::odegree:
      case TermKind::degree:
        return static_cast<int>(degrees.size());
      default:
        return 1;
    }
  }

  bool dyad_independent() const {
    return kind == TermKind::edges || kind == TermKind::nodematch || kind == TermKind::nodefactor ||
           kind == TermKind::absdiff;
  }

  bool operator==(const Term&) const = default;
};

/// Parsed formula: terms in the order written.
struct ModelSpec {
  std::vector<Term> terms;

  std::optional<int> known_dim() const {
    int d = 0;
    for (const auto& t : terms) {
      auto w = t.known_width();
      if (!w) return std::nullopt;
      d += *w;
    }
    return d;
  }

  bool operator==(const ModelSpec&) const = default;
};

namespace detail {

struct ArgValue {
  enum class Kind { number, string, boolean, range, vector } kind = Kind::number;
  double number = 0.0;
  std::string text;
  bool boolean = false;
  int lo = 0, hi = 0;
  std::vector<ArgValue> items;
};

struct Arg {
  std::optional<std::string> key;
  ArgValue value;
  std::size_t pos = 0;
};

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  ModelSpec parse() {
    // Everything left of '~' names the response network and is ignored.
    const auto tilde = text_.find('~');
    if (tilde != std::string_view::npos) pos_ = tilde + 1;
    ModelSpec spec;
    spec.terms.push_back(term(false));
    skip_ws();
    while (pos_ < text_.size()) {
      expect('+');
      spec.terms.push_back(term(false));
      skip_ws();
    }
    return spec;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw Error(ErrorKind::parse, "formula position " + std::to_string(at + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but reached end of formula", pos_);
    if (text_[pos_] != c) fail(std::string("expected '") + c + "', found '" + text_[pos_] + "'", pos_);
    ++pos_;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.')) {
      ++pos_;
    }
    if (start == pos_) {
      if (pos_ >= text_.size()) fail("expected a term name but reached end of formula", pos_);
      fail(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' || text_[pos_] == 'e' ||
            text_[pos_] == 'E' ||
            ((text_[pos_] == '-' || text_[pos_] == '+') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    std::string tok(text_.substr(start, pos_ - start));
    if (!tok.empty() && tok.front() == '+') tok.erase(0, 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) fail("malformed number", start);
    return v;
  }

  ArgValue value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected a value but reached end of formula", pos_);
    const char c = text_[pos_];
    ArgValue v;
    if (c == '"' || c == '\'') {
      const std::size_t start = pos_++;
      const auto end = text_.find(c, pos_);
      if (end == std::string_view::npos) fail("unterminated string", start);
      v.kind = ArgValue::Kind::string;
      v.text = std::string(text_.substr(pos_, end - pos_));
      pos_ = end + 1;
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      const std::size_t start = pos_;
      v.number = number();
      if (peek(':')) {
        ++pos_;
        const double hi = number();
        if (v.number != std::floor(v.number) || hi != std::floor(hi)) fail("range bounds must be integers", start);
        v.kind = ArgValue::Kind::range;
        v.lo = static_cast<int>(v.number);
        v.hi = static_cast<int>(hi);
        return v;
      }
      v.kind = ArgValue::Kind::number;
      return v;
    }
    const std::size_t start = pos_;
    const std::string id = identifier();
    if (id == "TRUE" || id == "T") {
      v.kind = ArgValue::Kind::boolean;
      v.boolean = true;
      return v;
    }
    if (id == "FALSE" || id == "F") {
      v.kind = ArgValue::Kind::boolean;
      v.boolean = false;
      return v;
    }
    if (id == "c" && peek('(')) {
      ++pos_;
      v.kind = ArgValue::Kind::vector;
      if (!peek(')')) {
        v.items.push_back(value());
        while (peek(',')) {
          ++pos_;
          v.items.push_back(value());
        }
      }
      expect(')');
      return v;
    }
    fail("unrecognised value '" + id + "'", start);
  }

  std::vector<Arg> args() {
    std::vector<Arg> out;
    if (!peek('(')) return out;
    ++pos_;
    if (peek(')')) {
      ++pos_;
      return out;
    }
    while (true) {
      skip_ws();
      Arg a;
      a.pos = pos_;
      // key = value ?
      const std::size_t save = pos_;
      if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        const std::string id = identifier();
        if (peek('=')) {
          ++pos_;
          a.key = id;
        } else {
          pos_ = save;
        }
      }
      a.value = value();
      out.push_back(std::move(a));
      if (peek(',')) {
        ++pos_;
        continue;
      }
      expect(')');
      return out;
    }
  }

  static std::vector<int> degree_list(const ArgValue& v, FormulaParser& p, std::size_t at) {
    std::vector<int> out;
    auto one = [&](const ArgValue& x) {
      if (x.kind == ArgValue::Kind::number) {
        if (x.number != std::floor(x.number) || x.number < 0) p.fail("degree values must be nonnegative integers", at);
        out.push_back(static_cast<int>(x.number));
      } else if (x.kind == ArgValue::Kind::range) {
        if (x.lo < 0 || x.hi < x.lo) p.fail("degree range must be a:b with 0 <= a <= b", at);
        for (int k = x.lo; k <= x.hi; ++k) out.push_back(k);
      } else {
        p.fail("degree argument must be an integer, a range a:b or c(...)", at);
      }
    };
    if (v.kind == ArgValue::Kind::vector) {
      for (const auto& x : v.items) one(x);
    } else {
      one(v);
    }
    if (out.empty()) p.fail("empty degree list", at);
    return out;
  }

  static std::string level_text(const ArgValue& v, FormulaParser& p, std::size_t at) {
    if (v.kind == ArgValue::Kind::string) return v.text;
    if (v.kind == ArgValue::Kind::number) return format_number(v.number);
    p.fail("levels must be strings or numbers", at);
  }

  Term term(bool inside_offset) {
    skip_ws();
    const std::size_t start = pos_;
    const std::string name = identifier();
    if (name == "offset") {
      if (inside_offset) fail("nested offset()", start);
      expect('(');
      Term t = term(true);
      expect(')');
      t.offset = true;
      return t;
    }
    const auto kind = term_kind_from(name);
    if (!kind) fail("unknown term '" + name + "'", start);
    Term t;
    t.kind = *kind;
    const auto list = args();

    // positional slots per term, in order
    std::vector<std::string> slots;
    switch (t.kind) {
      case TermKind::edges:
      case TermKind::mutual: break;
      case TermKind::nodematch: slots = {"attr", "diff"}; break;
      case TermKind::nodefactor:
      case TermKind::absdiff: slots = {"attr"}; break;
      case TermKind::gwesp: slots = {"decay", "fixed"}; break;
      case TermKind::idegree:
      case TermKind::odegree:
      case TermKind::degree: slots = {"d"}; break;
    }
    std::set<std::string> allowed(slots.begin(), slots.end());
    if (t.kind == TermKind::nodematch || t.kind == TermKind::nodefactor) allowed.insert("levels");
    std::map<std::string, std::string> aliases{{"attrname", "attr"}, {"alpha", "decay"}};

    std::size_t positional = 0;
    std::set<std::string> seen;
    for (const auto& a : list) {
      std::string key;
      if (a.key) {
        key = aliases.count(*a.key) ? aliases[*a.key] : *a.key;
        if (!allowed.count(key)) fail("unknown argument '" + *a.key + "' for term " + name, a.pos);
      } else {
        if (positional >= slots.size()) fail("too many arguments for term " + name, a.pos);
        key = slots[positional++];
      }
      if (!seen.insert(key).second) fail("argument '" + key + "' given twice", a.pos);
      const ArgValue& v = a.value;
      if (key == "attr") {
        if (v.kind != ArgValue::Kind::string) fail("attribute name must be a quoted string", a.pos);
        t.attr = v.text;
      } else if (key == "diff" || key == "fixed") {
        if (v.kind != ArgValue::Kind::boolean) fail("'" + key + "' must be TRUE or FALSE", a.pos);
        (key == "diff" ? t.diff : t.fixed) = v.boolean;
      } else if (key == "decay") {
        if (v.kind != ArgValue::Kind::number || !(v.number >= 0.0)) fail("decay must be a nonnegative number", a.pos);
        t.decay = v.number;
      } else if (key == "d") {
        t.degrees = degree_list(v, *this, a.pos);
      } else if (key == "levels") {
        std::vector<std::string> lv;
        if (v.kind == ArgValue::Kind::vector) {
          for (const auto& x : v.items) lv.push_back(level_text(x, *this, a.pos));
        } else {
          lv.push_back(level_text(v, *this, a.pos));
        }
        if (lv.empty()) fail("empty level set", a.pos);
        t.levels = std::move(lv);
      }
    }
    const bool needs_attr =
        t.kind == TermKind::nodematch || t.kind == TermKind::nodefactor || t.kind == TermKind::absdiff;
    if (needs_attr && !t.attr) fail("term " + name + " needs an attribute name", start);
    if ((t.kind == TermKind::idegree || t.kind == TermKind::odegree || t.kind == TermKind::degree) &&
        t.degrees.empty()) {
      fail("term " + name + " needs a degree argument", start);
    }
    if (t.kind == TermKind::gwesp) {
      if (!seen.count("decay")) fail("gwesp needs a decay value", start);
      if (!t.fixed) fail("gwesp requires fixed = TRUE (estimated decay is not supported)", start);
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `[lhs ~] term (+ term)*`. Checks the model dimension when it can be
/// known without attribute data.
inline ModelSpec parse_formula(std::string_view text) {
  ModelSpec spec = detail::FormulaParser(text).parse();
  if (auto d = spec.known_dim(); d && *d < 2) {
    throw Error(ErrorKind::model, "model dimension " + std::to_string(*d) +
                                      " < 2: at least two statistics are required");
  }
  return spec;
}

inline std::string to_string(const Term& t) {
  std::string s(to_string(t.kind));
  std::vector<std::string> args;
  auto quote = [](const std::string& x) { return "\"" + x + "\""; };
  switch (t.kind) {
    case TermKind::edges:
    case TermKind::mutual: break;
    case TermKind::nodematch:
      args.push_back(quote(*t.attr));
      if (t.diff) args.push_back("diff = TRUE");
      break;
    case TermKind::nodefactor:
    case TermKind::absdiff: args.push_back(quote(*t.attr)); break;
    case TermKind::gwesp:
      args.push_back(format_number(t.decay));
      args.push_back("fixed = TRUE");
      break;
    case TermKind::idegree:
    case TermKind::odegree:
    case TermKind::degree: {
      bool contiguous = true;
      for (std::size_t k = 1; k < t.degrees.size(); ++k) contiguous &= t.degrees[k] == t.degrees[k - 1] + 1;
      if (t.degrees.size() == 1) {
        args.push_back(std::to_string(t.degrees[0]));
      } else if (contiguous) {
        args.push_back(std::to_string(t.degrees.front()) + ":" + std::to_string(t.degrees.back()));
      } else {
        std::string v = "c(";
        for (std::size_t k = 0; k < t.degrees.size(); ++k) v += (k ? ", " : "") + std::to_string(t.degrees[k]);
        args.push_back(v + ")");
      }
      break;
    }
  }
  if (t.levels) {
    std::string v = "levels = c(";
    for (std::size_t k = 0; k < t.levels->size(); ++k) v += (k ? ", " : "") + quote((*t.levels)[k]);
    args.push_back(v + ")");
  }
  if (!args.empty()) {
    s += "(";
    for (std::size_t k = 0; k < args.size(); ++k) s += (k ? ", " : "") + args[k];
    s += ")";
  }
  return t.offset ? "offset(" + s + ")" : s;
}

inline std::string to_string(const ModelSpec& spec) {
  std::string s;
  for (std::size_t k = 0; k < spec.terms.size(); ++k) s += (k ? " + " : "") + to_string(spec.terms[k]);
  return s;
}

/// A term resolved against a network's attributes.
struct BoundTerm {
  Term term;
  int first = 0;
  int width = 0;
  /// nodematch: level id per node (-1 when outside the level set).
  /// nodefactor: coordinate offset per node (-1 for the baseline or excluded levels).
  std::vector<int> node_level;
  std::vector<double> node_value;  // absdiff
  std::vector<std::string> level_names;
  // gwesp
  double weight_base = 0.0;  // 1 - exp(-decay)
  double weight_scale = 0.0; // exp(decay)
};

/// A formula checked against a network: attributes resolved, levels expanded,
/// coordinates named. Offset coordinates keep fixed coefficients and are
/// excluded from the free (estimated) parameter vector.
class Model {
 public:
  int dim() const noexcept { return static_cast<int>(names_.size()); }
  int free_dim() const noexcept { return static_cast<int>(free_index_.size()); }
  int nodes() const noexcept { return nodes_; }
  bool directed() const noexcept { return directed_; }

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::vector<BoundTerm>& terms() const noexcept { return terms_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<std::string> free_names() const {
    std::vector<std::string> out;
    for (int c : free_index_) out.push_back(names_[c]);
    return out;
  }

  bool is_offset(int coord) const { return offset_mask_[coord]; }
  const std::vector<int>& free_index() const noexcept { return free_index_; }
  const std::vector<int>& offset_index() const noexcept { return offset_index_; }
  const Vector& offset_values() const noexcept { return offset_values_; }
  bool has_offsets() const noexcept { return !offset_index_.empty(); }

  bool dyad_independent() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const BoundTerm& t) { return t.term.dyad_independent(); });
  }

  /// Mask of coordinates whose change statistic never depends on other ties.
  std::vector<bool> independent_coordinates() const {
    std::vector<bool> out(dim(), false);
    for (const auto& t : terms_) {
      for (int k = 0; k < t.width; ++k) out[t.first + k] = t.term.dyad_independent();
    }
    return out;
  }

  /// Inserts offset coefficients into a free parameter vector.
  Vector full_theta(const Vector& free) const {
    if (free.size() != free_dim()) {
      throw Error(ErrorKind::dimension, "parameter vector has length " + std::to_string(free.size()) +
                                            ", model has " + std::to_string(free_dim()) + " free coordinates");
    }
    Vector full(dim());
    for (int k = 0; k < free_dim(); ++k) full[free_index_[k]] = free[k];
    for (std::size_t k = 0; k < offset_index_.size(); ++k) full[offset_index_[k]] = offset_values_[k];
    return full;
  }

  Vector free_part(const Vector& full) const {
    Vector out(free_dim());
    for (int k = 0; k < free_dim(); ++k) out[k] = full[free_index_[k]];
    return out;
  }

  Matrix free_block(const Matrix& full) const {
    Matrix out(free_dim(), free_dim());
    for (int a = 0; a < free_dim(); ++a)
      for (int b = 0; b < free_dim(); ++b) out(a, b) = full(free_index_[a], free_index_[b]);
    return out;
  }

 private:
  friend Model validate(const ModelSpec&, const Graph&, std::span<const double>);

  ModelSpec spec_;
  std::vector<BoundTerm> terms_;
  std::vector<std::string> names_;
  std::vector<bool> offset_mask_;
  std::vector<int> free_index_;
  std::vector<int> offset_index_;
  Vector offset_values_;
  int nodes_ = 0;
  bool directed_ = false;
};

namespace detail {

struct Levels {
  std::vector<std::string> names;  // sorted order
  std::vector<int> node_level;     // index into names per node
};

inline Levels attribute_levels(const AttributeValues& values) {
  Levels out;
  if (const auto* num = std::get_if<std::vector<double>>(&values)) {
    std::vector<double> uniq(num->begin(), num->end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (double v : uniq) out.names.push_back(format_number(v));
    for (double v : *num) {
      out.node_level.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v) - uniq.begin()));
    }
  } else {
    const auto& str = std::get<std::vector<std::string>>(values);
    std::vector<std::string> uniq(str.begin(), str.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    out.names = uniq;
    for (const auto& v : str) {
      out.node_level.push_back(static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), v) - uniq.begin()));
    }
  }
  return out;
}

/// Maps requested level labels onto observed level ids (numeric labels are
/// compared by value).
inline std::vector<int> resolve_levels(const std::vector<std::string>& requested, const Levels& observed,
                                       const AttributeValues& values, const std::string& attr) {
  const bool numeric = std::holds_alternative<std::vector<double>>(values);
  std::vector<int> ids;
  for (const auto& want : requested) {
    int found = -1;
    for (std::size_t k = 0; k < observed.names.size(); ++k) {
      bool eq = observed.names[k] == want;
      if (!eq && numeric) {
        double a = 0, b = 0;
        auto r1 = std::from_chars(want.data(), want.data() + want.size(), a);
        auto r2 = std::from_chars(observed.names[k].data(), observed.names[k].data() + observed.names[k].size(), b);
        eq = r1.ec == std::errc() && r2.ec == std::errc() && a == b;
      }
      if (eq) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0) throw Error(ErrorKind::model, "level '" + want + "' not observed for attribute '" + attr + "'");
    if (std::find(ids.begin(), ids.end(), found) != ids.end()) {
      throw Error(ErrorKind::model, "level '" + want + "' listed twice for attribute '" + attr + "'");
    }
    ids.push_back(found);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace detail

/// Resolves a parsed formula against a network. `offset_values` supplies one
/// finite coefficient per offset coordinate, in coordinate order.
inline Model validate(const ModelSpec& spec, const Graph& g, std::span<const double> offset_values = {}) {
  Model m;
  m.spec_ = spec;
  m.nodes_ = g.size();
  m.directed_ = g.directed();
  int next = 0;
  for (const Term& t : spec.terms) {
    BoundTerm b;
    b.term = t;
    b.first = next;
    const std::string kind(to_string(t.kind));
    if (t.kind == TermKind::mutual || t.kind == TermKind::idegree || t.kind == TermKind::odegree) {
      if (!g.directed()) throw Error(ErrorKind::model, "term " + kind + " requires a directed network");
    }
    if (t.kind == TermKind::degree && g.directed()) {
      throw Error(ErrorKind::model, "term degree requires an undirected network (use idegree/odegree)");
    }
    const AttributeValues* values = nullptr;
    if (t.attr) {
      values = g.attribute(*t.attr);
      if (!values) throw Error(ErrorKind::model, "attribute '" + *t.attr + "' not found on the network");
    }
    switch (t.kind) {
      case TermKind::edges:
      case TermKind::mutual:
        b.width = 1;
        m.names_.push_back(kind);
        break;
      case TermKind::nodematch: {
        const auto lv = detail::attribute_levels(*values);
        std::vector<int> ids;
        if (t.levels) {
          ids = detail::resolve_levels(*t.levels, lv, *values, *t.attr);
        } else {
          for (std::size_t k = 0; k < lv.names.size(); ++k) ids.push_back(static_cast<int>(k));
        }
        if (ids.empty()) throw Error(ErrorKind::model, "nodematch(\"" + *t.attr + "\") has an empty level set");
        std::vector<int> slot(lv.names.size(), -1);
        for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = static_cast<int>(k);
        for (int lvl : lv.node_level) b.node_level.push_back(slot[lvl]);
        for (int id : ids) b.level_names.push_back(lv.names[id]);
        if (t.diff) {
          b.width = static_cast<int>(ids.size());
          for (const auto& name : b.level_names) m.names_.push_back("nodematch." + *t.attr + "." + name);
        } else {
          b.width = 1;
          m.names_.push_back("nodematch." + *t.attr);
        }
        break;
      }
      case TermKind::nodefactor: {
        const auto lv = detail::attribute_levels(*values);
        std::vector<int> ids;
        if (t.levels) {
          ids = detail::resolve_levels(*t.levels, lv, *values, *t.attr);
        } else {
          // first sorted level is the baseline
          for (std::size_t k = 1; k < lv.names.size(); ++k) ids.push_back(static_cast<int>(k));
        }
        if (ids.empty()) {
          throw Error(ErrorKind::model, "nodefactor(\"" + *t.attr + "\") has an empty level set");
        }
        std::vector<int> slot(lv.names.size(), -1);
        for (std::size_t k = 0; k < ids.size(); ++k) slot[ids[k]] = static_cast<int>(k);
        for (int lvl : lv.node_level) b.node_level.push_back(slot[lvl]);
        for (int id : ids) b.level_names.push_back(lv.names[id]);
        b.width = static_cast<int>(ids.size());
        for (const auto& name : b.level_names) m.names_.push_back("nodefactor." + *t.attr + "." + name);
        break;
      }
      case TermKind::absdiff: {
        const auto* num = std::get_if<std::vector<double>>(values);
        if (!num) throw Error(ErrorKind::model, "absdiff(\"" + *t.attr + "\") needs a numeric attribute");
        b.node_value = *num;
        b.width = 1;
        m.names_.push_back("absdiff." + *t.attr);
        break;
      }
      case TermKind::gwesp:
        b.width = 1;
        b.weight_base = 1.0 - std::exp(-t.decay);
        b.weight_scale = std::exp(t.decay);
        m.names_.push_back("gwesp.fixed." + format_number(t.decay));
        break;
      case TermKind::idegree:
      case TermKind::odegree:
      case TermKind::degree:
        b.width = static_cast<int>(t.degrees.size());
        for (int k : t.degrees) m.names_.push_back(kind + std::to_string(k));
        break;
    }
    for (int k = 0; k < b.width; ++k) m.offset_mask_.push_back(t.offset);
    next += b.width;
    m.terms_.push_back(std::move(b));
  }
  if (m.dim() < 2) {
    throw Error(ErrorKind::model, "model dimension " + std::to_string(m.dim()) +
                                      " < 2: at least two statistics are required");
  }
  for (int c = 0; c < m.dim(); ++c) (m.offset_mask_[c] ? m.offset_index_ : m.free_index_).push_back(c);
  if (offset_values.size() != m.offset_index_.size()) {
    throw Error(ErrorKind::dimension, "model has " + std::to_string(m.offset_index_.size()) +
                                          " offset coordinates but " + std::to_string(offset_values.size()) +
                                          " offset coefficients were given");
  }
  m.offset_values_ = Vector(static_cast<Eigen::Index>(offset_values.size()));
  for (std::size_t k = 0; k < offset_values.size(); ++k) {
    if (!std::isfinite(offset_values[k])) {
      throw Error(ErrorKind::model, "offset coefficients must be finite; use a large magnitude such as 100");
    }
    m.offset_values_[static_cast<Eigen::Index>(k)] = offset_values[k];
  }
  if (m.free_dim() < 1) throw Error(ErrorKind::model, "every coordinate is an offset; nothing to estimate");
  return m;
}

}  // namespace bergm
