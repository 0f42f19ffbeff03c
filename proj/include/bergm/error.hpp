#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bergm {

// Coarse failure classes; the CLI prints the category name and maps each one
// to its own exit status.
enum class ErrorKind {
  io,
  parse,
  model,
  dimension,
  data,
  numeric,
  usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::model: return "model";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::data: return "data";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bergm
