#pragma once

#include <string>
#include <vector>

namespace autoesc {

struct Position {
  std::string file;
  int line = 0;
  int column = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  Position position;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

using Diagnostics = std::vector<Diagnostic>;

// `file:line:col: severity: message`
std::string format_diagnostic(const Diagnostic& d);

bool has_errors(const Diagnostics& ds);

inline Diagnostic make_error(std::string message, Position pos = {}) {
  return {Severity::Error, std::move(message), std::move(pos)};
}

inline Diagnostic make_warning(std::string message, Position pos = {}) {
  return {Severity::Warning, std::move(message), std::move(pos)};
}

}  // namespace autoesc
