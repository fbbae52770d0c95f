#include "autoesc/diagnostic.hpp"

#include <algorithm>

namespace autoesc {

std::string format_diagnostic(const Diagnostic& d) {
  std::string out = d.position.file.empty() ? std::string("<input>") : d.position.file;
  out += ':' + std::to_string(d.position.line) + ':' + std::to_string(d.position.column) + ": ";
  out += d.severity == Severity::Error ? "error: " : "warning: ";
  out += d.message;
  return out;
}

bool has_errors(const Diagnostics& ds) {
  return std::any_of(ds.begin(), ds.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace autoesc
