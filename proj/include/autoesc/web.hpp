#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "autoesc/diagnostic.hpp"
#include "autoesc/transition.hpp"

namespace autoesc {

/// Table files could not be read, parsed or validated.
struct MachineLoadError : std::runtime_error {
  MachineLoadError(const std::string& what, Diagnostics ds) : std::runtime_error(what), diagnostics(std::move(ds)) {}
  Diagnostics diagnostics;
};

// Contents of a table file compiled into the library ("html.tt", ...), or
// empty if there is no such file.
std::string_view builtin_table(std::string_view file);

/// Loads a table file and the subsidiary tables it declares, recursively.
/// With an empty `tables_dir` the built-in copies are used.
std::shared_ptr<const Machine> load_machine(std::string_view root_file, const std::string& tables_dir = {});

std::shared_ptr<const Machine> html_machine(const std::string& tables_dir = {});
std::shared_ptr<const Machine> text_machine(const std::string& tables_dir = {});

/// Machine for a template tag: `html`, or `text`/`cackle` for plain text.
/// Returns null for unknown tags.
std::shared_ptr<const Machine> machine_for_tag(std::string_view tag, const std::string& tables_dir = {});

}  // namespace autoesc
