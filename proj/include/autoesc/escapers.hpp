#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "autoesc/value.hpp"

namespace autoesc {

/// Raised when an escaper refuses a value (fail-stop), e.g. a list handed to
/// a text escaper or SafeContent handed to the JSON escaper.
struct EscapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using EscaperFn = std::string (*)(const Value&);

struct Escaper {
  std::string_view name;
  EscaperFn apply;
  // SafeContent labels passed through verbatim.
  std::vector<std::string_view> passthrough;
};

const Escaper* find_escaper(std::string_view name);
std::vector<std::string_view> escaper_names();

// Innermost first; each escaper after the first sees the previous output as
// plain text.
std::string apply_chain(std::span<const Escaper* const> chain, const Value& v);
std::string apply_chain(std::span<const std::string> names, const Value& v);

// Numbers in shortest round-trip form, booleans as true/false, SafeContent as
// its raw text. Lists and records throw EscapeError.
std::string stringify(const Value& v);

std::string escape_pcdata(const Value& v);
std::string escape_html_attr(const Value& v);
std::string filter_url_prefix(const Value& v);
std::string escape_url_component(const Value& v);
std::string escape_json_value(const Value& v);
std::string escape_css_string(const Value& v);
std::string identity_text(const Value& v);

inline constexpr std::string_view kBlockedUrl = "about:invalid#blocked";

}  // namespace autoesc
