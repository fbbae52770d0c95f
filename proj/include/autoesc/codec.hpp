#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "autoesc/diagnostic.hpp"
#include "autoesc/regex.hpp"

namespace autoesc {

/// Bridges an enclosing content language and a subsidiary one: fixed text is
/// decoded before the subsidiary sees it, and whatever the subsidiary emits is
/// re-encoded for the enclosing language.
struct Codec {
  std::string name;
  std::string (*decode)(std::string_view, Diagnostics* warnings);
  std::string (*encode)(std::string_view);
  // Multi-character escape sequences the enclosing machine must forward as a
  // unit (e.g. `&amp;`). Absent for codecs without such sequences.
  std::optional<rx::Pattern> token;
};

const Codec* find_codec(std::string_view name);

// Throws std::invalid_argument on an unknown codec name.
std::string codec_decode(std::string_view name, std::string_view text, Diagnostics* warnings = nullptr);
std::string codec_encode(std::string_view name, std::string_view text);

std::string html_decode(std::string_view text, Diagnostics* warnings = nullptr);
std::string html_encode(std::string_view text);
std::string css_string_decode(std::string_view text, Diagnostics* warnings = nullptr);
std::string css_string_encode(std::string_view text);

void append_utf8(std::string& out, char32_t cp);

}  // namespace autoesc
