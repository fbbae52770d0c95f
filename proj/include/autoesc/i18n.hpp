#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autoesc/transition.hpp"

namespace autoesc {

struct I18nError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A message located in a rendered buffer.
struct MessageSpan {
  std::string id;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<std::pair<std::size_t, std::size_t>> exprs;  // interpolation spans, in order
};

/// Message id -> reference text with `{0}`, `{1}`, ... placeholders. Literal
/// braces in message text are doubled.
using MessageBundle = std::map<std::string, std::string>;

struct Extraction {
  MessageBundle bundle;
  std::vector<MessageSpan> spans;
};

// Throws I18nError on unbalanced or misplaced marks.
Extraction extract_messages(std::string_view buffer, const std::vector<Mark>& marks);

// Reference pattern for one span.
std::string reference_pattern(std::string_view buffer, const MessageSpan& span);

/// Re-renders one message from `translated`, inserting the original
/// (already escaped) interpolation bytes at the translated placeholder
/// positions. Placeholders must be a permutation of the span's.
std::string apply_translation(std::string_view buffer, const MessageSpan& span, std::string_view translated);

/// Replaces every message that has an entry in `translations`.
std::string translate_buffer(std::string_view buffer, const std::vector<Mark>& marks,
                             const MessageBundle& translations);

std::string bundle_to_json(const MessageBundle& bundle);
MessageBundle bundle_from_json(std::string_view json_text);

}  // namespace autoesc
