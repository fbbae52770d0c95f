#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace autoesc::rx {

struct RegexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Outcome { NoMatch, Match, Undecided };

struct MatchResult {
  Outcome outcome = Outcome::NoMatch;
  std::size_t length = 0;
  // Index 0 is the whole match; unmatched groups are empty.
  std::vector<std::string> groups;
};

struct Node;

/// Anchored backtracking matcher for the transition-table regex dialect:
/// literals, classes, `.`, `? * +`, alternation, groups, `(?:)`, `(?=)`,
/// `(?!)`, a leading `(?i)` and `{{macro}}` interpolation.
///
/// Matching never looks for the pattern later in the input; it only tries to
/// consume a prefix starting at `pos`. When `at_end` is false the text past
/// `input.size()` is unknown. If the search had to look there before settling
/// on a result, the outcome is `Undecided` and the caller should wait for more
/// input.
class Pattern {
 public:
  Pattern() = default;

  static Pattern compile(std::string_view source,
                         const std::map<std::string, std::string>& macros = {});

  MatchResult match(std::string_view input, std::size_t pos, bool at_end) const;

  const std::string& source() const { return source_; }
  const std::string& expanded() const { return expanded_; }
  bool case_insensitive() const { return icase_; }
  // True when the pattern can never consume a character (lookarounds only).
  bool zero_width() const;
  // Lower bound on the length of any match.
  std::size_t min_length() const;
  int group_count() const { return groups_; }

 private:
  std::string source_;
  std::string expanded_;
  bool icase_ = false;
  int groups_ = 0;
  std::shared_ptr<const Node> root_;
};

}  // namespace autoesc::rx
