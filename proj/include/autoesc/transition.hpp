#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autoesc/diagnostic.hpp"
#include "autoesc/regex.hpp"

namespace autoesc {

inline constexpr std::size_t kMaxFields = 4;

// One enum index per declared field; unused slots stay 0.
using Context = std::array<std::uint8_t, kMaxFields>;

struct ContextPattern {
  static constexpr int kWildcard = -1;
  std::array<int, kMaxFields> slots{kWildcard, kWildcard, kWildcard, kWildcard};

  bool matches(const Context& c) const;
  // Wildcard slots keep the current field.
  Context apply(const Context& c) const;
  friend bool operator==(const ContextPattern&, const ContextPattern&) = default;
};

enum class MarkKind { MsgStart, MsgEnd, ExprStart, ExprEnd };

struct MarkEvent {
  MarkKind kind = MarkKind::MsgStart;
  std::string id;  // MsgStart only
  friend bool operator==(const MarkEvent&, const MarkEvent&) = default;
};

struct Mark {
  MarkEvent event;
  std::size_t offset = 0;
  friend bool operator==(const Mark&, const Mark&) = default;
};

std::string_view mark_kind_name(MarkKind k);
std::optional<MarkKind> parse_mark_kind(std::string_view name);

enum class TriggerKind { Regex, Interp, Epsilon };

struct SubsidiaryAction {
  enum class Kind { Start, End };
  Kind kind = Kind::Start;
  std::string machine;  // Start only
  std::string codec;    // Start only
};

struct EventSpec {
  MarkKind kind = MarkKind::MsgStart;
  std::string id_template;  // `$1` expands to capture group 1
};

struct RuleDiagnostic {
  Severity severity = Severity::Warning;
  std::string message;
};

struct TransitionRule {
  ContextPattern pattern;
  TriggerKind trigger = TriggerKind::Epsilon;
  rx::Pattern regex;
  // Regex trigger that is a pure lookahead: fires like an epsilon rule but
  // only when the lookahead holds.
  bool guarded = false;
  std::optional<std::string> substitution;
  std::vector<EventSpec> events;
  ContextPattern successor;
  std::vector<SubsidiaryAction> actions;
  std::optional<RuleDiagnostic> diagnostic;
  int row = 0;   // 1-based index among rules
  int line = 0;  // line in the table file
};

struct EscaperRow {
  ContextPattern pattern;
  std::vector<std::string> chain;
  ContextPattern successor;
  std::string pre;
  std::string post;
  int line = 0;
};

struct FieldDecl {
  std::string name;
  std::vector<std::string> values;
};

struct TransitionTable {
  std::string name;      // machine name used by start(...)
  std::string language;  // SafeContent label of collected output
  std::string file;
  std::vector<FieldDecl> fields;
  std::map<std::string, std::string> macros;
  Context zero{};
  std::vector<ContextPattern> terminal;
  std::vector<std::pair<ContextPattern, std::string>> end_messages;
  std::vector<std::string> subsidiaries;
  std::vector<TransitionRule> rules;
  std::vector<EscaperRow> escapers;

  std::string format_context(const Context& c) const;
  std::string format_pattern(const ContextPattern& p) const;
  std::size_t context_count() const;
  std::size_t context_index(const Context& c) const;
  Context context_at(std::size_t index) const;
};

struct TableParseResult {
  std::optional<TransitionTable> table;
  Diagnostics diagnostics;
};

/// Parses the pipe-delimited table format. Field values, regexes, codec and
/// escaper names are resolved here; structural checks live in validate_table.
TableParseResult parse_table(std::string_view text, std::string file = "<table>");

/// Reports epsilon cycles, shadowed rows, undeclared subsidiaries and
/// non-progressing rows.
Diagnostics validate_table(const TransitionTable& table);

/// A root table plus every subsidiary table it can reach, with per-context
/// rule indexes precomputed. Immutable after construction.
class Machine {
 public:
  // Throws std::invalid_argument if a start(...) names an unknown table.
  Machine(std::vector<TransitionTable> tables, std::string_view root_name);

  const TransitionTable& table(int index) const { return tables_[static_cast<std::size_t>(index)]; }
  const TransitionTable& root() const { return table(root_); }
  int root_index() const { return root_; }
  int index_of(std::string_view name) const;
  const std::string& language() const { return root().language; }

  struct Index {
    std::vector<int> consuming;  // regex rules incl. guarded ones, table order
    std::vector<int> epsilon;
    std::vector<int> interp;
    int escaper = -1;
  };
  const Index& index(int table, const Context& c) const;

 private:
  std::vector<TransitionTable> tables_;
  int root_ = 0;
  std::vector<std::vector<Index>> indexes_;
};

struct Level {
  int table = 0;
  Context ctx{};
  std::string pending;  // held-back text not yet decided
  std::string codec;    // codec bridging from the enclosing level; empty at root
  friend bool operator==(const Level&, const Level&) = default;
};

/// Context value plus subsidiary stack. Errored states are absorbing.
struct MachineState {
  std::vector<Level> levels;  // [0] is the root machine
  int message_depth = 0;
  bool errored = false;
  std::string error;

  const Context& context() const { return levels.front().ctx; }
  std::size_t depth() const { return levels.size() - 1; }
  bool has_pending() const;
  friend bool operator==(const MachineState&, const MachineState&) = default;
};

MachineState zero_state(const Machine& m);

struct StepResult {
  MachineState state;
  std::string emitted;
  std::vector<Mark> marks;  // offsets into `emitted`
  Diagnostics diagnostics;
};

StepResult step_fixed(const Machine& m, const MachineState& s, std::string_view chunk, const Position& pos);

/// Resolves held-back text as if no further fixed text follows.
StepResult finish(const Machine& m, const MachineState& s, const Position& pos);

struct InterpStep {
  std::vector<std::string> escapers;  // innermost first
  std::string pre;
  std::string post;
  std::vector<Mark> pre_marks;   // offsets into `pre`
  std::vector<Mark> post_marks;  // offsets into `post`
  bool in_message = false;
  MachineState context;  // at the interpolation site, after held-back text is resolved
  MachineState successor;
  Diagnostics diagnostics;
};

InterpStep step_interp(const Machine& m, const MachineState& s, const Position& pos);

MachineState merge(const Machine& m, const MachineState& a, const MachineState& b);

struct EndCheck {
  bool ok = false;
  std::string message;
};

EndCheck is_valid_end(const Machine& m, const MachineState& s);

std::string describe_state(const Machine& m, const MachineState& s);

/// Number of transition operations performed by this process. Compiled plan
/// execution must leave it untouched.
std::uint64_t transition_operations();

}  // namespace autoesc
