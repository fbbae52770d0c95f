#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autoesc/diagnostic.hpp"
#include "autoesc/template.hpp"
#include "autoesc/transition.hpp"
#include "autoesc/value.hpp"

namespace autoesc {

struct BindingsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Named values visible to interpolation paths, plus loop variables.
class Bindings {
 public:
  Bindings() = default;
  explicit Bindings(Value::Record root) : root_(std::move(root)) {}

  // Null if any path segment is missing or not a record.
  const Value* lookup(std::string_view path) const;

  void push(std::string name, const Value* v) { scopes_.emplace_back(std::move(name), v); }
  void pop() { scopes_.pop_back(); }
  const Value::Record& root() const { return root_; }

 private:
  Value::Record root_;
  std::vector<std::pair<std::string, const Value*>> scopes_;
};

/// Parses a JSON object. `{"$safe": label, "content": text}` becomes
/// SafeContent; this form is trusted input. JSON null means absent.
Bindings bindings_from_json(std::string_view json_text);
Value value_from_json_text(std::string_view json_text);

struct Collector {
  std::string buffer;
  std::vector<Mark> marks;

  void append(std::string_view text, const std::vector<Mark>& relative_marks);
  void mark(MarkKind kind) { marks.push_back({{kind, {}}, buffer.size()}); }
};

struct Collected {
  std::optional<Value> value;  // absent when the accumulator errored
  std::vector<Mark> marks;
  Diagnostics diagnostics;
};

/// Feeds fixed chunks and untrusted values through a machine, left to right.
class Accumulator {
 public:
  explicit Accumulator(std::shared_ptr<const Machine> machine);

  Diagnostics append_fixed(std::string_view text, const Position& pos = {});
  Diagnostics append_unsafe(const Value& v, const Position& pos = {});
  Collected collected(const Position& pos = {}) const;

  const MachineState& state() const { return state_; }
  const Collector& collector() const { return collector_; }
  bool errored() const { return state_.errored; }

 private:
  std::shared_ptr<const Machine> machine_;
  MachineState state_;
  Collector collector_;

  Diagnostics fail(std::string message, const Position& pos);
};

struct RenderResult {
  std::optional<Value> value;  // absent on any error
  std::vector<Mark> marks;
  Diagnostics diagnostics;
};

RenderResult render(const AppendProgram& program, const Bindings& bindings, std::shared_ptr<const Machine> machine);

}  // namespace autoesc
