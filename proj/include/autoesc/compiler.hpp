#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "autoesc/diagnostic.hpp"
#include "autoesc/escapers.hpp"
#include "autoesc/runtime.hpp"
#include "autoesc/template.hpp"
#include "autoesc/transition.hpp"

namespace autoesc {

struct NodeAnnotation {
  std::optional<MachineState> in;
  std::optional<MachineState> out;
  // AppendFixed and Collected: text emitted for this node.
  std::string emitted;
  std::vector<Mark> marks;
  // AppendUnsafe.
  MachineState site;  // context at the interpolation site
  std::vector<std::string> escapers;
  std::string pre, post;
  std::vector<Mark> pre_marks, post_marks;
  bool in_message = false;
};

struct AnnotatedProgram {
  AppendProgram program;
  std::vector<NodeAnnotation> nodes;  // parallel to program.nodes
  int iterations = 0;                 // sweeps that changed some state
  bool end_ok = false;
  std::string end_message;
  bool blocked = false;  // an Error diagnostic was issued
};

struct PropagateResult {
  AnnotatedProgram annotated;
  Diagnostics diagnostics;
};

/// Forward context propagation over the program's control-flow graph, merging
/// at joins and loop heads until no state changes.
PropagateResult propagate(const AppendProgram& program, const Machine& machine);

struct PlanNode {
  enum class Kind { Lit, Interp, For, If };
  Kind kind = Kind::Lit;
  std::string text;         // Lit
  std::vector<Mark> marks;  // Lit, offsets into text
  std::string path;         // Interp value, For iterable, If condition
  std::vector<std::string> escapers;  // Interp, innermost first
  std::vector<const Escaper*> resolved;
  bool expr_marks = false;  // Interp inside a translatable message
  std::string var;          // For
  std::vector<PlanNode> body;       // For body, If then-branch
  std::vector<PlanNode> else_body;  // If else-branch
};

/// Erased program: literal text and statically chosen escaper chains.
struct CompiledPlan {
  std::string language;
  std::vector<PlanNode> body;
};

struct CompileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws CompileError if propagation issued errors.
CompiledPlan erase(const AnnotatedProgram& annotated, const std::string& language);

std::string plan_to_json(const CompiledPlan& plan);
// Throws CompileError on malformed documents or unknown escaper names.
CompiledPlan plan_from_json(std::string_view json_text);

struct PlanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PlanOutput {
  Value value;
  std::vector<Mark> marks;
  // Byte ranges of interpolated values in the output, when requested.
  std::vector<std::pair<std::size_t, std::size_t>> interp_spans;
};

/// Runs a plan. Never touches a transition table. Throws PlanError.
PlanOutput execute_plan(const CompiledPlan& plan, const Bindings& bindings, bool record_spans = false);

struct BatchResult {
  std::optional<PlanOutput> output;
  std::string error;
};

/// One result per bindings document, in input order. Documents are rendered
/// in parallel.
std::vector<BatchResult> execute_plan_batch(const CompiledPlan& plan, std::span<const Bindings> docs,
                                            bool record_spans = false);
// Serial reference for execute_plan_batch.
std::vector<BatchResult> execute_plan_batch_serial(const CompiledPlan& plan, std::span<const Bindings> docs,
                                                   bool record_spans = false);

}  // namespace autoesc
