#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autoesc/diagnostic.hpp"

namespace autoesc {

struct IrNode {
  enum class Kind { Literal, Interp, For, If };
  Kind kind = Kind::Literal;
  std::string text;  // Literal
  std::string path;  // Interp expression, For iterable, If condition
  std::string var;   // For loop variable
  std::vector<IrNode> body;       // For body, If then-branch
  std::vector<IrNode> else_body;  // If else-branch
  Position pos;
};

struct TemplateIR {
  std::string tag;
  std::string file;
  std::vector<IrNode> body;
};

struct TemplateParseResult {
  std::optional<TemplateIR> ir;
  Diagnostics diagnostics;
};

/// Parses the template file format: `tag: <name>` on the first line, then
/// content lines (margin `"`) and statement lines (margin `:`).
TemplateParseResult parse_template(std::string_view source, std::string file = "<template>");

/// A dotted path of identifiers, e.g. `item.url`.
bool is_binding_path(std::string_view s);

/// Control-flow graph of appendFixed/appendUnsafe calls. Node 0 is the entry.
struct ProgramNode {
  enum class Kind { AppendFixed, AppendUnsafe, LoopHead, LoopBack, Branch, Join, Collected };
  Kind kind = Kind::AppendFixed;
  std::string text;  // AppendFixed
  std::string path;  // AppendUnsafe expression, LoopHead iterable, Branch condition
  std::string var;   // LoopHead
  Position pos;
  // AppendFixed/AppendUnsafe/Join: {next}. LoopHead: {body, exit}.
  // LoopBack: {head}. Branch: {then, else}. Collected: {}.
  std::vector<int> succ;
  // LoopHead <-> LoopBack, Branch <-> Join.
  int partner = -1;
};

struct AppendProgram {
  std::string tag;
  std::string file;
  std::vector<ProgramNode> nodes;
  int exit = -1;  // the Collected node

  std::vector<std::vector<int>> predecessors() const;
};

AppendProgram desugar(const TemplateIR& ir);

const char* node_kind_name(ProgramNode::Kind k);

}  // namespace autoesc
