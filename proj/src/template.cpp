#include <cctype>
#include <sstream>

#include "autoesc/template.hpp"

namespace autoesc {

bool is_binding_path(std::string_view s) {
  if (s.empty()) return false;
  bool need_start = true;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (need_start) {
      if (!(std::isalpha(u) || c == '_')) return false;
      need_start = false;
    } else if (c == '.') {
      need_start = true;
    } else if (!(std::isalnum(u) || c == '_')) {
      return false;
    }
  }
  return !need_start;
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_ident(std::string_view s) { return is_binding_path(s) && s.find('.') == std::string_view::npos; }

class TemplateParser {
 public:
  TemplateParser(std::string_view src, std::string file) : src_(src) { ir_.file = std::move(file); }

  TemplateParseResult run() {
    std::istringstream in{std::string(src_)};
    std::string raw;
    bool have_tag = false;
    int line = 0;
    struct Open {
      IrNode* node;
      bool in_else;
      Position pos;
    };
    std::vector<Open> stack;
    auto current = [&]() -> std::vector<IrNode>& {
      if (stack.empty()) return ir_.body;
      return stack.back().in_else ? stack.back().node->else_body : stack.back().node->body;
    };

    while (std::getline(in, raw)) {
      ++line;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      auto indent = raw.find_first_not_of(" \t");
      if (indent == std::string::npos) continue;
      Position pos{ir_.file, line, static_cast<int>(indent) + 1};
      std::string_view rest = std::string_view(raw).substr(indent);

      if (!have_tag) {
        if (rest.rfind("tag:", 0) != 0) {
          error("first line must be 'tag: <name>'", pos);
          return finish();
        }
        ir_.tag = trim(rest.substr(4));
        if (!is_ident(ir_.tag)) error("malformed tag name '" + ir_.tag + "'", pos);
        have_tag = true;
        continue;
      }

      char margin = rest.front();
      if (margin == '"') {
        content_line(rest.substr(1), {ir_.file, line, pos.column + 1}, current());
      } else if (margin == ':') {
        std::string stmt = trim(rest.substr(1));
        if (stmt == "}") {
          if (stack.empty()) {
            error("unbalanced statement block: '}' without an open block", pos);
            continue;
          }
          stack.pop_back();
        } else if (stmt == "} else {") {
          if (stack.empty() || stack.back().node->kind != IrNode::Kind::If || stack.back().in_else) {
            error("unbalanced statement block: 'else' without a matching 'if'", pos);
            continue;
          }
          stack.back().in_else = true;
        } else if (auto f = parse_for(stmt)) {
          f->pos = pos;
          auto& list = current();
          list.push_back(std::move(*f));
          stack.push_back({&list.back(), false, pos});
        } else if (auto i = parse_if(stmt)) {
          i->pos = pos;
          auto& list = current();
          list.push_back(std::move(*i));
          stack.push_back({&list.back(), false, pos});
        } else {
          error("unrecognized statement '" + stmt + "'", pos);
        }
      } else {
        error(std::string("unknown margin character '") + margin + "'", pos);
      }
    }
    if (!have_tag) error("missing 'tag: <name>' line", {ir_.file, 1, 1});
    for (const auto& open : stack) error("unbalanced statement block: missing ':}'", open.pos);
    return finish();
  }

 private:
  std::string_view src_;
  TemplateIR ir_;
  Diagnostics diags_;

  void error(std::string msg, Position pos) { diags_.push_back(make_error(std::move(msg), std::move(pos))); }

  TemplateParseResult finish() {
    TemplateParseResult r;
    r.diagnostics = std::move(diags_);
    if (!has_errors(r.diagnostics)) r.ir = std::move(ir_);
    return r;
  }

  std::optional<IrNode> parse_for(const std::string& stmt) {
    std::istringstream in(stmt);
    std::vector<std::string> w;
    std::string t;
    while (in >> t) w.push_back(t);
    if (w.size() < 2 || w[0] != "for" || w.back() != "{") return std::nullopt;
    std::vector<std::string> mid(w.begin() + 1, w.end() - 1);
    // `for (let x of p) {`
    if (mid.size() == 4 && mid[0] == "(let" && mid[2] == "of" && mid[3].size() > 1 && mid[3].back() == ')') {
      mid = {mid[1], "of", mid[3].substr(0, mid[3].size() - 1)};
    }
    if (mid.size() != 3 || mid[1] != "of" || !is_ident(mid[0]) || !is_binding_path(mid[2])) return std::nullopt;
    IrNode n;
    n.kind = IrNode::Kind::For;
    n.var = mid[0];
    n.path = mid[2];
    return n;
  }

  std::optional<IrNode> parse_if(const std::string& stmt) {
    if (stmt.rfind("if", 0) != 0 || stmt.size() < 4 || stmt.back() != '{') return std::nullopt;
    std::string cond = trim(std::string_view(stmt).substr(2, stmt.size() - 3));
    if (cond.size() > 2 && cond.front() == '(' && cond.back() == ')') cond = trim(cond.substr(1, cond.size() - 2));
    if (!is_binding_path(cond)) return std::nullopt;
    IrNode n;
    n.kind = IrNode::Kind::If;
    n.path = cond;
    return n;
  }

  void content_line(std::string_view text, Position pos, std::vector<IrNode>& out) {
    std::string lit;
    Position lit_pos = pos;
    auto flush = [&]() {
      if (lit.empty()) return;
      IrNode n;
      n.kind = IrNode::Kind::Literal;
      n.text = std::move(lit);
      n.pos = lit_pos;
      out.push_back(std::move(n));
      lit.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
      Position here{pos.file, pos.line, pos.column + static_cast<int>(i)};
      if (text.compare(i, 3, "$${") == 0) {
        if (lit.empty()) lit_pos = here;
        lit += "${";
        i += 3;
      } else if (text.compare(i, 2, "${") == 0) {
        auto close = text.find('}', i + 2);
        if (close == std::string_view::npos) {
          error("malformed interpolation: '${' without a closing '}'", here);
          return;
        }
        std::string expr = trim(text.substr(i + 2, close - i - 2));
        if (expr.find('(') != std::string::npos) {
          error("method calls are not supported in interpolations: '" + expr + "'", here);
        } else if (!is_binding_path(expr)) {
          error("malformed interpolation: '" + expr + "' is not a dotted binding path", here);
        }
        flush();
        IrNode n;
        n.kind = IrNode::Kind::Interp;
        n.path = expr;
        n.pos = here;
        out.push_back(std::move(n));
        i = close + 1;
      } else {
        if (lit.empty()) lit_pos = here;
        lit += text[i++];
      }
    }
    if (lit.empty()) lit_pos = {pos.file, pos.line, pos.column + static_cast<int>(text.size())};
    lit += '\n';
    flush();
  }
};

class Desugarer {
 public:
  explicit Desugarer(AppendProgram& p) : p_(p) {}

  // Emits `nodes` starting from a dangling edge; returns the dangling edge
  // list of the last node (node index + successor slot).
  std::vector<std::pair<int, int>> emit(const std::vector<IrNode>& nodes, std::vector<std::pair<int, int>> dangling) {
    for (const auto& n : nodes) {
      switch (n.kind) {
        case IrNode::Kind::Literal:
        case IrNode::Kind::Interp: {
          ProgramNode pn;
          pn.kind = n.kind == IrNode::Kind::Literal ? ProgramNode::Kind::AppendFixed : ProgramNode::Kind::AppendUnsafe;
          pn.text = n.text;
          pn.path = n.path;
          pn.pos = n.pos;
          pn.succ = {-1};
          int id = add(std::move(pn), dangling);
          dangling = {{id, 0}};
          break;
        }
        case IrNode::Kind::For: {
          ProgramNode head;
          head.kind = ProgramNode::Kind::LoopHead;
          head.var = n.var;
          head.path = n.path;
          head.pos = n.pos;
          head.succ = {-1, -1};
          int h = add(std::move(head), dangling);
          auto body_end = emit(n.body, {{h, 0}});
          ProgramNode back;
          back.kind = ProgramNode::Kind::LoopBack;
          back.pos = n.pos;
          back.succ = {h};
          back.partner = h;
          int b = add(std::move(back), body_end);
          p_.nodes[static_cast<std::size_t>(h)].partner = b;
          dangling = {{h, 1}};
          break;
        }
        case IrNode::Kind::If: {
          ProgramNode br;
          br.kind = ProgramNode::Kind::Branch;
          br.path = n.path;
          br.pos = n.pos;
          br.succ = {-1, -1};
          int b = add(std::move(br), dangling);
          auto then_end = emit(n.body, {{b, 0}});
          auto else_end = emit(n.else_body, {{b, 1}});
          then_end.insert(then_end.end(), else_end.begin(), else_end.end());
          ProgramNode join;
          join.kind = ProgramNode::Kind::Join;
          join.pos = n.pos;
          join.succ = {-1};
          join.partner = b;
          int j = add(std::move(join), then_end);
          p_.nodes[static_cast<std::size_t>(b)].partner = j;
          dangling = {{j, 0}};
          break;
        }
      }
    }
    return dangling;
  }

  int add(ProgramNode n, const std::vector<std::pair<int, int>>& dangling) {
    int id = static_cast<int>(p_.nodes.size());
    p_.nodes.push_back(std::move(n));
    for (auto [node, slot] : dangling) p_.nodes[static_cast<std::size_t>(node)].succ[static_cast<std::size_t>(slot)] = id;
    return id;
  }

 private:
  AppendProgram& p_;
};

}  // namespace

TemplateParseResult parse_template(std::string_view source, std::string file) {
  return TemplateParser(source, std::move(file)).run();
}

std::vector<std::vector<int>> AppendProgram::predecessors() const {
  std::vector<std::vector<int>> preds(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int s : nodes[i].succ) preds[static_cast<std::size_t>(s)].push_back(static_cast<int>(i));
  return preds;
}

AppendProgram desugar(const TemplateIR& ir) {
  AppendProgram p;
  p.tag = ir.tag;
  p.file = ir.file;
  Desugarer d(p);
  // Node 0 is always the entry: an empty program still has a Collected node.
  auto end = d.emit(ir.body, {});
  ProgramNode collected;
  collected.kind = ProgramNode::Kind::Collected;
  Position last{ir.file, 1, 1};
  if (!p.nodes.empty()) last = p.nodes.back().pos;
  collected.pos = last;
  p.exit = d.add(std::move(collected), end);
  return p;
}

const char* node_kind_name(ProgramNode::Kind k) {
  switch (k) {
    case ProgramNode::Kind::AppendFixed: return "AppendFixed";
    case ProgramNode::Kind::AppendUnsafe: return "AppendUnsafe";
    case ProgramNode::Kind::LoopHead: return "LoopHead";
    case ProgramNode::Kind::LoopBack: return "LoopBack";
    case ProgramNode::Kind::Branch: return "Branch";
    case ProgramNode::Kind::Join: return "Join";
    case ProgramNode::Kind::Collected: return "Collected";
  }
  return "";
}

}  // namespace autoesc
