#include <algorithm>
#include <functional>

#include "autoesc/compiler.hpp"
#include "json.hpp"

namespace autoesc {

namespace {

constexpr int kIterationCap = 1000;

std::vector<int> reverse_post_order(const AppendProgram& p) {
  std::vector<int> order;
  std::vector<char> seen(p.nodes.size(), 0);
  std::function<void(int)> dfs = [&](int n) {
    seen[static_cast<std::size_t>(n)] = 1;
    for (int s : p.nodes[static_cast<std::size_t>(n)].succ)
      if (!seen[static_cast<std::size_t>(s)]) dfs(s);
    order.push_back(n);
  };
  if (!p.nodes.empty()) dfs(0);
  std::reverse(order.begin(), order.end());
  return order;
}

MachineState transfer(const Machine& m, const ProgramNode& n, const MachineState& in) {
  switch (n.kind) {
    case ProgramNode::Kind::AppendFixed: return step_fixed(m, in, n.text, n.pos).state;
    case ProgramNode::Kind::AppendUnsafe: return step_interp(m, in, n.pos).successor;
    default: return in;
  }
}

}  // namespace

PropagateResult propagate(const AppendProgram& program, const Machine& machine) {
  PropagateResult result;
  auto& ann = result.annotated;
  ann.program = program;
  ann.nodes.resize(program.nodes.size());
  auto preds = program.predecessors();
  auto order = reverse_post_order(program);
  Diagnostics& diags = result.diagnostics;

  auto merged_in = [&](int id) -> std::optional<MachineState> {
    // The entry may itself be a loop head, so its back edge still merges in.
    std::optional<MachineState> acc;
    if (id == 0) acc = zero_state(machine);
    for (int p : preds[static_cast<std::size_t>(id)]) {
      const auto& out = ann.nodes[static_cast<std::size_t>(p)].out;
      if (!out) continue;
      acc = acc ? merge(machine, *acc, *out) : *out;
    }
    return acc;
  };

  // Merge points whose own merge failed while every incoming state was
  // still clean. Errors arriving along an edge are reported where they arise.
  std::vector<bool> conflict_here(program.nodes.size(), false);
  auto clean_preds = [&](int id) {
    for (int p : preds[static_cast<std::size_t>(id)]) {
      const auto& out = ann.nodes[static_cast<std::size_t>(p)].out;
      if (out && out->errored) return false;
    }
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (int id : order) {
      auto& a = ann.nodes[static_cast<std::size_t>(id)];
      auto in = merged_in(id);
      if (!in || (a.in && *a.in == *in)) continue;
      if (in->errored && !(a.in && a.in->errored) && preds[static_cast<std::size_t>(id)].size() + (id == 0 ? 1 : 0) > 1 &&
          clean_preds(id))
        conflict_here[static_cast<std::size_t>(id)] = true;
      a.in = std::move(in);
      a.out = transfer(machine, program.nodes[static_cast<std::size_t>(id)], *a.in);
      changed = true;
    }
    if (changed) ++ann.iterations;
    if (ann.iterations > kIterationCap) {
      diags.push_back(make_error("internal error: context propagation did not converge",
                                 program.nodes.empty() ? Position{program.file, 1, 1} : program.nodes.front().pos));
      ann.blocked = true;
      return result;
    }
  }

  // Final pass in source order: collect per-node output and diagnostics.
  for (std::size_t i = 0; i < program.nodes.size(); ++i) {
    const auto& n = program.nodes[i];
    auto& a = ann.nodes[i];
    if (!a.in) continue;
    const auto& in = *a.in;
    auto add = [&](const Diagnostics& ds) { diags.insert(diags.end(), ds.begin(), ds.end()); };
    switch (n.kind) {
      case ProgramNode::Kind::AppendFixed: {
        auto r = step_fixed(machine, in, n.text, n.pos);
        a.emitted = std::move(r.emitted);
        a.marks = std::move(r.marks);
        add(r.diagnostics);
        break;
      }
      case ProgramNode::Kind::AppendUnsafe: {
        auto r = step_interp(machine, in, n.pos);
        a.site = std::move(r.context);
        a.escapers = std::move(r.escapers);
        a.pre = std::move(r.pre);
        a.post = std::move(r.post);
        a.pre_marks = std::move(r.pre_marks);
        a.post_marks = std::move(r.post_marks);
        a.in_message = r.in_message;
        add(r.diagnostics);
        break;
      }
      case ProgramNode::Kind::LoopHead:
      case ProgramNode::Kind::Join: {
        if (in.errored && conflict_here[i]) diags.push_back(make_error(in.error, n.pos));
        break;
      }
      case ProgramNode::Kind::Collected: {
        auto r = finish(machine, in, n.pos);
        a.emitted = std::move(r.emitted);
        a.marks = std::move(r.marks);
        add(r.diagnostics);
        if (!r.state.errored) {
          auto end = is_valid_end(machine, r.state);
          ann.end_ok = end.ok;
          ann.end_message = end.message;
          if (!end.ok) diags.push_back(make_warning(end.message, n.pos));
        } else {
          ann.end_message = r.state.error;
        }
        break;
      }
      default: break;
    }
  }
  ann.blocked = has_errors(diags);
  return result;
}

namespace {

void append_lit(std::vector<PlanNode>& out, const std::string& text, const std::vector<Mark>& marks) {
  if (text.empty() && marks.empty()) return;
  if (!out.empty() && out.back().kind == PlanNode::Kind::Lit) {
    auto& lit = out.back();
    for (const auto& m : marks) lit.marks.push_back({m.event, lit.text.size() + m.offset});
    lit.text += text;
    return;
  }
  PlanNode n;
  n.kind = PlanNode::Kind::Lit;
  n.text = text;
  n.marks = marks;
  out.push_back(std::move(n));
}

std::vector<const Escaper*> resolve(const std::vector<std::string>& names) {
  std::vector<const Escaper*> out;
  for (const auto& name : names) {
    const Escaper* e = find_escaper(name);
    if (!e) throw CompileError("unknown escaper '" + name + "'");
    out.push_back(e);
  }
  return out;
}

class Eraser {
 public:
  explicit Eraser(const AnnotatedProgram& a) : a_(a), p_(a.program) {}

  std::vector<PlanNode> walk(int id, int stop) {
    std::vector<PlanNode> out;
    while (id != stop) {
      const auto& n = p_.nodes[static_cast<std::size_t>(id)];
      const auto& a = a_.nodes[static_cast<std::size_t>(id)];
      switch (n.kind) {
        case ProgramNode::Kind::AppendFixed:
          append_lit(out, a.emitted, a.marks);
          id = n.succ[0];
          break;
        case ProgramNode::Kind::AppendUnsafe: {
          append_lit(out, a.pre, a.pre_marks);
          PlanNode in;
          in.kind = PlanNode::Kind::Interp;
          in.path = n.path;
          in.escapers = a.escapers;
          in.resolved = resolve(a.escapers);
          in.expr_marks = a.in_message;
          out.push_back(std::move(in));
          append_lit(out, a.post, a.post_marks);
          id = n.succ[0];
          break;
        }
        case ProgramNode::Kind::LoopHead: {
          PlanNode f;
          f.kind = PlanNode::Kind::For;
          f.var = n.var;
          f.path = n.path;
          f.body = walk(n.succ[0], n.partner);
          out.push_back(std::move(f));
          id = n.succ[1];
          break;
        }
        case ProgramNode::Kind::Branch: {
          PlanNode b;
          b.kind = PlanNode::Kind::If;
          b.path = n.path;
          b.body = walk(n.succ[0], n.partner);
          b.else_body = walk(n.succ[1], n.partner);
          out.push_back(std::move(b));
          id = p_.nodes[static_cast<std::size_t>(n.partner)].succ[0];
          break;
        }
        case ProgramNode::Kind::Collected:
          append_lit(out, a.emitted, a.marks);
          return out;
        case ProgramNode::Kind::Join:
        case ProgramNode::Kind::LoopBack: return out;
      }
    }
    return out;
  }

 private:
  const AnnotatedProgram& a_;
  const AppendProgram& p_;
};

using ojson = nlohmann::ordered_json;

ojson marks_json(const std::vector<Mark>& marks) {
  ojson arr = ojson::array();
  for (const auto& m : marks) {
    ojson j;
    j["kind"] = std::string(mark_kind_name(m.event.kind));
    if (m.event.kind == MarkKind::MsgStart) j["id"] = m.event.id;
    j["offset"] = m.offset;
    arr.push_back(std::move(j));
  }
  return arr;
}

ojson body_json(const std::vector<PlanNode>& body, std::vector<std::string>& message_ids) {
  ojson arr = ojson::array();
  for (const auto& n : body) {
    ojson j;
    switch (n.kind) {
      case PlanNode::Kind::Lit:
        j["lit"] = n.text;
        if (!n.marks.empty()) {
          j["marks"] = marks_json(n.marks);
          for (const auto& m : n.marks)
            if (m.event.kind == MarkKind::MsgStart) message_ids.push_back(m.event.id);
        }
        break;
      case PlanNode::Kind::Interp: {
        ojson in;
        in["path"] = n.path;
        in["escapers"] = n.escapers;
        if (n.expr_marks) in["expr_marks"] = true;
        j["interp"] = std::move(in);
        break;
      }
      case PlanNode::Kind::For: {
        ojson f;
        f["var"] = n.var;
        f["path"] = n.path;
        f["body"] = body_json(n.body, message_ids);
        j["for"] = std::move(f);
        break;
      }
      case PlanNode::Kind::If: {
        ojson f;
        f["path"] = n.path;
        f["then"] = body_json(n.body, message_ids);
        f["else"] = body_json(n.else_body, message_ids);
        j["if"] = std::move(f);
        break;
      }
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Mark> marks_from_json(const ojson& arr) {
  std::vector<Mark> out;
  for (const auto& j : arr) {
    auto kind = parse_mark_kind(j.at("kind").get<std::string>());
    if (!kind) throw CompileError("unknown mark kind in plan");
    Mark m;
    m.event.kind = *kind;
    if (*kind == MarkKind::MsgStart) m.event.id = j.at("id").get<std::string>();
    m.offset = j.at("offset").get<std::size_t>();
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<PlanNode> body_from_json(const ojson& arr) {
  if (!arr.is_array()) throw CompileError("plan body must be an array");
  std::vector<PlanNode> out;
  for (const auto& j : arr) {
    PlanNode n;
    if (j.contains("lit")) {
      n.kind = PlanNode::Kind::Lit;
      n.text = j["lit"].get<std::string>();
      if (j.contains("marks")) n.marks = marks_from_json(j["marks"]);
      for (const auto& m : n.marks)
        if (m.offset > n.text.size()) throw CompileError("mark offset past end of literal");
    } else if (j.contains("interp")) {
      const auto& in = j["interp"];
      n.kind = PlanNode::Kind::Interp;
      n.path = in.at("path").get<std::string>();
      n.escapers = in.at("escapers").get<std::vector<std::string>>();
      n.resolved = resolve(n.escapers);
      n.expr_marks = in.value("expr_marks", false);
    } else if (j.contains("for")) {
      const auto& f = j["for"];
      n.kind = PlanNode::Kind::For;
      n.var = f.at("var").get<std::string>();
      n.path = f.at("path").get<std::string>();
      n.body = body_from_json(f.at("body"));
    } else if (j.contains("if")) {
      const auto& f = j["if"];
      n.kind = PlanNode::Kind::If;
      n.path = f.at("path").get<std::string>();
      n.body = body_from_json(f.at("then"));
      n.else_body = body_from_json(f.at("else"));
    } else {
      throw CompileError("unknown plan node");
    }
    if (n.kind != PlanNode::Kind::Lit && !is_binding_path(n.path)) throw CompileError("malformed path '" + n.path + "'");
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace

CompiledPlan erase(const AnnotatedProgram& annotated, const std::string& language) {
  if (annotated.blocked) throw CompileError("cannot erase a program with error diagnostics");
  CompiledPlan plan;
  plan.language = language;
  plan.body = Eraser(annotated).walk(0, -1);
  return plan;
}

std::string plan_to_json(const CompiledPlan& plan) {
  std::vector<std::string> ids;
  ojson j;
  j["language"] = plan.language;
  j["body"] = body_json(plan.body, ids);
  j["marks"] = ids;
  return j.dump(2) + "\n";
}

CompiledPlan plan_from_json(std::string_view json_text) {
  try {
    auto j = ojson::parse(json_text);
    CompiledPlan plan;
    plan.language = j.at("language").get<std::string>();
    plan.body = body_from_json(j.at("body"));
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw CompileError(std::string("malformed plan: ") + e.what());
  }
}

namespace {

class PlanRunner {
 public:
  PlanRunner(const Bindings& b, bool spans) : b_(b), spans_(spans) {}

  void run(const std::vector<PlanNode>& body) {
    for (const auto& n : body) {
      switch (n.kind) {
        case PlanNode::Kind::Lit:
          if (!n.marks.empty()) {
            for (const auto& m : n.marks) out_.marks.push_back({m.event, buf_.size() + m.offset});
          }
          buf_ += n.text;
          break;
        case PlanNode::Kind::Interp: {
          const Value* v = b_.lookup(n.path);
          if (!v) throw PlanError("unbound path '" + n.path + "'");
          if (n.expr_marks) out_.marks.push_back({{MarkKind::ExprStart, {}}, buf_.size()});
          std::size_t begin = buf_.size();
          try {
            buf_ += apply_chain(n.resolved, *v);
          } catch (const EscapeError& e) {
            throw PlanError(e.what());
          }
          if (spans_) out_.interp_spans.emplace_back(begin, buf_.size());
          if (n.expr_marks) out_.marks.push_back({{MarkKind::ExprEnd, {}}, buf_.size()});
          break;
        }
        case PlanNode::Kind::For: {
          const Value* v = b_.lookup(n.path);
          if (!v) throw PlanError("unbound path '" + n.path + "'");
          if (v->kind() != Value::Kind::List) throw PlanError("'" + n.path + "' is not a list");
          for (const auto& item : v->items()) {
            b_.push(n.var, &item);
            run(n.body);
            b_.pop();
          }
          break;
        }
        case PlanNode::Kind::If: {
          const Value* v = b_.lookup(n.path);
          run(v && truthy(*v) ? n.body : n.else_body);
          break;
        }
      }
    }
  }

  PlanOutput take(const std::string& language) {
    out_.value = trusted_safe_content(language, std::move(buf_));
    return std::move(out_);
  }

 private:
  Bindings b_;
  bool spans_;
  std::string buf_;
  PlanOutput out_;
};

BatchResult run_one(const CompiledPlan& plan, const Bindings& b, bool spans) {
  BatchResult r;
  try {
    r.output = execute_plan(plan, b, spans);
  } catch (const PlanError& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

PlanOutput execute_plan(const CompiledPlan& plan, const Bindings& bindings, bool record_spans) {
  PlanRunner r(bindings, record_spans);
  r.run(plan.body);
  return r.take(plan.language);
}

std::vector<BatchResult> execute_plan_batch(const CompiledPlan& plan, std::span<const Bindings> docs,
                                            bool record_spans) {
  std::vector<BatchResult> out(docs.size());
  const auto n = static_cast<long>(docs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_one(plan, docs[static_cast<std::size_t>(i)], record_spans);
  return out;
}

std::vector<BatchResult> execute_plan_batch_serial(const CompiledPlan& plan, std::span<const Bindings> docs,
                                                   bool record_spans) {
  std::vector<BatchResult> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(run_one(plan, d, record_spans));
  return out;
}

}  // namespace autoesc
