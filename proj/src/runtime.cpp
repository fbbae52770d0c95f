#include "json.hpp"

#include "autoesc/escapers.hpp"
#include "autoesc/runtime.hpp"

namespace autoesc {

const Value* Bindings::lookup(std::string_view path) const {
  auto dot = path.find('.');
  std::string head(path.substr(0, dot));
  const Value* v = nullptr;
  for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
    if (it->first == head) {
      v = it->second;
      break;
    }
  }
  if (!v) {
    auto it = root_.find(head);
    if (it == root_.end()) return nullptr;
    v = &it->second;
  }
  while (dot != std::string_view::npos) {
    path.remove_prefix(dot + 1);
    dot = path.find('.');
    if (v->kind() != Value::Kind::Record) return nullptr;
    auto it = v->fields().find(std::string(path.substr(0, dot)));
    if (it == v->fields().end()) return nullptr;
    v = &it->second;
  }
  return v;
}

namespace {

std::optional<Value> from_json(const nlohmann::json& j) {
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::null: return std::nullopt;
    case json::value_t::boolean: return Value::boolean(j.get<bool>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
    case json::value_t::number_float: return Value::number(j.get<double>());
    case json::value_t::string: return Value::text(j.get<std::string>());
    case json::value_t::array: {
      Value::List items;
      for (const auto& e : j) {
        auto v = from_json(e);
        if (!v) throw BindingsError("null is not allowed inside a list");
        items.push_back(std::move(*v));
      }
      return Value::list(std::move(items));
    }
    case json::value_t::object: {
      if (j.contains("$safe")) {
        if (j.size() != 2 || !j["$safe"].is_string() || !j.contains("content") || !j["content"].is_string())
          throw BindingsError("a $safe object needs exactly \"$safe\" and \"content\" strings");
        return trusted_safe_content(j["$safe"].get<std::string>(), j["content"].get<std::string>());
      }
      Value::Record fields;
      for (const auto& [k, e] : j.items()) {
        if (auto v = from_json(e)) fields.emplace(k, std::move(*v));
      }
      return Value::record(std::move(fields));
    }
    default: throw BindingsError("unsupported JSON value");
  }
}

nlohmann::json parse_json(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw BindingsError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

Bindings bindings_from_json(std::string_view json_text) {
  auto j = parse_json(json_text);
  if (!j.is_object()) throw BindingsError("bindings must be a JSON object");
  auto v = from_json(j);
  return Bindings(v->fields());
}

Value value_from_json_text(std::string_view json_text) {
  auto v = from_json(parse_json(json_text));
  if (!v) throw BindingsError("null is not a value");
  return *v;
}

void Collector::append(std::string_view text, const std::vector<Mark>& relative_marks) {
  std::size_t base = buffer.size();
  for (const auto& m : relative_marks) marks.push_back({m.event, base + m.offset});
  buffer.append(text);
}

Accumulator::Accumulator(std::shared_ptr<const Machine> machine)
    : machine_(std::move(machine)), state_(zero_state(*machine_)) {}

Diagnostics Accumulator::fail(std::string message, const Position& pos) {
  state_.errored = true;
  state_.error = message;
  return {make_error(std::move(message), pos)};
}

Diagnostics Accumulator::append_fixed(std::string_view text, const Position& pos) {
  if (state_.errored) return {};
  auto r = step_fixed(*machine_, state_, text, pos);
  collector_.append(r.emitted, r.marks);
  state_ = std::move(r.state);
  return std::move(r.diagnostics);
}

Diagnostics Accumulator::append_unsafe(const Value& v, const Position& pos) {
  if (state_.errored) return {};
  auto step = step_interp(*machine_, state_, pos);
  if (step.successor.errored) {
    state_ = std::move(step.successor);
    return std::move(step.diagnostics);
  }
  std::string escaped;
  try {
    escaped = apply_chain(step.escapers, v);
  } catch (const EscapeError& e) {
    auto ds = std::move(step.diagnostics);
    auto more = fail(e.what(), pos);
    ds.insert(ds.end(), more.begin(), more.end());
    return ds;
  }
  collector_.append(step.pre, step.pre_marks);
  if (step.in_message) collector_.mark(MarkKind::ExprStart);
  collector_.append(escaped, {});
  if (step.in_message) collector_.mark(MarkKind::ExprEnd);
  collector_.append(step.post, step.post_marks);
  state_ = std::move(step.successor);
  return std::move(step.diagnostics);
}

Collected Accumulator::collected(const Position& pos) const {
  Collected out;
  if (state_.errored) {
    out.diagnostics.push_back(make_error(state_.error, pos));
    return out;
  }
  auto fin = finish(*machine_, state_, pos);
  out.diagnostics = std::move(fin.diagnostics);
  if (fin.state.errored) return out;
  Collector c = collector_;
  c.append(fin.emitted, fin.marks);
  auto end = is_valid_end(*machine_, fin.state);
  if (!end.ok) out.diagnostics.push_back(make_warning(end.message, pos));
  out.value = trusted_safe_content(machine_->language(), std::move(c.buffer));
  out.marks = std::move(c.marks);
  return out;
}

namespace {

struct RenderError {
  std::string message;
  Position pos;
};

// Raised after an error diagnostic has already been recorded.
struct Stopped {};

class Renderer {
 public:
  Renderer(const AppendProgram& p, Bindings b, std::shared_ptr<const Machine> m)
      : p_(p), b_(std::move(b)), acc_(std::move(m)) {}

  RenderResult run() {
    RenderResult r;
    try {
      walk(0, -1);
    } catch (const RenderError& e) {
      diags_.push_back(make_error(e.message, e.pos));
      r.diagnostics = std::move(diags_);
      return r;
    } catch (const Stopped&) {
      r.diagnostics = std::move(diags_);
      return r;
    }
    auto c = acc_.collected(p_.nodes[static_cast<std::size_t>(p_.exit)].pos);
    diags_.insert(diags_.end(), c.diagnostics.begin(), c.diagnostics.end());
    r.diagnostics = std::move(diags_);
    if (!has_errors(r.diagnostics)) {
      r.value = std::move(c.value);
      r.marks = std::move(c.marks);
    }
    return r;
  }

 private:
  const AppendProgram& p_;
  Bindings b_;
  Accumulator acc_;
  Diagnostics diags_;

  void check(Diagnostics ds) {
    bool err = has_errors(ds);
    diags_.insert(diags_.end(), ds.begin(), ds.end());
    if (err) throw Stopped{};
  }

  const Value& need(const std::string& path, const Position& pos) {
    const Value* v = b_.lookup(path);
    if (!v) throw RenderError{"unbound path '" + path + "'", pos};
    return *v;
  }

  // Runs from node `id` until reaching `stop` (exclusive) or Collected.
  // Returns the node where it stopped.
  int walk(int id, int stop) {
    while (id != stop) {
      const auto& n = p_.nodes[static_cast<std::size_t>(id)];
      switch (n.kind) {
        case ProgramNode::Kind::AppendFixed:
          check(acc_.append_fixed(n.text, n.pos));
          id = n.succ[0];
          break;
        case ProgramNode::Kind::AppendUnsafe:
          check(acc_.append_unsafe(need(n.path, n.pos), n.pos));
          id = n.succ[0];
          break;
        case ProgramNode::Kind::LoopHead: {
          const Value& list = need(n.path, n.pos);
          if (list.kind() != Value::Kind::List) throw RenderError{"'" + n.path + "' is not a list", n.pos};
          for (const auto& item : list.items()) {
            b_.push(n.var, &item);
            walk(n.succ[0], n.partner);
            b_.pop();
          }
          id = n.succ[1];
          break;
        }
        case ProgramNode::Kind::Branch: {
          const Value* v = b_.lookup(n.path);
          int join = n.partner;
          walk(v && truthy(*v) ? n.succ[0] : n.succ[1], join);
          id = p_.nodes[static_cast<std::size_t>(join)].succ[0];
          break;
        }
        case ProgramNode::Kind::Join:
        case ProgramNode::Kind::LoopBack: return id;
        case ProgramNode::Kind::Collected: return id;
      }
    }
    return id;
  }
};

}  // namespace

RenderResult render(const AppendProgram& program, const Bindings& bindings, std::shared_ptr<const Machine> machine) {
  return Renderer(program, bindings, std::move(machine)).run();
}

}  // namespace autoesc
