#include <algorithm>
#include <atomic>
#include <set>
#include <stdexcept>

#include "autoesc/codec.hpp"
#include "autoesc/transition.hpp"

namespace autoesc {

namespace {

std::atomic<std::uint64_t> g_transition_ops{0};

void count_op() { g_transition_ops.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

std::uint64_t transition_operations() { return g_transition_ops.load(std::memory_order_relaxed); }

bool ContextPattern::matches(const Context& c) const {
  for (std::size_t i = 0; i < kMaxFields; ++i)
    if (slots[i] != kWildcard && slots[i] != c[i]) return false;
  return true;
}

Context ContextPattern::apply(const Context& c) const {
  Context out = c;
  for (std::size_t i = 0; i < kMaxFields; ++i)
    if (slots[i] != kWildcard) out[i] = static_cast<std::uint8_t>(slots[i]);
  return out;
}

std::string TransitionTable::format_context(const Context& c) const {
  std::string out = "(";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += fields[i].values[c[i]];
  }
  return out + ")";
}

std::string TransitionTable::format_pattern(const ContextPattern& p) const {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ", ";
    out += p.slots[i] == ContextPattern::kWildcard ? std::string("_")
                                                   : fields[i].values[static_cast<std::size_t>(p.slots[i])];
  }
  return out;
}

std::size_t TransitionTable::context_count() const {
  std::size_t n = 1;
  for (const auto& f : fields) n *= f.values.size();
  return n;
}

std::size_t TransitionTable::context_index(const Context& c) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) idx = idx * fields[i].values.size() + c[i];
  return idx;
}

Context TransitionTable::context_at(std::size_t index) const {
  Context c{};
  for (std::size_t i = fields.size(); i-- > 0;) {
    c[i] = static_cast<std::uint8_t>(index % fields[i].values.size());
    index /= fields[i].values.size();
  }
  return c;
}

Machine::Machine(std::vector<TransitionTable> tables, std::string_view root_name) : tables_(std::move(tables)) {
  root_ = index_of(root_name);
  if (root_ < 0) throw std::invalid_argument("no table named '" + std::string(root_name) + "'");
  for (const auto& t : tables_) {
    for (const auto& r : t.rules)
      for (const auto& a : r.actions)
        if (a.kind == SubsidiaryAction::Kind::Start && index_of(a.machine) < 0)
          throw std::invalid_argument("table '" + t.name + "' starts unknown machine '" + a.machine + "'");
  }
  indexes_.resize(tables_.size());
  for (std::size_t ti = 0; ti < tables_.size(); ++ti) {
    const auto& t = tables_[ti];
    auto& idx = indexes_[ti];
    idx.resize(t.context_count());
    for (std::size_t ci = 0; ci < idx.size(); ++ci) {
      Context c = t.context_at(ci);
      for (std::size_t ri = 0; ri < t.rules.size(); ++ri) {
        const auto& r = t.rules[ri];
        if (!r.pattern.matches(c)) continue;
        switch (r.trigger) {
          case TriggerKind::Regex: idx[ci].consuming.push_back(static_cast<int>(ri)); break;
          case TriggerKind::Epsilon: idx[ci].epsilon.push_back(static_cast<int>(ri)); break;
          case TriggerKind::Interp: idx[ci].interp.push_back(static_cast<int>(ri)); break;
        }
      }
      for (std::size_t ei = 0; ei < t.escapers.size(); ++ei) {
        if (t.escapers[ei].pattern.matches(c)) {
          idx[ci].escaper = static_cast<int>(ei);
          break;
        }
      }
    }
  }
}

int Machine::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < tables_.size(); ++i)
    if (tables_[i].name == name) return static_cast<int>(i);
  return -1;
}

const Machine::Index& Machine::index(int table, const Context& c) const {
  const auto& t = tables_[static_cast<std::size_t>(table)];
  return indexes_[static_cast<std::size_t>(table)][t.context_index(c)];
}

bool MachineState::has_pending() const {
  return std::any_of(levels.begin(), levels.end(), [](const Level& l) { return !l.pending.empty(); });
}

MachineState zero_state(const Machine& m) {
  MachineState s;
  s.levels.push_back(Level{m.root_index(), m.root().zero, {}, {}});
  return s;
}

std::string describe_state(const Machine& m, const MachineState& s) {
  std::string out;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const auto& t = m.table(s.levels[i].table);
    if (i) out += " > ";
    out += t.name + t.format_context(s.levels[i].ctx);
  }
  if (s.errored) out += " [error: " + s.error + "]";
  return out;
}

namespace {

// Drives one state through fixed text or an interpolation boundary. All
// emission is encoded outward through the codecs of the enclosing levels and
// appended to `out`, so `out` is always root-level text.
class Runner {
 public:
  Runner(const Machine& m, MachineState s, Position pos) : m_(m), s_(std::move(s)), pos_(std::move(pos)) {}

  MachineState& state() { return s_; }
  std::string& out() { return out_; }
  std::vector<Mark>& marks() { return marks_; }
  Diagnostics& diagnostics() { return diags_; }

  void feed(std::size_t level, std::string_view text, bool final) {
    if (s_.errored) return;
    std::string buf = std::move(s_.levels[level].pending);
    s_.levels[level].pending.clear();
    buf.append(text);
    const std::size_t held = buf.size() - text.size();
    std::size_t pos = 0;
    int idle = 0;  // consecutive non-consuming firings at this position
    const std::size_t cap = m_.table(s_.levels[level].table).rules.size() + 1;

    while (!s_.errored) {
      epsilon_closure(level);
      if (s_.errored) break;
      if (pos >= buf.size()) break;
      if (level == 0) cursor_ = pos > held ? pos - held : 0;

      if (has_sub(level)) {
        const Codec* codec = find_codec(s_.levels[level + 1].codec);
        if (codec && codec->token) {
          auto r = codec->token->match(buf, pos, final);
          if (r.outcome == rx::Outcome::Undecided) break;
          if (r.outcome == rx::Outcome::Match && r.length > 0) {
            forward(level, r.groups[0]);
            pos += r.length;
            idle = 0;
            continue;
          }
        }
      }

      const auto& table = m_.table(s_.levels[level].table);
      const auto& idx = m_.index(s_.levels[level].table, s_.levels[level].ctx);
      bool hold = false;
      bool fired = false;
      for (int ri : idx.consuming) {
        const auto& rule = table.rules[static_cast<std::size_t>(ri)];
        auto r = rule.regex.match(buf, pos, final);
        if (r.outcome == rx::Outcome::Undecided) {
          hold = true;
          break;
        }
        if (r.outcome != rx::Outcome::Match) continue;
        if (r.length == 0 && !rule.guarded) continue;
        fire(level, rule, &r);
        pos += r.length;
        fired = true;
        if (r.length == 0) {
          if (++idle > static_cast<int>(cap)) fail("internal error: table '" + table.name +
                                                   "' makes no progress (guarded epsilon loop)");
        } else {
          idle = 0;
        }
        break;
      }
      if (hold) break;
      if (fired) continue;

      // Default: copy one character, keep context.
      idle = 0;
      if (has_sub(level)) {
        forward(level, buf.substr(pos, 1));
      } else {
        emit(level, buf.substr(pos, 1));
      }
      ++pos;
    }

    if (s_.errored) return;
    s_.levels[level].pending = buf.substr(pos);
    if (final && has_sub(level)) feed(level + 1, "", true);
  }

  void flush_all() { feed(0, "", true); }

  // Applies the first matching interp rule at each level, outermost first.
  void interp_rules() {
    for (std::size_t level = 0; level < s_.levels.size() && !s_.errored; ++level) {
      const auto& idx = m_.index(s_.levels[level].table, s_.levels[level].ctx);
      if (idx.interp.empty()) continue;
      const auto& rule = m_.table(s_.levels[level].table).rules[static_cast<std::size_t>(idx.interp.front())];
      fire(level, rule, nullptr);
      epsilon_closure(level);
    }
  }

  void epsilon_closure(std::size_t level) {
    std::set<Context> seen{s_.levels[level].ctx};
    const auto& table = m_.table(s_.levels[level].table);
    std::size_t count = 0;
    while (!s_.errored && level < s_.levels.size()) {
      const auto& idx = m_.index(s_.levels[level].table, s_.levels[level].ctx);
      if (idx.epsilon.empty()) return;
      fire(level, table.rules[static_cast<std::size_t>(idx.epsilon.front())], nullptr);
      if (s_.errored) return;
      if (++count > table.rules.size() || !seen.insert(s_.levels[level].ctx).second) {
        fail("internal error: epsilon rules of table '" + table.name + "' do not settle");
        return;
      }
    }
  }

  void emit(std::size_t level, std::string_view text) {
    if (text.empty()) return;
    std::string t(text);
    for (std::size_t j = level; j >= 1; --j) t = codec_encode(s_.levels[j].codec, t);
    out_ += t;
  }

  void fail(std::string message) {
    if (s_.errored) return;
    s_.errored = true;
    s_.error = message;
    diags_.push_back(make_error(std::move(message), here()));
  }

 private:
  const Machine& m_;
  MachineState s_;
  Position pos_;
  std::size_t cursor_ = 0;  // offset into the current root chunk
  std::string out_;
  std::vector<Mark> marks_;
  Diagnostics diags_;

  bool has_sub(std::size_t level) const { return level + 1 < s_.levels.size(); }

  Position here() const {
    Position p = pos_;
    if (p.line > 0) p.column += static_cast<int>(cursor_);
    return p;
  }

  void forward(std::size_t level, std::string_view raw) {
    Diagnostics warnings;
    std::string decoded = codec_decode(s_.levels[level + 1].codec, raw, &warnings);
    for (auto& w : warnings) {
      w.position = here();
      diags_.push_back(std::move(w));
    }
    feed(level + 1, decoded, false);
  }

  void close_sub(std::size_t level) {
    if (!has_sub(level)) return;
    feed(level + 1, "", true);
    if (!s_.errored) s_.levels.resize(level + 1);
  }

  void fire(std::size_t level, const TransitionRule& rule, const rx::MatchResult* match) {
    count_op();
    const auto& table = m_.table(s_.levels[level].table);
    if (rule.diagnostic) {
      if (rule.diagnostic->severity == Severity::Error) {
        fail(rule.diagnostic->message);
        return;
      }
      diags_.push_back(make_warning(rule.diagnostic->message, here()));
    }
    if (has_sub(level)) {
      feed(level + 1, "", true);
      if (s_.errored) return;
    }
    for (const auto& ev : rule.events) {
      if (level != 0) continue;
      MarkEvent e{ev.kind, {}};
      if (ev.kind == MarkKind::MsgStart) {
        if (s_.message_depth > 0) return fail("nested <message> elements are not supported");
        e.id = ev.id_template;
        if (match && e.id.find("$1") != std::string::npos && match->groups.size() > 1) {
          e.id.replace(e.id.find("$1"), 2, match->groups[1]);
        }
        ++s_.message_depth;
      } else if (ev.kind == MarkKind::MsgEnd) {
        if (s_.message_depth == 0) return fail("message end without a matching message start");
        --s_.message_depth;
      }
      marks_.push_back({std::move(e), out_.size()});
    }
    if (rule.substitution) {
      emit(level, *rule.substitution);
    } else if (match) {
      emit(level, match->groups[0]);
    }
    s_.levels[level].ctx = rule.successor.apply(s_.levels[level].ctx);
    for (const auto& a : rule.actions) {
      if (a.kind == SubsidiaryAction::Kind::End) {
        close_sub(level);
      } else {
        if (has_sub(level)) return fail("internal error: table '" + table.name + "' starts '" + a.machine +
                                        "' while a subsidiary is active");
        int ti = m_.index_of(a.machine);
        s_.levels.push_back(Level{ti, m_.table(ti).zero, {}, a.codec});
      }
      if (s_.errored) return;
    }
  }
};

}  // namespace

StepResult step_fixed(const Machine& m, const MachineState& s, std::string_view chunk, const Position& pos) {
  count_op();
  if (s.errored) return {s, {}, {}, {}};
  Runner r(m, s, pos);
  r.feed(0, chunk, false);
  return {std::move(r.state()), std::move(r.out()), std::move(r.marks()), std::move(r.diagnostics())};
}

StepResult finish(const Machine& m, const MachineState& s, const Position& pos) {
  count_op();
  if (s.errored) return {s, {}, {}, {}};
  Runner r(m, s, pos);
  r.flush_all();
  return {std::move(r.state()), std::move(r.out()), std::move(r.marks()), std::move(r.diagnostics())};
}

InterpStep step_interp(const Machine& m, const MachineState& s, const Position& pos) {
  count_op();
  InterpStep step;
  if (s.errored) {
    step.context = s;
    step.successor = s;
    return step;
  }
  Runner r(m, s, pos);
  r.flush_all();
  r.interp_rules();
  auto& st = r.state();
  if (!st.errored) {
    std::vector<const EscaperRow*> rows;
    for (const auto& level : st.levels) {
      const auto& idx = m.index(level.table, level.ctx);
      if (idx.escaper < 0) {
        const auto& t = m.table(level.table);
        r.fail("interpolation not allowed in this context: " + t.name + t.format_context(level.ctx));
        break;
      }
      rows.push_back(&m.table(level.table).escapers[static_cast<std::size_t>(idx.escaper)]);
    }
    if (!st.errored) {
      std::string pre = rows.back()->pre;
      std::string post = rows.back()->post;
      for (std::size_t i = rows.size(); i-- > 0;) {
        if (i + 1 < rows.size()) {
          pre = rows[i]->pre + codec_encode(st.levels[i + 1].codec, pre);
          post = codec_encode(st.levels[i + 1].codec, post) + rows[i]->post;
        }
        step.escapers.insert(step.escapers.end(), rows[i]->chain.begin(), rows[i]->chain.end());
      }
      step.context = st;
      r.out() += pre;
      step.pre = std::move(r.out());
      step.pre_marks = std::move(r.marks());
      r.out() = post;
      r.marks().clear();
      for (std::size_t i = 0; i < rows.size(); ++i) st.levels[i].ctx = rows[i]->successor.apply(st.levels[i].ctx);
      for (std::size_t i = 0; i < st.levels.size() && !st.errored; ++i) r.epsilon_closure(i);
      step.post = std::move(r.out());
      step.post_marks = std::move(r.marks());
    }
  }
  step.in_message = st.message_depth > 0;
  if (st.errored) {
    step.context = st;
    step.escapers.clear();
    step.pre.clear();
    step.post.clear();
    step.pre_marks.clear();
    step.post_marks.clear();
  }
  step.diagnostics = std::move(r.diagnostics());
  step.successor = std::move(st);
  return step;
}

MachineState merge(const Machine& m, const MachineState& a, const MachineState& b) {
  count_op();
  if (a.errored) return a;
  if (b.errored) return b;
  if (a == b) return a;
  std::vector<std::string> conflicts;
  if (a.levels.size() != b.levels.size()) {
    conflicts.push_back("subsidiary depth: " + std::to_string(a.depth()) + " vs " + std::to_string(b.depth()));
  } else {
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
      const auto& la = a.levels[i];
      const auto& lb = b.levels[i];
      if (la.table != lb.table || la.codec != lb.codec) {
        conflicts.push_back("subsidiary machine: " + m.table(la.table).name + " vs " + m.table(lb.table).name);
        continue;
      }
      const auto& t = m.table(la.table);
      std::string prefix = i == 0 ? "" : t.name + ".";
      for (std::size_t f = 0; f < t.fields.size(); ++f) {
        if (la.ctx[f] != lb.ctx[f])
          conflicts.push_back(prefix + t.fields[f].name + ": " + t.fields[f].values[la.ctx[f]] + " vs " +
                              t.fields[f].values[lb.ctx[f]]);
      }
      if (la.pending != lb.pending) conflicts.push_back(prefix + "unresolved text: '" + la.pending + "' vs '" + lb.pending + "'");
    }
  }
  if (a.message_depth != b.message_depth) conflicts.push_back("open message: " + std::to_string(a.message_depth) + " vs " + std::to_string(b.message_depth));
  MachineState out = a;
  out.errored = true;
  out.error = "context conflict at join: ";
  for (std::size_t i = 0; i < conflicts.size(); ++i) out.error += (i ? "; " : "") + conflicts[i];
  return out;
}

EndCheck is_valid_end(const Machine& m, const MachineState& s) {
  if (s.errored) return {false, s.error};
  MachineState f = s;
  if (s.has_pending()) {
    auto r = finish(m, s, {});
    if (r.state.errored) return {false, r.state.error};
    f = std::move(r.state);
  }
  const auto& t = m.root();
  bool terminal = t.terminal.empty();
  for (const auto& p : t.terminal) terminal = terminal || p.matches(f.context());
  if (!terminal) {
    for (const auto& [p, msg] : t.end_messages) {
      if (p.matches(f.context())) return {false, "fragment ends in context " + t.format_context(f.context()) + ": " + msg};
    }
    return {false, "fragment ends in non-terminal context " + t.format_context(f.context())};
  }
  if (f.depth() > 0) return {false, "fragment ends inside " + m.table(f.levels[1].table).name + " content"};
  if (f.message_depth > 0) return {false, "fragment ends inside an open message"};
  return {true, {}};
}

}  // namespace autoesc
