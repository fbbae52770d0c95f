#include <algorithm>
#include <set>
#include <sstream>

#include "autoesc/codec.hpp"
#include "autoesc/escapers.hpp"
#include "autoesc/transition.hpp"

namespace autoesc {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Splits on `sep`, ignoring separators inside backtick quotes.
std::vector<std::string> split_outside_ticks(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  bool in_tick = false;
  for (char c : s) {
    if (c == '`') in_tick = !in_tick;
    if (c == sep && !in_tick) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

class TableParser {
 public:
  TableParser(std::string_view text, std::string file) : text_(text) { table_.file = std::move(file); }

  TableParseResult run() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    enum class Section { Preamble, Rules, Escapers } section = Section::Preamble;
    while (std::getline(in, raw)) {
      ++line_;
      std::string l = trim(raw);
      if (l.empty() || l[0] == '#') continue;
      if (l == "[rules]") {
        section = Section::Rules;
        continue;
      }
      if (l == "[escapers]") {
        section = Section::Escapers;
        continue;
      }
      switch (section) {
        case Section::Preamble: preamble(l); break;
        case Section::Rules: rule_row(l); break;
        case Section::Escapers: escaper_row(l); break;
      }
    }
    if (table_.name.empty()) error("table has no 'machine:' declaration");
    if (table_.fields.empty()) error("table declares no fields");
    TableParseResult r;
    r.diagnostics = std::move(diags_);
    if (!has_errors(r.diagnostics)) r.table = std::move(table_);
    return r;
  }

 private:
  std::string_view text_;
  TransitionTable table_;
  Diagnostics diags_;
  int line_ = 0;
  int rule_count_ = 0;

  void error(std::string msg) { diags_.push_back(make_error(std::move(msg), {table_.file, line_, 1})); }

  std::optional<std::string> key_value(const std::string& l, std::string_view key) {
    if (l.rfind(key, 0) != 0) return std::nullopt;
    return trim(std::string_view(l).substr(key.size()));
  }

  void preamble(const std::string& l) {
    if (auto v = key_value(l, "machine:")) {
      table_.name = *v;
    } else if (auto v = key_value(l, "language:")) {
      table_.language = *v;
    } else if (auto v = key_value(l, "field ")) {
      auto colon = v->find(':');
      if (colon == std::string::npos) return error("field declaration needs ':'");
      if (table_.fields.size() == kMaxFields) return error("at most 4 fields are supported");
      FieldDecl f{trim(v->substr(0, colon)), split_ws(v->substr(colon + 1))};
      if (f.values.empty() || f.values.size() > 255) return error("field '" + f.name + "' needs 1..255 values");
      table_.fields.push_back(std::move(f));
    } else if (auto v = key_value(l, "zero:")) {
      auto p = pattern(*v, false);
      if (p) {
        for (std::size_t i = 0; i < table_.fields.size(); ++i) table_.zero[i] = static_cast<std::uint8_t>(p->slots[i]);
      }
    } else if (auto v = key_value(l, "terminal:")) {
      if (auto p = pattern(*v, true)) table_.terminal.push_back(*p);
    } else if (auto v = key_value(l, "endmsg:")) {
      auto bar = v->find('|');
      if (bar == std::string::npos) return error("endmsg needs 'pattern | message'");
      if (auto p = pattern(v->substr(0, bar), true)) table_.end_messages.emplace_back(*p, trim(v->substr(bar + 1)));
    } else if (auto v = key_value(l, "macro ")) {
      auto eq = v->find('=');
      if (eq == std::string::npos) return error("macro declaration needs '='");
      table_.macros[trim(v->substr(0, eq))] = trim(v->substr(eq + 1));
    } else if (auto v = key_value(l, "subsidiary:")) {
      for (auto& s : split_ws(*v)) table_.subsidiaries.push_back(s);
    } else {
      error("unrecognized preamble line '" + l + "'");
    }
  }

  std::optional<ContextPattern> pattern(std::string_view cell, bool allow_wildcard) {
    auto parts = split_outside_ticks(cell, ',');
    if (parts.size() == 1 && parts[0] == "_" && allow_wildcard) return ContextPattern{};
    if (parts.size() != table_.fields.size()) {
      error("context pattern '" + trim(cell) + "' has " + std::to_string(parts.size()) + " slots, expected " +
            std::to_string(table_.fields.size()));
      return std::nullopt;
    }
    ContextPattern p;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (parts[i] == "_") {
        if (!allow_wildcard) {
          error("wildcard not allowed here");
          return std::nullopt;
        }
        continue;
      }
      const auto& vals = table_.fields[i].values;
      auto it = std::find(vals.begin(), vals.end(), parts[i]);
      if (it == vals.end()) {
        error("unknown " + table_.fields[i].name + " name '" + parts[i] + "'");
        return std::nullopt;
      }
      p.slots[i] = static_cast<int>(it - vals.begin());
    }
    return p;
  }

  std::optional<std::vector<std::string>> row_cells(const std::string& l) {
    if (l.front() != '|' || l.back() != '|' || l.size() < 2) {
      error("table row must start and end with '|'");
      return std::nullopt;
    }
    return split_outside_ticks(std::string_view(l).substr(1, l.size() - 2), '|');
  }

  static bool ticked(const std::string& cell) {
    return cell.size() >= 2 && cell.front() == '`' && cell.back() == '`';
  }

  void rule_row(const std::string& l) {
    auto cells = row_cells(l);
    if (!cells) return;
    if (cells->size() != 4 && cells->size() != 5) return error("rule row needs 4 or 5 columns");
    TransitionRule rule;
    rule.line = line_;
    rule.row = ++rule_count_;
    auto pat = pattern((*cells)[0], true);
    if (!pat) return;
    rule.pattern = *pat;

    const std::string& trig = (*cells)[1];
    if (trig.empty()) {
      rule.trigger = TriggerKind::Epsilon;
    } else if (trig == "interp") {
      rule.trigger = TriggerKind::Interp;
    } else if (ticked(trig)) {
      rule.trigger = TriggerKind::Regex;
      try {
        rule.regex = rx::Pattern::compile(trig.substr(1, trig.size() - 2), table_.macros);
      } catch (const rx::RegexError& e) {
        return error(std::string("malformed regex: ") + e.what());
      }
      rule.guarded = rule.regex.zero_width();
    } else {
      return error("trigger must be a `regex`, 'interp' or empty");
    }

    if (!substitution((*cells)[2], rule)) return;

    auto succ_parts = split_outside_ticks((*cells)[3], ';');
    auto succ = pattern(succ_parts[0], true);
    if (!succ) return;
    rule.successor = *succ;
    for (std::size_t i = 1; i < succ_parts.size(); ++i) {
      if (!action(succ_parts[i], rule)) return;
    }

    if (cells->size() == 5 && !(*cells)[4].empty()) {
      const std::string& d = (*cells)[4];
      if (d.size() < 2 || d[1] != ':' || (d[0] != 'W' && d[0] != 'E'))
        return error("diagnostic column must read 'W: message' or 'E: message'");
      rule.diagnostic = RuleDiagnostic{d[0] == 'E' ? Severity::Error : Severity::Warning, trim(d.substr(2))};
    }

    if ((rule.trigger == TriggerKind::Epsilon || rule.guarded) && !changes_context(rule)) {
      return error("epsilon rule at row " + std::to_string(rule.row) + " has a successor identical to its context");
    }
    table_.rules.push_back(std::move(rule));
  }

  bool changes_context(const TransitionRule& r) const {
    for (std::size_t i = 0; i < table_.fields.size(); ++i) {
      int s = r.successor.slots[i];
      if (s == ContextPattern::kWildcard) continue;
      if (r.pattern.slots[i] != s) return true;
    }
    return false;
  }

  bool substitution(const std::string& cell, TransitionRule& rule) {
    std::string rest = cell;
    if (!rest.empty() && rest.front() == '`') {
      auto close = rest.find('`', 1);
      if (close == std::string::npos) {
        error("unterminated substitution");
        return false;
      }
      rule.substitution = rest.substr(1, close - 1);
      rest = trim(rest.substr(close + 1));
    }
    if (rest.empty()) return true;
    if (rest.front() != '[' || rest.back() != ']') {
      error("substitution column must be `text` and/or [events]");
      return false;
    }
    for (auto& ev : split_outside_ticks(std::string_view(rest).substr(1, rest.size() - 2), ',')) {
      std::string name = ev;
      std::string arg;
      auto paren = ev.find('(');
      if (paren != std::string::npos) {
        if (ev.back() != ')') {
          error("malformed event '" + ev + "'");
          return false;
        }
        name = trim(ev.substr(0, paren));
        arg = trim(ev.substr(paren + 1, ev.size() - paren - 2));
      }
      auto kind = parse_mark_kind(name);
      if (!kind) {
        error("unknown event '" + name + "'");
        return false;
      }
      rule.events.push_back({*kind, arg});
    }
    if (!rule.substitution) rule.substitution = std::string();
    return true;
  }

  bool action(const std::string& a, TransitionRule& rule) {
    if (a == "end") {
      rule.actions.push_back({SubsidiaryAction::Kind::End, {}, {}});
      return true;
    }
    if (a.rfind("start(", 0) == 0 && a.back() == ')') {
      auto args = split_outside_ticks(std::string_view(a).substr(6, a.size() - 7), ',');
      if (args.size() != 2) {
        error("start(...) takes a machine and a codec");
        return false;
      }
      if (!find_codec(args[1])) {
        error("unknown codec '" + args[1] + "'");
        return false;
      }
      rule.actions.push_back({SubsidiaryAction::Kind::Start, args[0], args[1]});
      return true;
    }
    error("unknown subsidiary action '" + a + "'");
    return false;
  }

  std::string text_cell(const std::string& cell) {
    if (cell.empty()) return {};
    if (!ticked(cell)) {
      error("expected `text` but found '" + cell + "'");
      return {};
    }
    return cell.substr(1, cell.size() - 2);
  }

  void escaper_row(const std::string& l) {
    auto cells = row_cells(l);
    if (!cells) return;
    if (cells->size() < 2 || cells->size() > 5) return error("escaper row needs 2 to 5 columns");
    cells->resize(5);
    EscaperRow row;
    row.line = line_;
    auto pat = pattern((*cells)[0], true);
    if (!pat) return;
    row.pattern = *pat;
    if ((*cells)[1] != "-") {
      for (auto& name : split_outside_ticks((*cells)[1], ',')) {
        if (!find_escaper(name)) return error("unknown escaper name '" + name + "'");
        row.chain.push_back(name);
      }
    }
    if (!(*cells)[2].empty()) {
      auto succ = pattern((*cells)[2], true);
      if (!succ) return;
      row.successor = *succ;
    }
    row.pre = text_cell((*cells)[3]);
    row.post = text_cell((*cells)[4]);
    table_.escapers.push_back(std::move(row));
  }
};

}  // namespace

std::string_view mark_kind_name(MarkKind k) {
  switch (k) {
    case MarkKind::MsgStart: return "MsgStart";
    case MarkKind::MsgEnd: return "MsgEnd";
    case MarkKind::ExprStart: return "ExprStart";
    case MarkKind::ExprEnd: return "ExprEnd";
  }
  return "";
}

std::optional<MarkKind> parse_mark_kind(std::string_view name) {
  for (auto k : {MarkKind::MsgStart, MarkKind::MsgEnd, MarkKind::ExprStart, MarkKind::ExprEnd})
    if (mark_kind_name(k) == name) return k;
  return std::nullopt;
}

TableParseResult parse_table(std::string_view text, std::string file) {
  return TableParser(text, std::move(file)).run();
}

Diagnostics validate_table(const TransitionTable& t) {
  Diagnostics out;
  auto at = [&](int line) { return Position{t.file, line, 1}; };

  for (const auto& r : t.rules) {
    for (const auto& a : r.actions) {
      if (a.kind == SubsidiaryAction::Kind::Start &&
          std::find(t.subsidiaries.begin(), t.subsidiaries.end(), a.machine) == t.subsidiaries.end()) {
        out.push_back(make_error("row " + std::to_string(r.row) + " starts undeclared subsidiary machine '" +
                                     a.machine + "'",
                                 at(r.line)));
      }
    }
    if (r.trigger == TriggerKind::Regex && !r.guarded && r.regex.min_length() == 0) {
      out.push_back(make_warning("row " + std::to_string(r.row) + " may match the empty string", at(r.line)));
    }
  }

  for (std::size_t j = 0; j < t.rules.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto& a = t.rules[i];
      const auto& b = t.rules[j];
      if (a.trigger != b.trigger || !(a.pattern == b.pattern)) continue;
      if (a.trigger == TriggerKind::Regex && a.regex.expanded() != b.regex.expanded()) continue;
      out.push_back(make_warning("row " + std::to_string(b.row) + " is shadowed by row " + std::to_string(a.row),
                                 at(b.line)));
      break;
    }
  }

  // Follow first-matching epsilon rules from every context.
  std::set<std::vector<int>> reported;
  for (std::size_t ci = 0; ci < t.context_count(); ++ci) {
    Context c = t.context_at(ci);
    std::vector<std::pair<Context, int>> path;
    while (true) {
      const TransitionRule* hit = nullptr;
      for (const auto& r : t.rules) {
        if (r.trigger == TriggerKind::Epsilon && r.pattern.matches(c)) {
          hit = &r;
          break;
        }
      }
      if (!hit) break;
      auto seen = std::find_if(path.begin(), path.end(), [&](const auto& p) { return p.first == c; });
      if (seen != path.end()) {
        std::vector<int> rows;
        for (auto it = seen; it != path.end(); ++it) rows.push_back(it->second);
        std::sort(rows.begin(), rows.end());
        rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
        if (reported.insert(rows).second) {
          std::string list;
          for (int row : rows) list += (list.empty() ? "" : ", ") + std::to_string(row);
          out.push_back(make_error("epsilon cycle through rows " + list, at(t.rules[rows.front() - 1].line)));
        }
        break;
      }
      path.emplace_back(c, hit->row);
      c = hit->successor.apply(c);
    }
  }
  return out;
}

}  // namespace autoesc
