#include <algorithm>
#include <set>

#include "autoesc/i18n.hpp"
#include "json.hpp"

namespace autoesc {

namespace {

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    if (c == '{' || c == '}') out += c;
    out += c;
  }
}

struct Piece {
  bool placeholder = false;
  std::string text;  // literal text, or the placeholder number
};

std::vector<Piece> parse_pattern(std::string_view p) {
  std::vector<Piece> out;
  std::string lit;
  for (std::size_t i = 0; i < p.size(); ++i) {
    char c = p[i];
    if ((c == '{' || c == '}') && i + 1 < p.size() && p[i + 1] == c) {
      lit += c;
      ++i;
    } else if (c == '{') {
      auto close = p.find('}', i);
      if (close == std::string_view::npos) throw I18nError("unterminated placeholder in '" + std::string(p) + "'");
      std::string num(p.substr(i + 1, close - i - 1));
      if (num.empty() || !std::all_of(num.begin(), num.end(), [](char d) { return d >= '0' && d <= '9'; }))
        throw I18nError("malformed placeholder '{" + num + "}'");
      if (!lit.empty()) out.push_back({false, std::move(lit)});
      lit.clear();
      out.push_back({true, std::to_string(std::stoul(num))});
      i = close;
    } else if (c == '}') {
      throw I18nError("unbalanced '}' in '" + std::string(p) + "'");
    } else {
      lit += c;
    }
  }
  if (!lit.empty()) out.push_back({false, std::move(lit)});
  return out;
}

}  // namespace

Extraction extract_messages(std::string_view buffer, const std::vector<Mark>& marks) {
  Extraction ex;
  MessageSpan* open = nullptr;
  bool in_expr = false;
  std::size_t expr_begin = 0;
  std::size_t last = 0;
  for (const auto& m : marks) {
    if (m.offset > buffer.size()) throw I18nError("mark offset past end of buffer");
    if (m.offset < last) throw I18nError("marks are not in buffer order");
    last = m.offset;
    switch (m.event.kind) {
      case MarkKind::MsgStart:
        if (open) throw I18nError("message '" + m.event.id + "' starts inside message '" + open->id + "'");
        ex.spans.push_back({m.event.id, m.offset, m.offset, {}});
        open = &ex.spans.back();
        break;
      case MarkKind::MsgEnd:
        if (!open) throw I18nError("message end without a message start");
        if (in_expr) throw I18nError("message '" + open->id + "' ends inside an interpolation");
        open->end = m.offset;
        open = nullptr;
        break;
      case MarkKind::ExprStart:
        if (!open) throw I18nError("interpolation mark outside a message");
        if (in_expr) throw I18nError("overlapping interpolation spans in message '" + open->id + "'");
        in_expr = true;
        expr_begin = m.offset;
        break;
      case MarkKind::ExprEnd:
        if (!open || !in_expr) throw I18nError("interpolation end without a start");
        in_expr = false;
        open->exprs.emplace_back(expr_begin, m.offset);
        break;
    }
  }
  if (open) throw I18nError("message '" + open->id + "' is never closed");
  for (const auto& s : ex.spans) {
    auto pattern = reference_pattern(buffer, s);
    auto [it, inserted] = ex.bundle.emplace(s.id, pattern);
    if (!inserted && it->second != pattern)
      throw I18nError("message '" + s.id + "' appears with different reference texts");
  }
  return ex;
}

std::string reference_pattern(std::string_view buffer, const MessageSpan& span) {
  std::string out;
  std::size_t at = span.begin;
  for (std::size_t i = 0; i < span.exprs.size(); ++i) {
    append_escaped(out, buffer.substr(at, span.exprs[i].first - at));
    out += "{" + std::to_string(i) + "}";
    at = span.exprs[i].second;
  }
  append_escaped(out, buffer.substr(at, span.end - at));
  return out;
}

std::string apply_translation(std::string_view buffer, const MessageSpan& span, std::string_view translated) {
  auto pieces = parse_pattern(translated);
  std::vector<std::size_t> seen;
  for (const auto& p : pieces)
    if (p.placeholder) seen.push_back(std::stoul(p.text));
  std::vector<std::string> problems;
  std::set<std::size_t> uniq;
  for (auto n : seen) {
    if (n >= span.exprs.size()) problems.push_back("extra placeholder {" + std::to_string(n) + "}");
    if (!uniq.insert(n).second) problems.push_back("repeated placeholder {" + std::to_string(n) + "}");
  }
  for (std::size_t n = 0; n < span.exprs.size(); ++n)
    if (!uniq.count(n)) problems.push_back("missing placeholder {" + std::to_string(n) + "}");
  if (!problems.empty()) {
    std::string msg = "translation of '" + span.id + "' does not match its reference:";
    for (const auto& p : problems) msg += " " + p + ";";
    msg.pop_back();
    throw I18nError(msg);
  }
  std::string out;
  for (const auto& p : pieces) {
    if (p.placeholder) {
      const auto& [b, e] = span.exprs[std::stoul(p.text)];
      out += buffer.substr(b, e - b);
    } else {
      out += p.text;
    }
  }
  return out;
}

std::string translate_buffer(std::string_view buffer, const std::vector<Mark>& marks,
                             const MessageBundle& translations) {
  auto ex = extract_messages(buffer, marks);
  std::string out;
  std::size_t at = 0;
  for (const auto& s : ex.spans) {
    out += buffer.substr(at, s.begin - at);
    auto it = translations.find(s.id);
    out += it == translations.end() ? std::string(buffer.substr(s.begin, s.end - s.begin))
                                    : apply_translation(buffer, s, it->second);
    at = s.end;
  }
  out += buffer.substr(at);
  return out;
}

std::string bundle_to_json(const MessageBundle& bundle) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [id, text] : bundle) j[id] = text;
  return j.dump(2) + "\n";
}

MessageBundle bundle_from_json(std::string_view json_text) {
  try {
    auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw I18nError("bundle must be a JSON object");
    MessageBundle out;
    for (const auto& [k, v] : j.items()) out[k] = v.get<std::string>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw I18nError(std::string("malformed bundle: ") + e.what());
  }
}

}  // namespace autoesc
