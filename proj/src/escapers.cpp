#include "autoesc/escapers.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>
#include <cmath>

#include "autoesc/codec.hpp"

namespace autoesc {

namespace {

std::string format_number(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Infinity" : "-Infinity";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  return std::string(buf.data(), end);
}

bool ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool url_safe(unsigned char c) {
  if (ascii_alnum(c)) return true;
  static constexpr std::string_view kSafe = "-._~:/?#[]@!$&'()*+,;=%";
  return kSafe.find(static_cast<char>(c)) != std::string_view::npos;
}

void percent_encode(std::string& out, unsigned char c) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  out += '%';
  out += kHex[c >> 4];
  out += kHex[c & 0xF];
}

std::string html_escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size() + s.size() / 8);
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) out += "&quot;";
        else out += c;
        break;
      case '\'':
        if (attribute) out += "&#39;";
        else out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

void json_string(std::string& out, std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  out += '"';
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = static_cast<unsigned char>(s[i]);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '<': out += "\\u003c"; break;
      case '>': out += "\\u003e"; break;
      case '&': out += "\\u0026"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          out += "\\u00";
          out += kHex[c >> 4];
          out += kHex[c & 0xF];
        } else if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
                   (static_cast<unsigned char>(s[i + 2]) == 0xA8 ||
                    static_cast<unsigned char>(s[i + 2]) == 0xA9)) {
          // U+2028 / U+2029 terminate lines in older JavaScript parsers.
          out += static_cast<unsigned char>(s[i + 2]) == 0xA8 ? "\\u2028" : "\\u2029";
          i += 2;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void json_value(std::string& out, const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Text: json_string(out, v.str()); break;
    case Value::Kind::Number:
      if (!std::isfinite(v.num())) throw EscapeError("non-finite number has no JSON form");
      out += format_number(v.num());
      break;
    case Value::Kind::Boolean: out += v.flag() ? "true" : "false"; break;
    case Value::Kind::List: {
      out += '[';
      bool first = true;
      for (const auto& item : v.items()) {
        if (!first) out += ',';
        first = false;
        json_value(out, item);
      }
      out += ']';
      break;
    }
    case Value::Kind::Record: {
      out += '{';
      bool first = true;
      for (const auto& [k, item] : v.fields()) {
        if (!first) out += ',';
        first = false;
        json_string(out, k);
        out += ':';
        json_value(out, item);
      }
      out += '}';
      break;
    }
    case Value::Kind::Safe:
      throw EscapeError("SafeContent(" + v.safe_label() + ") cannot be embedded in a script context");
  }
}

const std::array<Escaper, 7>& registry() {
  static const std::array<Escaper, 7> kRegistry{{
      {"HtmlPcdataEscaper", &escape_pcdata, {"html"}},
      {"HtmlAttributeEscaper", &escape_html_attr, {}},
      {"UrlPrefixFilteringEscaper", &filter_url_prefix, {}},
      {"UrlComponentEscaper", &escape_url_component, {}},
      {"JsonValueEscaper", &escape_json_value, {}},
      {"CssStringEscaper", &escape_css_string, {}},
      {"IdentityEscaper", &identity_text, {}},
  }};
  return kRegistry;
}

}  // namespace

const Escaper* find_escaper(std::string_view name) {
  for (const auto& e : registry())
    if (e.name == name) return &e;
  return nullptr;
}

std::vector<std::string_view> escaper_names() {
  std::vector<std::string_view> names;
  for (const auto& e : registry()) names.push_back(e.name);
  return names;
}

std::string apply_chain(std::span<const Escaper* const> chain, const Value& v) {
  if (chain.empty()) return stringify(v);
  std::string text = chain.front()->apply(v);
  for (std::size_t i = 1; i < chain.size(); ++i) text = chain[i]->apply(Value::text(std::move(text)));
  return text;
}

std::string apply_chain(std::span<const std::string> names, const Value& v) {
  std::vector<const Escaper*> chain;
  for (const auto& n : names) {
    const Escaper* e = find_escaper(n);
    if (!e) throw EscapeError("unknown escaper '" + n + "'");
    chain.push_back(e);
  }
  return apply_chain(chain, v);
}

std::string stringify(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Text:
    case Value::Kind::Safe: return v.str();
    case Value::Kind::Number: return format_number(v.num());
    case Value::Kind::Boolean: return v.flag() ? "true" : "false";
    case Value::Kind::List: throw EscapeError("a list cannot be interpolated as text");
    case Value::Kind::Record: throw EscapeError("a record cannot be interpolated as text");
  }
  return {};
}

std::string escape_pcdata(const Value& v) {
  if (v.is_safe() && v.safe_label() == "html") return v.str();
  return html_escape(stringify(v), false);
}

std::string escape_html_attr(const Value& v) { return html_escape(stringify(v), true); }

std::string filter_url_prefix(const Value& v) {
  std::string s = stringify(v);
  auto delim = s.find_first_of(":/?#");
  if (delim != std::string::npos && s[delim] == ':') {
    std::string scheme = s.substr(0, delim);
    std::transform(scheme.begin(), scheme.end(), scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static constexpr std::array<std::string_view, 5> kAllowed{"http", "https", "mailto", "tel", "ftp"};
    if (std::find(kAllowed.begin(), kAllowed.end(), scheme) == kAllowed.end())
      return std::string(kBlockedUrl);
  }
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (url_safe(c)) out += ch;
    else percent_encode(out, c);
  }
  return out;
}

std::string escape_url_component(const Value& v) {
  std::string s = stringify(v);
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (ascii_alnum(c) || c == '-' || c == '.' || c == '_' || c == '~') out += ch;
    else percent_encode(out, c);
  }
  return out;
}

std::string escape_json_value(const Value& v) {
  std::string out;
  json_value(out, v);
  return out;
}

std::string escape_css_string(const Value& v) { return css_string_encode(stringify(v)); }

std::string identity_text(const Value& v) { return stringify(v); }

}  // namespace autoesc
