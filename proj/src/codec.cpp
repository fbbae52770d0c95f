#include "autoesc/codec.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace autoesc {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool valid_scalar(char32_t cp) { return cp != 0 && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF); }

// Parses the body of `&#...;` (without `&#` and `;`). Returns false if malformed.
bool numeric_reference(std::string_view body, char32_t& cp) {
  bool hex = !body.empty() && (body[0] == 'x' || body[0] == 'X');
  if (hex) body.remove_prefix(1);
  if (body.empty() || body.size() > 8) return false;
  std::uint64_t value = 0;
  for (char c : body) {
    int d = hex ? hex_digit(c) : (c >= '0' && c <= '9' ? c - '0' : -1);
    if (d < 0) return false;
    value = value * (hex ? 16 : 10) + static_cast<unsigned>(d);
  }
  if (value > 0x10FFFF) return false;
  cp = static_cast<char32_t>(value);
  return valid_scalar(cp);
}

std::string raw_identity(std::string_view text, Diagnostics*) { return std::string(text); }
std::string raw_identity_encode(std::string_view text) { return std::string(text); }

std::vector<Codec> build_registry() {
  std::vector<Codec> codecs;
  codecs.push_back({"htmlCodec", &html_decode, &html_encode,
                    rx::Pattern::compile("&(?:#[xX]?[0-9a-zA-Z]*;|[a-zA-Z][a-zA-Z0-9]*;)")});
  codecs.push_back({"cssStringCodec", &css_string_decode, &css_string_encode,
                    rx::Pattern::compile("\\\\(?:[0-9a-fA-F]+[ \\t\\n]?|.)")});
  codecs.push_back({"rawCodec", &raw_identity, &raw_identity_encode, std::nullopt});
  return codecs;
}

const std::vector<Codec>& registry() {
  static const std::vector<Codec> kCodecs = build_registry();
  return kCodecs;
}

}  // namespace

const Codec* find_codec(std::string_view name) {
  for (const auto& c : registry())
    if (c.name == name) return &c;
  return nullptr;
}

std::string codec_decode(std::string_view name, std::string_view text, Diagnostics* warnings) {
  const Codec* c = find_codec(name);
  if (!c) throw std::invalid_argument("unknown codec '" + std::string(name) + "'");
  return c->decode(text, warnings);
}

std::string codec_encode(std::string_view name, std::string_view text) {
  const Codec* c = find_codec(name);
  if (!c) throw std::invalid_argument("unknown codec '" + std::string(name) + "'");
  return c->encode(text);
}

std::string html_decode(std::string_view text, Diagnostics* warnings) {
  static constexpr std::array<std::pair<std::string_view, char>, 5> kNamed{{
      {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}}};
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }
    auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos) {
      out += text[i++];
      continue;
    }
    std::string_view body = text.substr(i + 1, semi - i - 1);
    if (!body.empty() && body[0] == '#') {
      char32_t cp = 0;
      if (numeric_reference(body.substr(1), cp)) {
        append_utf8(out, cp);
      } else {
        if (warnings)
          warnings->push_back(make_warning("malformed numeric character reference '&" +
                                           std::string(body) + ";' copied verbatim"));
        out.append(text.substr(i, semi - i + 1));
      }
      i = semi + 1;
      continue;
    }
    bool named = false;
    for (const auto& [name, ch] : kNamed) {
      if (body == name) {
        out += ch;
        named = true;
        break;
      }
    }
    if (named) {
      i = semi + 1;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string html_encode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string css_string_decode(std::string_view text, Diagnostics*) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\\' || i + 1 >= text.size()) {
      out += text[i++];
      continue;
    }
    ++i;
    if (hex_digit(text[i]) >= 0) {
      char32_t cp = 0;
      int n = 0;
      while (i < text.size() && n < 6 && hex_digit(text[i]) >= 0) {
        cp = cp * 16 + static_cast<char32_t>(hex_digit(text[i++]));
        ++n;
      }
      if (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n')) ++i;
      append_utf8(out, valid_scalar(cp) ? cp : U'�');
    } else if (text[i] == '\n') {
      ++i;  // line continuation
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::string css_string_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    bool escape = c < 0x20 || c == 0x7f || c == '"' || c == '\'' || c == '\\' || c == '<' ||
                  c == '>' || c == '&';
    if (!escape) {
      out += ch;
      continue;
    }
    out += '\\';
    if (c >= 0x10) out += kHex[c >> 4];
    out += kHex[c & 0xF];
    out += ' ';
  }
  return out;
}

}  // namespace autoesc
