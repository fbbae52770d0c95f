#include "html_tokenizer.hpp"

#include <cctype>

namespace oracle {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\f' || c == '\r'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

void put_utf8(std::string& out, unsigned long cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
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

}  // namespace

std::string decode_entities(std::string_view s, bool in_attribute) {
  static const struct {
    const char* name;
    const char* text;
  } kNamed[] = {{"amp;", "&"}, {"lt;", "<"}, {"gt;", ">"}, {"quot;", "\""}, {"apos;", "'"}, {"nbsp;", "\xC2\xA0"}};
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    std::string_view rest = s.substr(i + 1);
    bool done = false;
    if (!rest.empty() && rest[0] == '#') {
      std::size_t j = 1;
      int base = 10;
      if (j < rest.size() && (rest[j] == 'x' || rest[j] == 'X')) {
        base = 16;
        ++j;
      }
      std::size_t start = j;
      unsigned long cp = 0;
      while (j < rest.size() && std::isxdigit(static_cast<unsigned char>(rest[j])) &&
             (base == 16 || std::isdigit(static_cast<unsigned char>(rest[j])))) {
        cp = cp * static_cast<unsigned long>(base) +
             static_cast<unsigned long>(std::isdigit(static_cast<unsigned char>(rest[j])) ? rest[j] - '0'
                                                                                          : lower(rest[j]) - 'a' + 10);
        if (cp > 0x10FFFF) cp = 0x110000;
        ++j;
      }
      if (j > start) {
        if (j < rest.size() && rest[j] == ';') ++j;
        put_utf8(out, cp);
        i += 1 + j;
        done = true;
      }
    } else {
      for (const auto& n : kNamed) {
        std::string_view name = n.name;
        if (rest.substr(0, name.size()) == name) {
          out += n.text;
          i += 1 + name.size();
          done = true;
          break;
        }
        // Legacy references without ';'. Inside attributes they stay literal
        // when followed by an alphanumeric or '='.
        std::string_view bare = name.substr(0, name.size() - 1);
        if (bare != "apos" && rest.substr(0, bare.size()) == bare) {
          char next = bare.size() < rest.size() ? rest[bare.size()] : '\0';
          if (in_attribute && (std::isalnum(static_cast<unsigned char>(next)) || next == '=')) break;
          out += n.text;
          i += 1 + bare.size();
          done = true;
          break;
        }
      }
    }
    if (!done) out += s[i++];
  }
  return out;
}

std::vector<Token> tokenize(std::string_view in) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = in.size();
  std::string raw_end;  // "script"/"style" while in raw text
  std::size_t text_begin = 0;

  auto flush_text = [&](std::size_t end) {
    if (end > text_begin) {
      Token t;
      t.kind = Token::Kind::Text;
      t.begin = text_begin;
      t.end = end;
      t.text = raw_end.empty() ? decode_entities(in.substr(text_begin, end - text_begin))
                               : std::string(in.substr(text_begin, end - text_begin));
      out.push_back(std::move(t));
      text_begin = end;
    }
  };

  while (i < n) {
    if (!raw_end.empty()) {
      // Raw text ends only at "</name" followed by whitespace, '/' or '>'.
      if (in[i] == '<' && i + 1 < n && in[i + 1] == '/' && i + 2 + raw_end.size() <= n) {
        bool match = true;
        for (std::size_t k = 0; k < raw_end.size(); ++k)
          if (lower(in[i + 2 + k]) != raw_end[k]) match = false;
        std::size_t after = i + 2 + raw_end.size();
        if (match && after < n && (is_ws(in[after]) || in[after] == '/' || in[after] == '>')) {
          flush_text(i);
          raw_end.clear();
          goto tag_open;
        }
      }
      ++i;
      continue;
    }
    if (in[i] != '<') {
      ++i;
      continue;
    }
  tag_open : {
    std::size_t lt = i;
    if (i + 1 >= n) {
      ++i;
      continue;
    }
    char c = in[i + 1];
    if (c == '!') {
      flush_text(lt);
      Token t;
      t.begin = lt;
      if (in.substr(i + 2, 2) == "--") {
        t.kind = Token::Kind::Comment;
        std::size_t body = i + 4;
        std::size_t close;
        // "<!-->" and "<!--->" close immediately.
        if (in.substr(body, 1) == ">") {
          close = body;
          t.end = body + 1;
        } else if (in.substr(body, 2) == "->") {
          close = body + 1;
          t.end = body + 2;
        } else {
          close = in.find("-->", body);
          t.end = close == std::string_view::npos ? n : close + 3;
        }
        if (close != std::string_view::npos && close >= body) t.text = std::string(in.substr(body, close - body));
      } else {
        auto gt = in.find('>', i);
        t.end = gt == std::string_view::npos ? n : gt + 1;
        std::string head;
        for (std::size_t k = i + 2; k < std::min(n, i + 9); ++k) head += lower(in[k]);
        t.kind = head == "doctype" ? Token::Kind::Doctype : Token::Kind::Comment;
      }
      out.push_back(std::move(t));
      i = out.back().end;
      text_begin = i;
      continue;
    }
    if (c == '?') {
      flush_text(lt);
      Token t;
      t.kind = Token::Kind::Comment;
      t.begin = lt;
      auto gt = in.find('>', i);
      t.end = gt == std::string_view::npos ? n : gt + 1;
      out.push_back(std::move(t));
      i = out.back().end;
      text_begin = i;
      continue;
    }
    bool end_tag = false;
    std::size_t j = i + 1;
    if (c == '/') {
      end_tag = true;
      ++j;
      if (j < n && in[j] == '>') {  // "</>" is dropped
        flush_text(lt);
        i = j + 1;
        text_begin = i;
        continue;
      }
      if (j < n && !is_alpha(in[j])) {  // bogus comment
        flush_text(lt);
        Token t;
        t.kind = Token::Kind::Comment;
        t.begin = lt;
        auto gt = in.find('>', j);
        t.end = gt == std::string_view::npos ? n : gt + 1;
        out.push_back(std::move(t));
        i = out.back().end;
        text_begin = i;
        continue;
      }
    }
    if (j >= n || !is_alpha(in[j])) {
      ++i;  // a lone '<' is text
      continue;
    }
    flush_text(lt);
    Token t;
    t.kind = end_tag ? Token::Kind::EndTag : Token::Kind::StartTag;
    t.begin = lt;
    while (j < n && !is_ws(in[j]) && in[j] != '/' && in[j] != '>') t.name += lower(in[j++]);
    // Attributes.
    bool closed = false;
    while (j < n && !closed) {
      while (j < n && (is_ws(in[j]) || (in[j] == '/' && !(j + 1 < n && in[j + 1] == '>')))) ++j;
      if (j >= n) break;
      if (in[j] == '/' && j + 1 < n && in[j + 1] == '>') {
        t.self_closing = true;
        j += 2;
        closed = true;
        break;
      }
      if (in[j] == '>') {
        ++j;
        closed = true;
        break;
      }
      Attribute a;
      a.name_begin = j;
      // The first character may be '=' (parse error, kept in the name).
      a.name += lower(in[j++]);
      while (j < n && !is_ws(in[j]) && in[j] != '/' && in[j] != '>' && in[j] != '=') a.name += lower(in[j++]);
      std::size_t k = j;
      while (k < n && is_ws(in[k])) ++k;
      if (k < n && in[k] == '=') {
        j = k + 1;
        while (j < n && is_ws(in[j])) ++j;
        a.has_value = true;
        if (j < n && (in[j] == '"' || in[j] == '\'')) {
          a.quote = in[j];
          a.open_quote = j;
          auto close = in.find(a.quote, j + 1);
          std::size_t vend = close == std::string_view::npos ? n : close;
          a.value = decode_entities(in.substr(j + 1, vend - j - 1), true);
          a.close_quote = close == std::string_view::npos ? std::string::npos : close;
          j = close == std::string_view::npos ? n : close + 1;
        } else if (j < n && in[j] == '>') {
          // missing value
        } else {
          std::size_t vb = j;
          while (j < n && !is_ws(in[j]) && in[j] != '>') ++j;
          a.value = decode_entities(in.substr(vb, j - vb), true);
        }
      } else {
        j = k;
      }
      bool dup = false;
      for (const auto& prev : t.attrs)
        if (prev.name == a.name) dup = true;
      if (dup)
        t.duplicate_attr = true;
      else
        t.attrs.push_back(std::move(a));
    }
    if (!closed) {  // EOF in tag: the tag is dropped
      i = n;
      text_begin = n;
      break;
    }
    t.end = j;
    if (t.kind == Token::Kind::StartTag && (t.name == "script" || t.name == "style")) raw_end = t.name;
    out.push_back(std::move(t));
    i = j;
    text_begin = i;
  }
  }
  flush_text(n);
  return out;
}

}  // namespace oracle
