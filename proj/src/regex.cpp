#include "autoesc/regex.hpp"

#include <bitset>
#include <cctype>
#include <functional>
#include <limits>

namespace autoesc::rx {

using CharSet = std::bitset<256>;

struct Node {
  enum class Kind { Set, Group, Look, Repeat };
  Kind kind = Kind::Set;
  CharSet set;                                // Set
  std::vector<std::vector<Node>> alternatives;  // Group, Look
  int capture = -1;                           // Group: capture index or -1
  bool negative = false;                      // Look
  std::vector<Node> child;                    // Repeat: exactly one element
  int min = 0;
  int max = -1;  // -1 = unbounded
};

namespace {

std::string expand_macros(std::string_view src, const std::map<std::string, std::string>& macros) {
  std::string out;
  for (std::size_t i = 0; i < src.size();) {
    if (src.compare(i, 2, "{{") == 0) {
      auto close = src.find("}}", i + 2);
      if (close == std::string_view::npos) throw RegexError("unterminated macro reference");
      std::string name(src.substr(i + 2, close - i - 2));
      auto it = macros.find(name);
      if (it == macros.end()) throw RegexError("unknown macro '" + name + "'");
      out += it->second;
      i = close + 2;
    } else {
      out += src[i++];
    }
  }
  return out;
}

CharSet class_escape(char c, bool& ok) {
  CharSet s;
  ok = true;
  auto add_range = [&](int lo, int hi) {
    for (int ch = lo; ch <= hi; ++ch) s.set(static_cast<unsigned char>(ch));
  };
  switch (c) {
    case 'd': add_range('0', '9'); break;
    case 'D': add_range('0', '9'); s.flip(); break;
    case 's': for (char ch : std::string(" \t\n\r\f\v")) s.set(static_cast<unsigned char>(ch)); break;
    case 'S': for (char ch : std::string(" \t\n\r\f\v")) s.set(static_cast<unsigned char>(ch)); s.flip(); break;
    case 'w': add_range('a', 'z'); add_range('A', 'Z'); add_range('0', '9'); s.set('_'); break;
    case 'W': add_range('a', 'z'); add_range('A', 'Z'); add_range('0', '9'); s.set('_'); s.flip(); break;
    default: ok = false;
  }
  return s;
}

char simple_escape(char c) {
  switch (c) {
    case 'n': return '\n';
    case 't': return '\t';
    case 'r': return '\r';
    case 'f': return '\f';
    case 'v': return '\v';
    case '0': return '\0';
    default: return c;
  }
}

void fold_case(CharSet& s) {
  for (int c = 'a'; c <= 'z'; ++c) {
    int u = c - 'a' + 'A';
    if (s.test(c) || s.test(u)) {
      s.set(c);
      s.set(u);
    }
  }
}

class Parser {
 public:
  Parser(std::string_view src, bool icase) : src_(src), icase_(icase) {}

  std::vector<std::vector<Node>> parse_all(int& groups) {
    auto alts = parse_alternation();
    if (pos_ != src_.size()) throw RegexError("unbalanced ')' at offset " + std::to_string(pos_));
    groups = groups_;
    return alts;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  bool icase_;
  int groups_ = 0;

  bool eof() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  std::vector<std::vector<Node>> parse_alternation() {
    std::vector<std::vector<Node>> alts;
    alts.push_back(parse_sequence());
    while (!eof() && peek() == '|') {
      ++pos_;
      alts.push_back(parse_sequence());
    }
    return alts;
  }

  std::vector<Node> parse_sequence() {
    std::vector<Node> seq;
    while (!eof() && peek() != '|' && peek() != ')') {
      Node atom = parse_atom();
      while (!eof() && (peek() == '*' || peek() == '+' || peek() == '?')) {
        if (atom.kind == Node::Kind::Look) throw RegexError("quantifier applied to a lookaround");
        Node rep;
        rep.kind = Node::Kind::Repeat;
        char q = src_[pos_++];
        rep.min = q == '+' ? 1 : 0;
        rep.max = q == '?' ? 1 : -1;
        rep.child.push_back(std::move(atom));
        atom = std::move(rep);
      }
      seq.push_back(std::move(atom));
    }
    return seq;
  }

  Node make_set(CharSet s) {
    if (icase_) fold_case(s);
    Node n;
    n.kind = Node::Kind::Set;
    n.set = s;
    return n;
  }

  Node parse_atom() {
    char c = src_[pos_++];
    switch (c) {
      case '*':
      case '+':
      case '?':
        throw RegexError("dangling quantifier at offset " + std::to_string(pos_ - 1));
      case '.': {
        CharSet s;
        s.set();
        return make_set(s);
      }
      case '[':
        return make_set(parse_class());
      case '(':
        return parse_group();
      case '\\': {
        if (eof()) throw RegexError("trailing backslash");
        char e = src_[pos_++];
        bool ok = false;
        CharSet s = class_escape(e, ok);
        if (ok) return make_set(s);
        if (e == 'x') return make_set(single(parse_hex()));
        return make_set(single(simple_escape(e)));
      }
      default:
        return make_set(single(c));
    }
  }

  static CharSet single(char c) {
    CharSet s;
    s.set(static_cast<unsigned char>(c));
    return s;
  }

  char parse_hex() {
    if (pos_ + 2 > src_.size()) throw RegexError("truncated \\x escape");
    auto hexval = [](char h) -> int {
      if (h >= '0' && h <= '9') return h - '0';
      if (h >= 'a' && h <= 'f') return h - 'a' + 10;
      if (h >= 'A' && h <= 'F') return h - 'A' + 10;
      return -1;
    };
    int hi = hexval(src_[pos_]), lo = hexval(src_[pos_ + 1]);
    if (hi < 0 || lo < 0) throw RegexError("malformed \\x escape");
    pos_ += 2;
    return static_cast<char>(hi * 16 + lo);
  }

  CharSet parse_class() {
    CharSet s;
    bool negate = false;
    if (!eof() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    bool first = true;
    while (true) {
      if (eof()) throw RegexError("unterminated character class");
      char c = src_[pos_++];
      if (c == ']' && !first) break;
      first = false;
      int lo;
      if (c == '\\') {
        if (eof()) throw RegexError("trailing backslash in class");
        char e = src_[pos_++];
        bool ok = false;
        CharSet esc = class_escape(e, ok);
        if (ok) {
          s |= esc;
          continue;
        }
        lo = static_cast<unsigned char>(e == 'x' ? parse_hex() : simple_escape(e));
      } else {
        lo = static_cast<unsigned char>(c);
      }
      if (pos_ + 1 < src_.size() && peek() == '-' && src_[pos_ + 1] != ']') {
        ++pos_;
        char h = src_[pos_++];
        int hi;
        if (h == '\\') {
          if (eof()) throw RegexError("trailing backslash in class");
          char e = src_[pos_++];
          hi = static_cast<unsigned char>(e == 'x' ? parse_hex() : simple_escape(e));
        } else {
          hi = static_cast<unsigned char>(h);
        }
        if (hi < lo) throw RegexError("reversed range in character class");
        for (int ch = lo; ch <= hi; ++ch) s.set(ch);
      } else {
        s.set(lo);
      }
    }
    if (negate) s.flip();
    return s;
  }

  Node parse_group() {
    Node n;
    if (!eof() && peek() == '?') {
      ++pos_;
      if (eof()) throw RegexError("truncated group");
      char k = src_[pos_++];
      if (k == ':') {
        n.kind = Node::Kind::Group;
      } else if (k == '=' || k == '!') {
        n.kind = Node::Kind::Look;
        n.negative = k == '!';
      } else {
        throw RegexError(std::string("unsupported group modifier '?") + k + "'");
      }
    } else {
      n.kind = Node::Kind::Group;
      n.capture = ++groups_;
    }
    n.alternatives = parse_alternation();
    if (eof() || peek() != ')') throw RegexError("missing ')'");
    ++pos_;
    return n;
  }
};

std::size_t min_len_seq(const std::vector<Node>& seq);

std::size_t min_len(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Set: return 1;
    case Node::Kind::Look: return 0;
    case Node::Kind::Repeat: return n.min == 0 ? 0 : min_len(n.child[0]) * n.min;
    case Node::Kind::Group: {
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (const auto& alt : n.alternatives) best = std::min(best, min_len_seq(alt));
      return best;
    }
  }
  return 0;
}

std::size_t min_len_seq(const std::vector<Node>& seq) {
  std::size_t total = 0;
  for (const auto& n : seq) total += min_len(n);
  return total;
}

bool consumes(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Set: return true;
    case Node::Kind::Look: return false;
    case Node::Kind::Repeat: return consumes(n.child[0]);
    case Node::Kind::Group:
      for (const auto& alt : n.alternatives)
        for (const auto& c : alt)
          if (consumes(c)) return true;
      return false;
  }
  return false;
}

using Cont = std::function<bool(std::size_t)>;

struct Matcher {
  std::string_view input;
  bool at_end;
  bool hit_end = false;
  std::vector<std::pair<std::size_t, std::size_t>> caps;

  bool read(std::size_t pos, unsigned char& c) {
    if (pos >= input.size()) {
      if (!at_end) hit_end = true;
      return false;
    }
    c = static_cast<unsigned char>(input[pos]);
    return true;
  }

  bool seq(const std::vector<Node>& s, std::size_t i, std::size_t pos, const Cont& k) {
    if (i == s.size()) return k(pos);
    const Node& n = s[i];
    auto next = [&](std::size_t p) { return seq(s, i + 1, p, k); };
    switch (n.kind) {
      case Node::Kind::Set: {
        unsigned char c;
        if (!read(pos, c) || !n.set.test(c)) return false;
        return next(pos + 1);
      }
      case Node::Kind::Group: {
        for (const auto& alt : n.alternatives) {
          if (n.capture < 0) {
            if (seq(alt, 0, pos, next)) return true;
            continue;
          }
          auto saved = caps[n.capture];
          bool ok = seq(alt, 0, pos, [&](std::size_t end) {
            auto inner_saved = caps[n.capture];
            caps[n.capture] = {pos, end};
            if (next(end)) return true;
            caps[n.capture] = inner_saved;
            return false;
          });
          if (ok) return true;
          caps[n.capture] = saved;
        }
        return false;
      }
      case Node::Kind::Look: {
        bool found = false;
        for (const auto& alt : n.alternatives) {
          if (seq(alt, 0, pos, [](std::size_t) { return true; })) {
            found = true;
            break;
          }
        }
        if (found == n.negative) return false;
        return next(pos);
      }
      case Node::Kind::Repeat:
        return repeat(n, 0, pos, next);
    }
    return false;
  }

  // Greedy repetition; an iteration that consumes nothing ends the loop.
  bool repeat(const Node& n, int count, std::size_t pos, const Cont& k) {
    if (n.max < 0 || count < n.max) {
      bool ok = seq(n.child, 0, pos, [&](std::size_t p) {
        if (p == pos) return false;
        return repeat(n, count + 1, p, k);
      });
      if (ok) return true;
    }
    if (count >= n.min) return k(pos);
    return false;
  }
};

}  // namespace

Pattern Pattern::compile(std::string_view source, const std::map<std::string, std::string>& macros) {
  Pattern p;
  p.source_ = std::string(source);
  std::string expanded = expand_macros(source, macros);
  std::string_view body = expanded;
  if (body.substr(0, 4) == "(?i)") {
    p.icase_ = true;
    body.remove_prefix(4);
  }
  p.expanded_ = expanded;
  Parser parser(body, p.icase_);
  auto root = std::make_shared<Node>();
  root->kind = Node::Kind::Group;
  root->capture = 0;
  root->alternatives = parser.parse_all(p.groups_);
  p.root_ = std::move(root);
  return p;
}

MatchResult Pattern::match(std::string_view input, std::size_t pos, bool at_end) const {
  MatchResult r;
  if (!root_) return r;
  Matcher m{input, at_end, false, {}};
  m.caps.assign(static_cast<std::size_t>(groups_) + 1, {std::string::npos, std::string::npos});
  std::size_t end = 0;
  bool ok = false;
  for (const auto& alt : root_->alternatives) {
    ok = m.seq(alt, 0, pos, [&](std::size_t e) {
      end = e;
      return true;
    });
    if (ok) break;
  }
  if (m.hit_end) {
    r.outcome = Outcome::Undecided;
    return r;
  }
  if (!ok) return r;
  r.outcome = Outcome::Match;
  r.length = end - pos;
  r.groups.resize(m.caps.size());
  r.groups[0] = std::string(input.substr(pos, end - pos));
  for (std::size_t g = 1; g < m.caps.size(); ++g) {
    if (m.caps[g].first != std::string::npos)
      r.groups[g] = std::string(input.substr(m.caps[g].first, m.caps[g].second - m.caps[g].first));
  }
  return r;
}

bool Pattern::zero_width() const {
  if (!root_) return true;
  return !consumes(*root_);
}

std::size_t Pattern::min_length() const { return root_ ? min_len(*root_) : 0; }

}  // namespace autoesc::rx
