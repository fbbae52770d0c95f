#include "doctest.h"
#include "oracle/html_tokenizer.hpp"

using oracle::Token;

TEST_CASE("oracle tokenizes tags and attributes") {
  std::string html = "<a href=\"x\" title='y' data-z=w disabled>t</a>";
  auto toks = oracle::tokenize(html);
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].kind == Token::Kind::StartTag);
  REQUIRE(toks[0].attrs.size() == 4);
  CHECK(toks[0].attrs[0].quote == '"');
  CHECK(toks[0].attrs[1].quote == '\'');
  CHECK(toks[0].attrs[2].value == "w");
  CHECK_FALSE(toks[0].attrs[3].has_value);
  CHECK(toks[1].kind == Token::Kind::Text);
  CHECK(toks[2].kind == Token::Kind::EndTag);
  CHECK(toks[2].end == html.size());
}

TEST_CASE("oracle handles raw text, comments and entities") {
  auto toks = oracle::tokenize("<script>a</b>'</script><!-- x --><p title=\"&lt;&#x41;&amp\">");
  REQUIRE(toks.size() == 5);
  CHECK(toks[1].text == "a</b>'");
  CHECK(toks[3].kind == Token::Kind::Comment);
  CHECK(toks[4].attrs[0].value == "<A&");
  CHECK(oracle::decode_entities("&quot;&#39;") == "\"'");
}

TEST_CASE("oracle sees injected structure") {
  auto toks = oracle::tokenize("<p title=x onclick=y>");
  REQUIRE(toks.size() == 1);
  CHECK(toks[0].attrs.size() == 2);
  CHECK(oracle::tokenize("<p>a<b>c</p>").size() == 5);
  CHECK(oracle::tokenize("a < b").size() == 1);
}

TEST_CASE("oracle legacy references") {
  CHECK(oracle::decode_entities("a &lt b") == "a < b");
  CHECK(oracle::decode_entities("?x=1&ltb", true) == "?x=1&ltb");
  CHECK(oracle::decode_entities("&amp=", true) == "&amp=");
  CHECK(oracle::decode_entities("&amp", true) == "&");
}
