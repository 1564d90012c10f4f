#include <gtest/gtest.h>

#include "tweetvault/query.hpp"
#include "tweetvault/tokenizer.hpp"

namespace tv = tweetvault;
using Q = tv::Query;
using Tokens = std::vector<std::string>;

TEST(Tokenize, Examples) {
  EXPECT_EQ(tv::tokenize("Eating a sandwich!"), (Tokens{"eating", "a", "sandwich"}));
  EXPECT_EQ(tv::tokenize("#barcamp rocks @chris"), (Tokens{"#barcamp", "rocks", "@chris"}));
  EXPECT_EQ(tv::tokenize(""), Tokens{});
  EXPECT_EQ(tv::tokenize("  ...!!  "), Tokens{});
}

TEST(Tokenize, HashAndAtOnlyAtWordStart) {
  EXPECT_EQ(tv::tokenize("mail me@home #"), (Tokens{"mail", "me", "home"}));
  // The mark directly before the word is the one kept.
  EXPECT_EQ(tv::tokenize("##double @#mixed"), (Tokens{"#double", "#mixed"}));
  EXPECT_EQ(tv::tokenize("(#tag) \"@who\""), (Tokens{"#tag", "@who"}));
}

TEST(Tokenize, UrlsSplitIntoParts) {
  EXPECT_EQ(tv::tokenize("see http://bit.ly/Ab3"), (Tokens{"see", "http", "bit", "ly", "ab3"}));
}

TEST(Tokenize, UnicodeCasefoldAndScripts) {
  // Simple case folding keeps ß as a single code point.
  EXPECT_EQ(tv::tokenize("CAFÉ Straße ΣΟΦΙΑ"), (Tokens{"café", "straße", "σοφια"}));
  EXPECT_EQ(tv::tokenize("CAFÉ")[0], "café");
  EXPECT_EQ(tv::tokenize("ΣΟΦΙΑ")[0], "σοφια");
  // Persian with a zero-width non-joiner stays one token.
  EXPECT_EQ(tv::tokenize("می‌خواهم آزادی").size(), 2u);
  EXPECT_EQ(tv::tokenize("می‌خواهم")[0], "می‌خواهم");
  // Combining marks continue a word.
  EXPECT_EQ(tv::tokenize("été"), (Tokens{"été"}));
  EXPECT_EQ(tv::tokenize("日本語 テスト"), (Tokens{"日本語", "テスト"}));
  EXPECT_EQ(tv::tokenize("r2d2 4ever"), (Tokens{"r2d2", "4ever"}));
}

TEST(Tokenize, InvalidUtf8ActsAsSeparator) {
  EXPECT_EQ(tv::tokenize(std::string("ab\xff" "cd")), (Tokens{"ab", "cd"}));
  EXPECT_EQ(tv::tokenize(std::string("\xc3")), Tokens{});
}

TEST(Tokenize, PositionsCountTokens) {
  std::vector<std::uint32_t> pos;
  tv::for_each_token("a, b; c", [&](std::string_view, std::uint32_t p) { pos.push_back(p); });
  EXPECT_EQ(pos, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(QueryParser, TermsPhrasesAndImplicitAnd) {
  EXPECT_EQ(tv::parse_query("Obama"), Q::term("obama"));
  EXPECT_EQ(tv::parse_query("\"eating a sandwich\""), Q::phrase({"eating", "a", "sandwich"}));
  EXPECT_EQ(tv::parse_query("\"Bieber\""), Q::term("bieber"));
  EXPECT_EQ(tv::parse_query("justin bieber"), Q::all_of({Q::term("justin"), Q::term("bieber")}));
  // Punctuation inside a bare word yields a phrase of its parts.
  EXPECT_EQ(tv::parse_query("bit.ly"), Q::phrase({"bit", "ly"}));
  EXPECT_EQ(tv::parse_query("#sxsw @ev"), Q::all_of({Q::term("#sxsw"), Q::term("@ev")}));
}

TEST(QueryParser, OrBindsTighterThanAnd) {
  EXPECT_EQ(tv::parse_query("a OR b c"), Q::all_of({Q::any_of({Q::term("a"), Q::term("b")}), Q::term("c")}));
  EXPECT_EQ(tv::parse_query("(super OR bowl) eating"),
            Q::all_of({Q::any_of({Q::term("super"), Q::term("bowl")}), Q::term("eating")}));
  EXPECT_EQ(tv::parse_query("x (a b) OR c"),
            Q::all_of({Q::term("x"), Q::any_of({Q::all_of({Q::term("a"), Q::term("b")}), Q::term("c")})}));
  // Lowercase "or" is an ordinary word.
  EXPECT_EQ(tv::parse_query("this or that"), Q::all_of({Q::term("this"), Q::term("or"), Q::term("that")}));
  EXPECT_EQ(tv::parse_query("\"a b\" OR \"c d\""), Q::any_of({Q::phrase({"a", "b"}), Q::phrase({"c", "d"})}));
}

TEST(QueryParser, HundredTermDisjunction) {
  std::string s;
  for (int i = 0; i < 100; ++i) s += (i ? " OR w" : "w") + std::to_string(i);
  const auto q = tv::parse_query(s);
  ASSERT_EQ(q.kind, Q::Kind::kOr);
  EXPECT_EQ(q.children.size(), 100u);
}

TEST(QueryParser, DateBounds) {
  const auto q = tv::parse_query("obama from:2008-11-01 to:2008-11-05");
  ASSERT_EQ(q.kind, Q::Kind::kAnd);
  EXPECT_EQ(q.children[1], Q::time_range(tv::parse_iso8601("2008-11-01"), tv::kTimeMax));
  EXPECT_EQ(q.children[2], Q::time_range(tv::kTimeMin, tv::parse_iso8601("2008-11-06") - 1));
  const auto b = tv::time_bounds(q);
  EXPECT_EQ(b.lo, tv::parse_iso8601("2008-11-01"));
  EXPECT_EQ(b.hi, tv::parse_iso8601("2008-11-06") - 1);
  EXPECT_EQ(tv::parse_query("from:2009-01-01T12:30").t0, tv::parse_iso8601("2009-01-01T12:30:00"));
}

TEST(QueryParser, Errors) {
  for (const char* bad : {"", "   ", "\"unterminated", "(a b", "a)", "OR a", "a OR", "a OR OR b", "from:2009-02-30",
                          "to:soon", "!!!", "\"...\""})
    EXPECT_THROW(tv::parse_query(bad), tv::QueryError) << bad;
}

TEST(QueryParser, ToStringRoundTrips) {
  for (const char* s : {"obama", "\"eating a sandwich\"", "a OR b c", "(x OR \"y z\") w"}) {
    const auto q = tv::parse_query(s);
    EXPECT_EQ(tv::parse_query(q.to_string()), q) << s;
  }
}

TEST(Query, ConstructorsValidate) {
  EXPECT_THROW(Q::term(""), tv::QueryError);
  EXPECT_THROW(Q::phrase({}), tv::QueryError);
  EXPECT_THROW(Q::all_of({}), tv::QueryError);
  EXPECT_THROW(Q::any_of({}), tv::QueryError);
  EXPECT_THROW(Q::time_range(5, 4), tv::QueryError);
  EXPECT_EQ(Q::text("Justin Bieber"), Q::phrase({"justin", "bieber"}));
  EXPECT_THROW(Q::text("?!"), tv::QueryError);
}

TEST(Query, TimeBoundsCombine) {
  const auto a = Q::time_range(10, 20), b = Q::time_range(15, 30), c = Q::time_range(40, 50);
  auto tb = tv::time_bounds(Q::all_of({a, b}));
  EXPECT_EQ(tb.lo, 15);
  EXPECT_EQ(tb.hi, 20);
  tb = tv::time_bounds(Q::any_of({a, c}));
  EXPECT_EQ(tb.lo, 10);
  EXPECT_EQ(tb.hi, 50);
  EXPECT_TRUE(tv::time_bounds(Q::all_of({a, c})).empty());
  tb = tv::time_bounds(Q::any_of({a, Q::term("x")}));
  EXPECT_EQ(tb.lo, tv::kTimeMin);
  EXPECT_EQ(tb.hi, tv::kTimeMax);
  tb = tv::time_bounds(Q::any_of({Q::all_of({a, c}), b}));
  EXPECT_EQ(tb.lo, 15);
  EXPECT_EQ(tb.hi, 30);
}
