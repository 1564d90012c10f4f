#pragma once

// Query AST and the command-line query grammar:
//
//   whitespace   implicit AND
//   OR           disjunction (binds tighter than AND)
//   "..."        phrase
//   ( ... )      grouping
//   from:DATE    lower time bound (ISO date or datetime, UTC)
//   to:DATE      upper time bound (a bare date includes the whole day)

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tweetvault/civil_time.hpp"
#include "tweetvault/tokenizer.hpp"

namespace tweetvault {

inline constexpr EpochMs kTimeMin = std::numeric_limits<EpochMs>::min();
inline constexpr EpochMs kTimeMax = std::numeric_limits<EpochMs>::max();

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Query {
  enum class Kind { kTerm, kPhrase, kAnd, kOr, kTimeRange };

  Kind kind = Kind::kTerm;
  std::vector<std::string> tokens;  // kTerm: one token, kPhrase: one or more
  std::vector<Query> children;      // kAnd / kOr
  EpochMs t0 = kTimeMin;            // kTimeRange, inclusive
  EpochMs t1 = kTimeMax;

  // `token` must already be in analyzed (tokenizer) form.
  static Query term(std::string token) {
    if (token.empty()) throw QueryError("empty term");
    Query q;
    q.kind = Kind::kTerm;
    q.tokens.push_back(std::move(token));
    return q;
  }
  static Query phrase(std::vector<std::string> tokens) {
    if (tokens.empty()) throw QueryError("phrase needs at least one token");
    Query q;
    q.kind = Kind::kPhrase;
    q.tokens = std::move(tokens);
    return q;
  }
  static Query all_of(std::vector<Query> children) {
    if (children.empty()) throw QueryError("AND needs at least one child");
    Query q;
    q.kind = Kind::kAnd;
    q.children = std::move(children);
    return q;
  }
  static Query any_of(std::vector<Query> children) {
    if (children.empty()) throw QueryError("OR needs at least one child");
    Query q;
    q.kind = Kind::kOr;
    q.children = std::move(children);
    return q;
  }
  static Query time_range(EpochMs t0, EpochMs t1) {
    if (t0 > t1) throw QueryError("time range with t0 > t1");
    Query q;
    q.kind = Kind::kTimeRange;
    q.t0 = t0;
    q.t1 = t1;
    return q;
  }
  static Query match_all() { return time_range(kTimeMin, kTimeMax); }

  // Runs free text through the tokenizer: one token gives a term, several a
  // phrase. Throws if nothing searchable remains.
  static Query text(std::string_view s) {
    auto toks = tokenize(s);
    if (toks.empty()) throw QueryError("no searchable tokens in '" + std::string(s) + "'");
    return toks.size() == 1 ? term(std::move(toks[0])) : phrase(std::move(toks));
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::kTerm: return tokens[0];
      case Kind::kPhrase: {
        std::string s = "\"";
        for (std::size_t i = 0; i < tokens.size(); ++i) s += (i ? " " : "") + tokens[i];
        return s + "\"";
      }
      case Kind::kAnd:
      case Kind::kOr: {
        std::string s = "(";
        for (std::size_t i = 0; i < children.size(); ++i)
          s += (i ? (kind == Kind::kAnd ? " " : " OR ") : "") + children[i].to_string();
        return s + ")";
      }
      case Kind::kTimeRange:
        return "[" + (t0 == kTimeMin ? std::string("*") : format_iso8601(t0)) + " TO " +
               (t1 == kTimeMax ? std::string("*") : format_iso8601(t1)) + "]";
    }
    return {};
  }

  friend bool operator==(const Query&, const Query&) = default;
};

struct TimeBounds {
  EpochMs lo = kTimeMin;
  EpochMs hi = kTimeMax;
  bool empty() const { return lo > hi; }
};

// A superset of the timestamps any match of `q` can have.
inline TimeBounds time_bounds(const Query& q) {
  switch (q.kind) {
    case Query::Kind::kTerm:
    case Query::Kind::kPhrase: return {};
    case Query::Kind::kTimeRange: return {q.t0, q.t1};
    case Query::Kind::kAnd: {
      TimeBounds b;
      for (const auto& c : q.children) {
        auto cb = time_bounds(c);
        b.lo = std::max(b.lo, cb.lo);
        b.hi = std::min(b.hi, cb.hi);
      }
      return b;
    }
    case Query::Kind::kOr: {
      TimeBounds b{kTimeMax, kTimeMin};
      for (const auto& c : q.children) {
        auto cb = time_bounds(c);
        if (cb.empty()) continue;
        b.lo = std::min(b.lo, cb.lo);
        b.hi = std::max(b.hi, cb.hi);
      }
      return b;
    }
  }
  return {};
}

namespace detail {

class QueryParser {
 public:
  explicit QueryParser(std::string_view s) : s_(s) {}

  Query parse() {
    auto q = parse_and();
    skip_ws();
    if (pos_ < s_.size()) throw QueryError("unexpected '" + std::string(1, s_[pos_]) + "' at offset " + std::to_string(pos_));
    if (!q) throw QueryError("query has no searchable terms");
    return std::move(*q);
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
  }

  bool at_or() {
    skip_ws();
    if (s_.substr(pos_, 2) != "OR") return false;
    const std::size_t after = pos_ + 2;
    return after == s_.size() || s_[after] == ' ' || s_[after] == '\t' || s_[after] == '"' || s_[after] == '(';
  }

  bool at_end_of_group() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == ')';
  }

  std::optional<Query> parse_and() {
    std::vector<Query> parts;
    while (!at_end_of_group()) {
      if (at_or()) throw QueryError("OR without left operand at offset " + std::to_string(pos_));
      if (auto q = parse_or()) parts.push_back(std::move(*q));
    }
    if (parts.empty()) return std::nullopt;
    if (parts.size() == 1) return std::move(parts[0]);
    return Query::all_of(std::move(parts));
  }

  std::optional<Query> parse_or() {
    std::vector<Query> alts;
    auto take = [&] {
      if (auto u = parse_unary()) alts.push_back(std::move(*u));
    };
    take();
    while (at_or()) {
      pos_ += 2;
      if (at_end_of_group() || at_or()) throw QueryError("OR without right operand");
      take();
    }
    if (alts.empty()) return std::nullopt;
    if (alts.size() == 1) return std::move(alts[0]);
    return Query::any_of(std::move(alts));
  }

  std::optional<Query> parse_unary() {
    skip_ws();
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      auto q = parse_and();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != ')') throw QueryError("missing ')'");
      ++pos_;
      return q;
    }
    if (c == '"') {
      auto close = s_.find('"', pos_ + 1);
      if (close == std::string_view::npos) throw QueryError("unterminated phrase");
      auto body = s_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      auto toks = tokenize(body);
      if (toks.empty()) return std::nullopt;
      return toks.size() == 1 ? Query::term(std::move(toks[0])) : Query::phrase(std::move(toks));
    }
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ' ' && s_[end] != '\t' && s_[end] != '\n' && s_[end] != '\r' &&
           s_[end] != '"' && s_[end] != '(' && s_[end] != ')')
      ++end;
    auto word = s_.substr(pos_, end - pos_);
    pos_ = end;
    if (word.rfind("from:", 0) == 0) return Query::time_range(parse_iso8601(word.substr(5)), kTimeMax);
    if (word.rfind("to:", 0) == 0) return Query::time_range(kTimeMin, parse_iso8601(word.substr(3), true));
    auto toks = tokenize(word);
    if (toks.empty()) return std::nullopt;
    return toks.size() == 1 ? Query::term(std::move(toks[0])) : Query::phrase(std::move(toks));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Query parse_query(std::string_view s) {
  try {
    return detail::QueryParser(s).parse();
  } catch (const TimeParseError& e) {
    throw QueryError(std::string("bad date in query: ") + e.what());
  }
}

}  // namespace tweetvault
