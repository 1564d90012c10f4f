#pragma once

// Text analysis shared by indexing and querying.
//
// Tokens are maximal runs of letters, digits and combining marks (plus the
// zero-width joiners used by e.g. Persian), simple-casefolded. A `#` or `@`
// at the start of a word stays attached so hashtags and mentions remain
// searchable as written.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

namespace tweetvault {

namespace detail {

inline bool is_word_start(UChar32 c) {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  return u_hasBinaryProperty(c, UCHAR_ALPHABETIC) || u_charType(c) == U_DECIMAL_DIGIT_NUMBER;
}

inline bool is_word_continue(UChar32 c) {
  if (is_word_start(c)) return true;
  if (c == 0x200C || c == 0x200D) return true;
  const auto t = u_charType(c);
  return t == U_NON_SPACING_MARK || t == U_COMBINING_SPACING_MARK || t == U_ENCLOSING_MARK;
}

inline void append_utf8(std::string& out, UChar32 c) {
  char buf[4];
  int32_t len = 0;
  UBool err = false;
  U8_APPEND(buf, len, 4, c, err);
  if (!err) out.append(buf, static_cast<std::size_t>(len));
}

inline UChar32 fold(UChar32 c) {
  if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
  return u_foldCase(c, U_FOLD_CASE_DEFAULT);
}

}  // namespace detail

// Calls fn(token, position) for each token; positions count tokens from 0.
template <typename Fn>
void for_each_token(std::string_view text, Fn&& fn) {
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto n = static_cast<int32_t>(text.size());
  std::string token;
  std::uint32_t position = 0;
  bool in_token = false;
  bool prev_is_word = false;
  int32_t i = 0;
  auto finish = [&] {
    if (in_token) {
      fn(std::string_view(token), position++);
      token.clear();
      in_token = false;
    }
  };
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) {  // invalid byte sequence acts as a separator
      finish();
      prev_is_word = false;
      continue;
    }
    if (in_token ? detail::is_word_continue(c) : detail::is_word_start(c)) {
      in_token = true;
      detail::append_utf8(token, detail::fold(c));
      prev_is_word = true;
      continue;
    }
    finish();
    if ((c == '#' || c == '@') && !prev_is_word && i < n) {
      int32_t j = i;
      UChar32 next;
      U8_NEXT(s, j, n, next);
      if (next >= 0 && detail::is_word_start(next)) {
        token.push_back(static_cast<char>(c));
        in_token = true;
        prev_is_word = true;
        continue;
      }
    }
    prev_is_word = false;
  }
  finish();
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for_each_token(text, [&](std::string_view t, std::uint32_t) { out.emplace_back(t); });
  return out;
}

}  // namespace tweetvault
