// Copyright 2026 The prosotok Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PROSOTOK_TEXT_NORMALIZE_HPP
#define PROSOTOK_TEXT_NORMALIZE_HPP

#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace prosotok {

namespace detail {

inline constexpr std::array<std::string_view, 20> kOnes = {
    "zero",    "one",     "two",       "three",    "four",
    "five",    "six",     "seven",     "eight",    "nine",
    "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};

inline constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

// 0..99
inline std::string say_below_hundred(int n) {
  if (n < 20) return std::string(kOnes[n]);
  std::string out(kTens[n / 10]);
  if (n % 10 != 0) {
    out += ' ';
    out += kOnes[n % 10];
  }
  return out;
}

// 0..999, plain cardinal without "and".
inline std::string say_below_thousand(int n) {
  if (n < 100) return say_below_hundred(n);
  std::string out(kOnes[n / 100]);
  out += " hundred";
  if (n % 100 != 0) {
    out += ' ';
    out += say_below_hundred(n % 100);
  }
  return out;
}

// 1000..9999. Numbers whose leading pair is not a round thousand are read
// in pairs ("nineteen ninety six", "nineteen oh five", "nineteen hundred").
inline std::string say_four_digits(int n) {
  const int hi = n / 100;
  const int lo = n % 100;
  if (hi % 10 == 0) {
    std::string out(kOnes[n / 1000]);
    out += " thousand";
    if (n % 1000 != 0) {
      out += ' ';
      out += say_below_thousand(n % 1000);
    }
    return out;
  }
  std::string out = say_below_hundred(hi);
  if (lo == 0) {
    out += " hundred";
  } else if (lo < 10) {
    out += " oh ";
    out += kOnes[lo];
  } else {
    out += ' ';
    out += say_below_hundred(lo);
  }
  return out;
}

inline std::string say_digits(std::string_view digits) {
  std::string out;
  for (char c : digits) {
    if (!out.empty()) out += ' ';
    out += kOnes[c - '0'];
  }
  return out;
}

inline std::string expand_number(std::string_view digits) {
  if (digits.size() > 4 || (digits.size() > 1 && digits.front() == '0')) {
    return say_digits(digits);
  }
  int n = 0;
  for (char c : digits) n = n * 10 + (c - '0');
  return n < 1000 ? say_below_thousand(n) : say_four_digits(n);
}

// Decodes one UTF-8 code point starting at s[i]; advances i. Malformed
// bytes are returned as-is.
inline std::uint32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = b0 < 0x80 ? 1 : (b0 >> 5) == 0x6 ? 2 : (b0 >> 4) == 0xE ? 3 : (b0 >> 3) == 0x1E ? 4 : 1;
  if (i + len > s.size()) len = 1;
  std::uint32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
  for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

inline bool is_unicode_punctuation(std::uint32_t cp) {
  return (cp >= 0x2000 && cp <= 0x206F) ||  // general punctuation (dashes, quotes)
         (cp >= 0x3000 && cp <= 0x303F) ||  // CJK punctuation
         cp == 0x00A1 || cp == 0x00AB || cp == 0x00BB || cp == 0x00BF || cp == 0x00A0 ||
         cp == 0x00B7;
}

inline std::string normalize_piece(std::string_view raw) {
  // Pass 1: lowercase, drop punctuation. Apostrophes survive only between
  // letters ("don't"), so the result stays stable under re-normalization.
  std::string kept;
  for (std::size_t i = 0; i < raw.size();) {
    const std::size_t start = i;
    const std::uint32_t cp = next_code_point(raw, i);
    if (cp < 0x80) {
      const auto c = static_cast<unsigned char>(cp);
      if (std::isalnum(c)) {
        kept += static_cast<char>(std::tolower(c));
      } else if (c == '\'') {
        kept += '\'';
      }
    } else if (!is_unicode_punctuation(cp)) {
      kept.append(raw.substr(start, i - start));
    }
  }
  std::string cleaned;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] == '\'') {
      const bool inner = i > 0 && i + 1 < kept.size() &&
                         std::isalpha(static_cast<unsigned char>(kept[i - 1])) &&
                         std::isalpha(static_cast<unsigned char>(kept[i + 1]));
      if (!inner) continue;
    }
    cleaned += kept[i];
  }
  bool all_digits = !cleaned.empty();
  for (char c : cleaned) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(c));
  return all_digits ? expand_number(cleaned) : cleaned;
}

}  // namespace detail

/// Minimal TTS-style text normalization for one orthographic token:
/// lowercase, punctuation removed, integers up to 9999 spelled out.
/// Longer digit strings are read digit by digit. Returns an empty string
/// for punctuation-only input, which callers treat as a droppable token.
/// Idempotent.
inline std::string normalize_word(std::string_view raw) {
  std::string out;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > i) {
      std::string piece = detail::normalize_piece(raw.substr(i, j - i));
      if (!piece.empty()) {
        if (!out.empty()) out += ' ';
        out += piece;
      }
    }
    i = j;
  }
  return out;
}

}  // namespace prosotok

#endif  // PROSOTOK_TEXT_NORMALIZE_HPP
