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

#ifndef PROSOTOK_SEQUENCE_CODEC_HPP
#define PROSOTOK_SEQUENCE_CODEC_HPP

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/error.hpp"
#include "prosotok/quantizer.hpp"

namespace prosotok {

using TokenStream = std::vector<std::string>;

inline constexpr std::string_view kSep1 = "<SEP1>";
inline constexpr std::string_view kSep2 = "<SEP2>";
inline constexpr std::string_view kSil = "<SIL>";
inline constexpr std::string_view kInvalidMarker = "<PINV>";

enum class TokenClass { kSep1, kSep2, kSil, kInvalid, kProsody, kText, kMalformed };

inline std::string_view token_class_name(TokenClass c) {
  switch (c) {
    case TokenClass::kSep1: return "<SEP1>";
    case TokenClass::kSep2: return "<SEP2>";
    case TokenClass::kSil: return "<SIL>";
    case TokenClass::kInvalid: return "<PINV>";
    case TokenClass::kProsody: return "prosody token";
    case TokenClass::kText: return "text";
    case TokenClass::kMalformed: return "malformed token";
  }
  return "?";
}

inline std::string render_token(ProsodyToken t) {
  const int b = t.bin();
  return {'<', 'P', static_cast<char>('0' + b / 100), static_cast<char>('0' + b / 10 % 10),
          static_cast<char>('0' + b % 10), '>'};
}

struct ClassifiedToken {
  TokenClass cls = TokenClass::kText;
  int bin = -1;
};

/// `<Pnnn>` must have exactly three digits and nnn < 512. Anything else of
/// the form `<P...>` with digits is malformed rather than text.
inline ClassifiedToken classify_token(std::string_view tok) {
  if (tok == kSep1) return {TokenClass::kSep1};
  if (tok == kSep2) return {TokenClass::kSep2};
  if (tok == kSil) return {TokenClass::kSil};
  if (tok == kInvalidMarker) return {TokenClass::kInvalid};
  if (tok.empty()) return {TokenClass::kMalformed};
  if (tok.size() >= 3 && tok.starts_with("<P") && tok.back() == '>') {
    const std::string_view digits = tok.substr(2, tok.size() - 3);
    bool all_digits = !digits.empty();
    for (char c : digits) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(c));
    if (all_digits) {
      if (digits.size() != 3) return {TokenClass::kMalformed};
      const int bin = (digits[0] - '0') * 100 + (digits[1] - '0') * 10 + (digits[2] - '0');
      if (bin >= kBinCount) return {TokenClass::kMalformed};
      return {TokenClass::kProsody, bin};
    }
  }
  return {TokenClass::kText};
}

struct WordEntry {
  ProsodyToken silence;                               // pause before the word
  std::string word;                                   // normalized form
  std::optional<std::array<ProsodyToken, 5>> prosody; // empty => <PINV>

  bool valid() const { return prosody.has_value(); }
  friend bool operator==(const WordEntry&, const WordEntry&) = default;
};

struct SentenceSequence {
  std::string text;  // raw, with punctuation
  std::optional<ProsodyToken> global;
  std::vector<WordEntry> items;

  friend bool operator==(const SentenceSequence&, const SentenceSequence&) = default;
};

namespace detail {
inline void require_text_token(std::string_view tok, const char* what) {
  if (classify_token(tok).cls != TokenClass::kText) {
    throw InputError(std::string(what) + " '" + std::string(tok) + "' collides with a reserved token");
  }
}
}  // namespace detail

/// Appends `[Text] <SEP1> [Global]? (<SIL> <Pdur> word P1..P5|<PINV>)* <SEP2>`.
/// With include_global set the sentence must carry a global token; with it
/// cleared any global token is left out.
inline void serialize_sentence_into(const SentenceSequence& s, bool include_global, TokenStream& out) {
  detail::require_text_token(s.text, "sentence text");
  out.push_back(s.text);
  out.emplace_back(kSep1);
  if (include_global) {
    if (!s.global) throw InputError("sentence lacks a global token but include_global is set");
    out.push_back(render_token(*s.global));
  }
  for (const auto& item : s.items) {
    detail::require_text_token(item.word, "word");
    out.emplace_back(kSil);
    out.push_back(render_token(item.silence));
    out.push_back(item.word);
    if (item.prosody) {
      for (ProsodyToken t : *item.prosody) out.push_back(render_token(t));
    } else {
      out.emplace_back(kInvalidMarker);
    }
  }
  out.emplace_back(kSep2);
}

inline TokenStream serialize_sentence(const SentenceSequence& s, bool include_global) {
  TokenStream out;
  serialize_sentence_into(s, include_global, out);
  return out;
}

enum class StreamLayout {
  kSentences,  // bare sentence sequence
  kPrefixed,   // instruction, speaker-F0 token, then sentences
};

/// Single-pass LL(1) recognizer for token streams. Tokens are fed one at a
/// time; `expected()` reports which classes may come next, which is also
/// how generation points in prompts are checked.
class SequenceParser {
 public:
  SequenceParser(bool include_global, StreamLayout layout = StreamLayout::kSentences)
      : include_global_(include_global),
        state_(layout == StreamLayout::kPrefixed ? State::kInstruction : State::kText) {}

  void feed(std::string_view tok) {
    const ClassifiedToken ct = classify_token(tok);
    if (ct.cls == TokenClass::kMalformed) fail("malformed token '" + std::string(tok) + "'");
    switch (state_) {
      case State::kInstruction:
        if (ct.cls != TokenClass::kText) fail("expected instruction text");
        instruction_ = std::string(tok);
        state_ = State::kSpeaker;
        break;
      case State::kSpeaker:
        if (ct.cls != TokenClass::kProsody) fail("expected speaker F0 token after instruction");
        speaker_ = ProsodyToken(ct.bin);
        state_ = State::kText;
        break;
      case State::kText:
        if (ct.cls != TokenClass::kText) fail("expected sentence text, got " + describe(tok, ct));
        current_ = SentenceSequence{};
        current_.text = std::string(tok);
        state_ = State::kSep1;
        break;
      case State::kSep1:
        if (ct.cls != TokenClass::kSep1) fail("missing <SEP1>");
        prosody_count_ = 0;
        state_ = include_global_ ? State::kGlobal : State::kSilOrSep2;
        break;
      case State::kGlobal:
        if (ct.cls != TokenClass::kProsody) fail("missing [Global] token");
        current_.global = ProsodyToken(ct.bin);
        state_ = State::kSilOrSep2;
        break;
      case State::kSilOrSep2:
        if (ct.cls == TokenClass::kSil) {
          state_ = State::kDur;
        } else if (ct.cls == TokenClass::kSep2) {
          sentences_.push_back(std::move(current_));
          state_ = State::kText;
        } else if (ct.cls == TokenClass::kProsody) {
          fail(prosody_count_ == 5 ? "more than 5 prosody tokens after a word"
               : include_global_  ? "unexpected prosody token"
                                  : "unexpected [Global] token while include_global is off");
        } else {
          fail("expected <SIL> or <SEP2>, got " + describe(tok, ct));
        }
        break;
      case State::kDur:
        if (ct.cls != TokenClass::kProsody) fail("<SIL> not followed by a duration token");
        pending_ = WordEntry{};
        pending_.silence = ProsodyToken(ct.bin);
        state_ = State::kWord;
        break;
      case State::kWord:
        if (ct.cls != TokenClass::kText) fail("expected a word after the duration token, got " + describe(tok, ct));
        pending_.word = std::string(tok);
        prosody_count_ = 0;
        state_ = State::kProsody;
        break;
      case State::kProsody:
        if (ct.cls == TokenClass::kInvalid && prosody_count_ == 0) {
          current_.items.push_back(std::move(pending_));
          prosody_count_ = 5;
          state_ = State::kSilOrSep2;
        } else if (ct.cls == TokenClass::kProsody) {
          buffer_[prosody_count_++] = ProsodyToken(ct.bin);
          if (prosody_count_ == 5) {
            pending_.prosody = buffer_;
            current_.items.push_back(std::move(pending_));
            state_ = State::kSilOrSep2;
          }
        } else {
          fail("expected 5 prosody tokens after a word, got " + std::to_string(prosody_count_));
        }
        break;
    }
    ++position_;
  }

  /// Token classes acceptable at the current position.
  std::vector<TokenClass> expected() const {
    switch (state_) {
      case State::kInstruction: return {TokenClass::kText};
      case State::kSpeaker: return {TokenClass::kProsody};
      case State::kText: return {TokenClass::kText};
      case State::kSep1: return {TokenClass::kSep1};
      case State::kGlobal: return {TokenClass::kProsody};
      case State::kSilOrSep2: return {TokenClass::kSil, TokenClass::kSep2};
      case State::kDur: return {TokenClass::kProsody};
      case State::kWord: return {TokenClass::kText};
      case State::kProsody:
        if (prosody_count_ == 0) return {TokenClass::kProsody, TokenClass::kInvalid};
        return {TokenClass::kProsody};
    }
    return {};
  }

  /// True when the stream could legally end here.
  bool at_boundary() const { return state_ == State::kText; }

  void finish() const {
    switch (state_) {
      case State::kText: return;
      case State::kInstruction:
      case State::kSpeaker: fail("stream ends inside the instruction prefix");
      case State::kSep1: fail("missing <SEP1>");
      default: fail("unterminated prosody section");
    }
  }

  const std::vector<SentenceSequence>& sentences() const { return sentences_; }
  std::vector<SentenceSequence> take_sentences() { return std::move(sentences_); }
  const std::string& instruction() const { return instruction_; }
  std::optional<ProsodyToken> speaker_token() const { return speaker_; }

 private:
  enum class State { kInstruction, kSpeaker, kText, kSep1, kGlobal, kSilOrSep2, kDur, kWord, kProsody };

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(position_, what); }

  static std::string describe(std::string_view tok, const ClassifiedToken& ct) {
    return ct.cls == TokenClass::kText ? "'" + std::string(tok) + "'" : std::string(token_class_name(ct.cls));
  }

  bool include_global_;
  State state_;
  std::size_t position_ = 0;
  int prosody_count_ = 0;
  std::array<ProsodyToken, 5> buffer_{};
  WordEntry pending_;
  SentenceSequence current_;
  std::vector<SentenceSequence> sentences_;
  std::string instruction_;
  std::optional<ProsodyToken> speaker_;
};

inline std::vector<SentenceSequence> parse_sequence(std::span<const std::string> stream, bool include_global) {
  SequenceParser p(include_global);
  for (const auto& tok : stream) p.feed(tok);
  p.finish();
  return p.take_sentences();
}

struct PrefixedSequence {
  std::string instruction;
  ProsodyToken speaker_f0;
  std::vector<SentenceSequence> sentences;

  friend bool operator==(const PrefixedSequence&, const PrefixedSequence&) = default;
};

inline PrefixedSequence parse_training_sequence(std::span<const std::string> stream, bool include_global) {
  SequenceParser p(include_global, StreamLayout::kPrefixed);
  for (const auto& tok : stream) p.feed(tok);
  p.finish();
  return {p.instruction(), *p.speaker_token(), p.take_sentences()};
}

/// Classes that may follow `stream`; throws if the stream is already malformed.
inline std::vector<TokenClass> expected_next(std::span<const std::string> stream, bool include_global,
                                             StreamLayout layout = StreamLayout::kPrefixed) {
  SequenceParser p(include_global, layout);
  for (const auto& tok : stream) p.feed(tok);
  return p.expected();
}

// ---------------------------------------------------------------------------
// Instruction prefix.

inline constexpr std::array<std::string_view, 5> kInstructionPool = {
    "Create a story", "Spin a narrative", "Keep the narrative going", "Compose an audiobook",
    "Let this inspire your audiobook"};

/// Deterministic per-item instruction choice from (seed, key). The key is
/// typically the utterance id, so the choice does not depend on processing
/// order.
inline std::string_view select_instruction(std::uint64_t seed, std::string_view key,
                                           std::span<const std::string_view> pool = kInstructionPool) {
  if (pool.empty()) throw InputError("empty instruction pool");
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::mt19937_64 rng(seed ^ h);
  return pool[rng() % pool.size()];
}

namespace detail {
inline void push_prefix(TokenStream& out, std::string_view instruction, ProsodyToken spk) {
  require_text_token(instruction, "instruction");
  out.emplace_back(instruction);
  out.push_back(render_token(spk));
}
}  // namespace detail

inline TokenStream build_training_sequence(std::span<const SentenceSequence> sentences, std::string_view instruction,
                                           ProsodyToken spk, bool include_global) {
  if (sentences.empty()) throw InputError("training sequence needs at least one sentence");
  TokenStream out;
  detail::push_prefix(out, instruction, spk);
  for (const auto& s : sentences) serialize_sentence_into(s, include_global, out);
  return out;
}

/// Prefix plus the first sentence's text, ending at `<SEP1>`: the point
/// where a model generates the prosody section.
inline TokenStream build_tts_prompt(std::span<const std::string> text_sentences, std::string_view instruction,
                                    ProsodyToken spk) {
  if (text_sentences.empty() || text_sentences.front().empty()) throw InputError("TTS prompt needs non-empty text");
  TokenStream out;
  detail::push_prefix(out, instruction, spk);
  detail::require_text_token(text_sentences.front(), "sentence text");
  out.push_back(text_sentences.front());
  out.emplace_back(kSep1);
  return out;
}

/// Appends the next sentence's text after a completed prosody section.
inline void extend_tts_prompt(TokenStream& prompt, std::string_view text) {
  if (prompt.empty() || prompt.back() != kSep2) throw InputError("previous sentence's prosody section is not complete");
  detail::require_text_token(text, "sentence text");
  prompt.emplace_back(text);
  prompt.emplace_back(kSep1);
}

inline TokenStream build_continuation_prompt(std::span<const SentenceSequence> reference, std::string_view instruction,
                                             ProsodyToken spk, bool include_global) {
  if (reference.empty()) throw InputError("continuation prompt needs reference sentences");
  for (const auto& s : reference) {
    if (s.items.empty()) throw InputError("reference sentence '" + s.text + "' has no prosody section");
  }
  return build_training_sequence(reference, instruction, spk, include_global);
}

// ---------------------------------------------------------------------------
// Sentence segmentation.

/// Splits raw text after runs of `.`, `!`, `?` (plus any closing quotes or
/// brackets) that are followed by whitespace or the end of the text.
inline std::vector<std::string> split_sentences(std::string_view text) {
  auto is_terminal = [](char c) { return c == '.' || c == '!' || c == '?'; };
  auto closer_len = [&](std::size_t i) -> std::size_t {
    if (i >= text.size()) return 0;
    const char c = text[i];
    if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
    // U+2019 and U+201D, right single/double quotation marks.
    if (text.substr(i, 3) == "\xE2\x80\x99" || text.substr(i, 3) == "\xE2\x80\x9D") return 3;
    return 0;
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
  };
  std::vector<std::string> out;
  std::size_t start = 0, i = 0;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    while (i < text.size() && is_terminal(text[i])) ++i;
    while (std::size_t n = closer_len(i)) i += n;
    if (i == text.size() || std::isspace(static_cast<unsigned char>(text[i]))) {
      if (auto s = trim(text.substr(start, i - start)); !s.empty()) out.push_back(std::move(s));
      start = i;
    }
  }
  if (auto s = trim(text.substr(start)); !s.empty()) out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Persistence: JSONL and escaped plain text.

inline std::string to_jsonl_line(std::string_view utterance_id, const TokenStream& tokens) {
  nlohmann::json j = {{"utterance_id", utterance_id}, {"tokens", tokens}};
  return j.dump();
}

inline std::pair<std::string, TokenStream> from_jsonl_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return {j.at("utterance_id").get<std::string>(), j.at("tokens").get<TokenStream>()};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("token JSONL: ") + e.what());
  }
}

/// Escapes a token so that tokens can be joined with single spaces.
inline std::string escape_token(std::string_view tok) {
  std::string out;
  for (char c : tok) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_token(std::string_view tok) {
  std::string out;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (tok[i] != '\\') {
      out += tok[i];
      continue;
    }
    if (++i == tok.size()) throw InputError("dangling escape in plain-text token");
    switch (tok[i]) {
      case '\\': out += '\\'; break;
      case 's': out += ' '; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw InputError(std::string("unknown escape '\\") + tok[i] + "'");
    }
  }
  return out;
}

/// `utterance_id<TAB>tok tok tok ...`
inline std::string to_plain_line(std::string_view utterance_id, const TokenStream& tokens) {
  std::string out = escape_token(utterance_id);
  out += '\t';
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += escape_token(tokens[i]);
  }
  return out;
}

inline std::pair<std::string, TokenStream> from_plain_line(std::string_view line) {
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) throw InputError("plain-text token line lacks a tab separator");
  TokenStream toks;
  std::string_view rest = line.substr(tab + 1);
  while (!rest.empty()) {
    const auto sp = rest.find(' ');
    const std::string_view piece = rest.substr(0, sp);
    if (piece.empty()) throw InputError("empty token in plain-text line");
    toks.push_back(unescape_token(piece));
    if (sp == std::string_view::npos) break;
    rest.remove_prefix(sp + 1);
    if (rest.empty()) throw InputError("trailing space in plain-text line");
  }
  return {unescape_token(line.substr(0, tab)), std::move(toks)};
}

}  // namespace prosotok

#endif  // PROSOTOK_SEQUENCE_CODEC_HPP
