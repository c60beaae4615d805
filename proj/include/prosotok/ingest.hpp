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

#ifndef PROSOTOK_INGEST_HPP
#define PROSOTOK_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/error.hpp"
#include "prosotok/text_normalize.hpp"

namespace prosotok {

// Fixed analysis grid shared by every frame-indexed quantity.
inline constexpr int kSampleRate = 24000;
inline constexpr int kHop = 300;
inline constexpr int kWindow = 1200;
inline constexpr double kHopSeconds = static_cast<double>(kHop) / kSampleRate;

struct Utterance {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
  std::string speaker_id;
  std::string utterance_id;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct FrameSpan {
  int start = 0;  // inclusive
  int end = 0;    // exclusive

  int length() const { return end - start; }
  friend bool operator==(const FrameSpan&, const FrameSpan&) = default;
};

struct WordAlignment {
  std::string word_normalized;
  int symbol_count = 1;
  int start_frame = 0;
  int end_frame = 0;
  std::vector<FrameSpan> phone_spans;
  int preceding_silence_frames = 0;

  FrameSpan span() const { return {start_frame, end_frame}; }
  int frame_count() const { return end_frame - start_frame; }
};

struct SentenceTranscript {
  std::string raw_text;
  std::vector<WordAlignment> words;
};

struct AlignmentFile {
  std::string speaker;
  std::vector<SentenceTranscript> sentences;
};

/// Decodes a RIFF/WAVE byte buffer holding mono 16-bit PCM at 24 kHz.
inline Utterance decode_wav(const std::vector<char>& bytes) {
  auto u16 = [&](std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[off]) |
                                      (static_cast<unsigned char>(bytes[off + 1]) << 8));
  };
  auto u32 = [&](std::size_t off) {
    return static_cast<std::uint32_t>(u16(off)) | (static_cast<std::uint32_t>(u16(off + 2)) << 16);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError("unsupported format: not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id(bytes.data() + pos, 4);
    const std::uint32_t size = u32(pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw InputError("unsupported format: truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw InputError("unsupported format: short fmt chunk");
      format = u16(body);
      channels = u16(body + 2);
      rate = u32(body + 4);
      bits = u16(body + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw InputError("unsupported format: data chunk before fmt chunk");
      if (format != 1 || bits != 16) throw InputError("unsupported format: only 16-bit PCM is accepted");
      if (channels != 1) throw InputError("unsupported format: multi-channel input (" + std::to_string(channels) + " channels)");
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw InputError("unsupported format: sample rate " + std::to_string(rate) + " Hz, expected 24000");
      }
      const std::size_t n = size / 2;
      if (n == 0) throw InputError("empty audio");
      Utterance u;
      u.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(u16(body + 2 * i));
        u.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return u;
    }
    pos = body + size + (size & 1u);
  }
  throw InputError("unsupported format: no data chunk");
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Loads a WAV file. The utterance id defaults to the file stem.
inline Utterance load_utterance(const std::filesystem::path& path, std::string speaker_id = {},
                                std::string utterance_id = {}) {
  Utterance u = decode_wav(read_file_bytes(path));
  u.speaker_id = std::move(speaker_id);
  u.utterance_id = utterance_id.empty() ? path.stem().string() : std::move(utterance_id);
  return u;
}

/// Writes mono 16-bit PCM; samples are clipped to [-1, 32767/32768].
inline void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
                      int sample_rate = kSampleRate) {
  std::vector<char> out;
  auto put16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>(v >> 8));
  };
  auto put32 = [&](std::uint32_t v) {
    put16(static_cast<std::uint16_t>(v & 0xFFFF));
    put16(static_cast<std::uint16_t>(v >> 16));
  };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(16);
  put16(1);
  put16(1);
  put32(static_cast<std::uint32_t>(sample_rate));
  put32(static_cast<std::uint32_t>(sample_rate * 2));
  put16(2);
  put16(16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(data_bytes);
  for (double s : samples) {
    const double scaled = std::round(s * 32768.0);
    const double clipped = std::min(32767.0, std::max(-32768.0, scaled));
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(clipped)));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

/// Seconds to frame index on the hop grid: floor(t * sr / hop). A 1e-9
/// guard absorbs binary round-off for times that sit exactly on a frame
/// boundary (0.3 s -> 24, not 23). Monotone in t.
inline int seconds_to_frame(double seconds, int hop = kHop) {
  return static_cast<int>(std::floor(seconds * kSampleRate / hop + 1e-9));
}

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw InputError(where + ": missing numeric field '" + key + "'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw InputError(where + ": non-finite '" + key + "'");
  return v;
}

}  // namespace detail

/// Parses the alignment JSON document into sentence transcripts on the
/// hop grid. Words are validated for ordering and phone tiling.
inline AlignmentFile parse_alignment(const nlohmann::json& doc, int hop = kHop) {
  if (!doc.is_object() || !doc.contains("sentences") || !doc["sentences"].is_array()) {
    throw InputError("alignment: expected object with a 'sentences' array");
  }
  AlignmentFile out;
  if (auto it = doc.find("speaker"); it != doc.end() && it->is_string()) out.speaker = it->get<std::string>();
  int prev_end = 0;
  double prev_end_sec = 0.0;
  std::size_t si = 0;
  for (const auto& sj : doc["sentences"]) {
    SentenceTranscript sentence;
    if (!sj.contains("text") || !sj["text"].is_string()) {
      throw InputError("alignment: sentence " + std::to_string(si) + " lacks 'text'");
    }
    sentence.raw_text = sj["text"].get<std::string>();
    if (!sj.contains("words") || !sj["words"].is_array() || sj["words"].empty()) {
      throw InputError("alignment: sentence " + std::to_string(si) + " has no words");
    }
    std::size_t wi = 0;
    for (const auto& wj : sj["words"]) {
      const std::string where = "alignment: sentence " + std::to_string(si) + " word " + std::to_string(wi);
      if (!wj.contains("word") || !wj["word"].is_string()) throw InputError(where + ": missing 'word'");
      const double start = detail::require_number(wj, "start", where);
      const double end = detail::require_number(wj, "end", where);
      if (end <= start) throw InputError(where + ": invalid span (end <= start)");
      if (start < prev_end_sec - 1e-9) throw InputError(where + ": overlapping words");

      WordAlignment w;
      w.word_normalized = normalize_word(wj["word"].get<std::string>());
      if (w.word_normalized.empty()) throw InputError(where + ": punctuation-only word");
      w.start_frame = seconds_to_frame(start, hop);
      w.end_frame = seconds_to_frame(end, hop);
      if (w.end_frame <= w.start_frame) throw InputError(where + ": invalid span (shorter than one frame)");
      if (w.start_frame < prev_end) throw InputError(where + ": overlapping words");

      if (auto pit = wj.find("phones"); pit != wj.end() && pit->is_array() && !pit->empty()) {
        for (const auto& pj : *pit) {
          const FrameSpan ps{seconds_to_frame(detail::require_number(pj, "start", where), hop),
                             seconds_to_frame(detail::require_number(pj, "end", where), hop)};
          if (ps.end < ps.start) throw InputError(where + ": invalid phone span");
          w.phone_spans.push_back(ps);
        }
      } else {
        w.phone_spans.push_back(w.span());
      }
      int cursor = w.start_frame;
      for (const auto& ps : w.phone_spans) {
        if (ps.start != cursor) throw InputError(where + ": phone spans do not tile the word span");
        cursor = ps.end;
      }
      if (cursor != w.end_frame) throw InputError(where + ": phone spans do not tile the word span");

      if (auto sit = wj.find("symbols"); sit != wj.end()) {
        if (!sit->is_number_integer() || sit->get<long long>() < 1) {
          throw InputError(where + ": 'symbols' must be a positive integer");
        }
        w.symbol_count = static_cast<int>(sit->get<long long>());
      } else if (wj.contains("phones") && wj["phones"].is_array() && !wj["phones"].empty()) {
        w.symbol_count = static_cast<int>(wj["phones"].size());
      } else {
        throw InputError(where + ": missing symbol counts");
      }
      w.preceding_silence_frames = w.start_frame - prev_end;
      prev_end = w.end_frame;
      prev_end_sec = end;
      sentence.words.push_back(std::move(w));
      ++wi;
    }
    out.sentences.push_back(std::move(sentence));
    ++si;
  }
  return out;
}

inline AlignmentFile load_alignment(const std::filesystem::path& path, int hop = kHop) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open alignment '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("alignment '" + path.string() + "': " + e.what());
  }
  return parse_alignment(doc, hop);
}

}  // namespace prosotok

#endif  // PROSOTOK_INGEST_HPP
