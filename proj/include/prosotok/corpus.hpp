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

#ifndef PROSOTOK_CORPUS_HPP
#define PROSOTOK_CORPUS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/audio_features.hpp"
#include "prosotok/csv.hpp"
#include "prosotok/error.hpp"
#include "prosotok/ingest.hpp"
#include "prosotok/quantizer.hpp"
#include "prosotok/sequence_codec.hpp"
#include "prosotok/stats.hpp"

namespace prosotok {

// ---------------------------------------------------------------------------
// Manifest.

struct ManifestEntry {
  std::string utterance_id;
  std::filesystem::path wav;
  std::filesystem::path alignment;
  std::string speaker;
};

/// CSV with columns utterance_id,wav,alignment,speaker. Relative paths are
/// resolved against the manifest's directory.
inline std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto c_id = t.column("utterance_id"), c_wav = t.column("wav"), c_al = t.column("alignment"),
             c_spk = t.column("speaker");
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    ManifestEntry e{row[c_id], row[c_wav], row[c_al], row[c_spk]};
    if (e.utterance_id.empty()) throw InputError("manifest: empty utterance_id");
    if (!seen.insert(e.utterance_id).second) throw InputError("manifest: duplicate utterance_id '" + e.utterance_id + "'");
    if (e.wav.is_relative()) e.wav = base / e.wav;
    if (e.alignment.is_relative()) e.alignment = base / e.alignment;
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Per-utterance continuous features (pass 1 output).

struct WordFeatures {
  std::string word;
  int symbols = 1;
  int phones = 1;
  WordProsodyVector prosody;
};

struct SentenceFeatures {
  std::string text;
  std::vector<WordFeatures> words;
};

struct UtteranceFeatures {
  std::string utterance_id;
  std::string speaker;
  double seconds = 0.0;
  std::size_t voiced_frames = 0;
  double voiced_log_f0_sum = 0.0;
  std::vector<SentenceFeatures> sentences;

  std::size_t word_count() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.words.size();
    return n;
  }
};

inline UtteranceFeatures extract_features(const Utterance& u, const AlignmentFile& alignment,
                                          FrameTracks* tracks_out = nullptr) {
  FrameTracks tracks = compute_frame_tracks(u);
  UtteranceFeatures f;
  f.utterance_id = u.utterance_id;
  f.speaker = u.speaker_id.empty() ? alignment.speaker : u.speaker_id;
  f.seconds = u.seconds();
  VoicedLogF0 acc;
  acc.add(tracks);
  f.voiced_frames = acc.count;
  f.voiced_log_f0_sum = acc.sum.value();
  for (const auto& st : alignment.sentences) {
    const auto vectors = extract_word_prosody(tracks, st);
    SentenceFeatures sf;
    sf.text = st.raw_text;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      sf.words.push_back({st.words[i].word_normalized, st.words[i].symbol_count,
                          static_cast<int>(st.words[i].phone_spans.size()), vectors[i]});
    }
    f.sentences.push_back(std::move(sf));
  }
  if (tracks_out) *tracks_out = std::move(tracks);
  return f;
}

inline UtteranceFeatures extract_features(const ManifestEntry& e, FrameTracks* tracks_out = nullptr) {
  try {
    const Utterance u = load_utterance(e.wav, e.speaker, e.utterance_id);
    return extract_features(u, load_alignment(e.alignment), tracks_out);
  } catch (const InputError& err) {
    throw InputError("utterance '" + e.utterance_id + "': " + err.what());
  }
}

inline nlohmann::json to_json(const UtteranceFeatures& f) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : f.sentences) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& w : s.words) {
      const auto& p = w.prosody;
      words.push_back({{"word", w.word},
                       {"symbols", w.symbols},
                       {"phones", w.phones},
                       {"silence_frames", p.preceding_silence_frames},
                       {"valid", p.valid},
                       {"duration", p.duration},
                       {"f0_range", p.f0_range},
                       {"f0_median", p.f0_median},
                       {"f0_slope", p.f0_slope},
                       {"energy", p.energy}});
    }
    sentences.push_back({{"text", s.text}, {"words", words}});
  }
  return {{"utterance_id", f.utterance_id},     {"speaker", f.speaker},
          {"seconds", f.seconds},               {"voiced_frames", f.voiced_frames},
          {"voiced_log_f0_sum", f.voiced_log_f0_sum}, {"sentences", sentences}};
}

inline UtteranceFeatures utterance_features_from_json(const nlohmann::json& j) {
  try {
    UtteranceFeatures f;
    f.utterance_id = j.at("utterance_id").get<std::string>();
    f.speaker = j.at("speaker").get<std::string>();
    f.seconds = j.at("seconds").get<double>();
    f.voiced_frames = j.at("voiced_frames").get<std::size_t>();
    f.voiced_log_f0_sum = j.at("voiced_log_f0_sum").get<double>();
    for (const auto& sj : j.at("sentences")) {
      SentenceFeatures s;
      s.text = sj.at("text").get<std::string>();
      for (const auto& wj : sj.at("words")) {
        WordFeatures w;
        w.word = wj.at("word").get<std::string>();
        w.symbols = wj.at("symbols").get<int>();
        w.phones = wj.at("phones").get<int>();
        auto& p = w.prosody;
        p.preceding_silence_frames = wj.at("silence_frames").get<int>();
        p.valid = wj.at("valid").get<bool>();
        p.duration = wj.at("duration").get<double>();
        p.f0_range = wj.at("f0_range").get<double>();
        p.f0_median = wj.at("f0_median").get<double>();
        p.f0_slope = wj.at("f0_slope").get<double>();
        p.energy = wj.at("energy").get<double>();
        s.words.push_back(std::move(w));
      }
      f.sentences.push_back(std::move(s));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("features record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Speaker statistics.

struct SpeakerStats {
  std::string speaker_id;
  double total_speech_seconds = 0.0;
  double mean_log_f0 = std::numeric_limits<double>::quiet_NaN();  // NaN if never voiced
  std::size_t utterance_count = 0;
};

/// Per-speaker totals, accumulated in input order.
inline std::vector<SpeakerStats> speaker_stats(std::span<const UtteranceFeatures> corpus) {
  struct Acc {
    CompensatedSum seconds, log_f0;
    std::size_t voiced = 0, utterances = 0;
  };
  std::map<std::string, Acc> by_speaker;
  for (const auto& f : corpus) {
    auto& a = by_speaker[f.speaker];
    a.seconds.add(f.seconds);
    a.log_f0.add(f.voiced_log_f0_sum);
    a.voiced += f.voiced_frames;
    ++a.utterances;
  }
  std::vector<SpeakerStats> out;
  for (const auto& [id, a] : by_speaker) {
    SpeakerStats s{id, a.seconds.value(), std::numeric_limits<double>::quiet_NaN(), a.utterances};
    if (a.voiced > 0) s.mean_log_f0 = a.log_f0.value() / static_cast<double>(a.voiced);
    out.push_back(std::move(s));
  }
  return out;
}

/// Speakers with at least `min_seconds` of speech. Exactly one hour stays.
inline std::set<std::string> filter_speakers(std::span<const SpeakerStats> stats, double min_seconds = 3600.0) {
  std::set<std::string> keep;
  for (const auto& s : stats) {
    if (s.total_speech_seconds >= min_seconds) keep.insert(s.speaker_id);
  }
  return keep;
}

// ---------------------------------------------------------------------------
// Calibration feed.

/// Word dimensions from the corpus. F0 dimensions use valid words only;
/// duration, energy and silence use every word. Speaker F0 is sampled per
/// utterance (voiced mean log-F0).
inline CalibrationSamples calibration_samples(std::span<const UtteranceFeatures> corpus) {
  CalibrationSamples s;
  for (const auto& f : corpus) {
    for (const auto& sent : f.sentences) {
      for (const auto& w : sent.words) {
        const auto& p = w.prosody;
        s[Dim::kDuration].push_back(p.duration);
        s[Dim::kEnergy].push_back(p.energy);
        s[Dim::kSilence].push_back(silence_log_duration(p.preceding_silence_frames));
        if (p.valid) {
          s[Dim::kF0Range].push_back(p.f0_range);
          s[Dim::kF0Median].push_back(p.f0_median);
          s[Dim::kF0Slope].push_back(p.f0_slope);
        }
      }
    }
    if (f.voiced_frames > 0) s[Dim::kSpeakerF0].push_back(f.voiced_log_f0_sum / static_cast<double>(f.voiced_frames));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Tokenization.

inline SentenceSequence tokenize_sentence(const SentenceFeatures& sf, const QuantizerSpec& spec) {
  SentenceSequence s;
  s.text = sf.text;
  for (const auto& w : sf.words) {
    WordEntry e;
    e.silence = quantize(silence_log_duration(w.prosody.preceding_silence_frames), Dim::kSilence, spec);
    e.word = w.word;
    if (w.prosody.valid) {
      const auto core = w.prosody.core();
      std::array<ProsodyToken, 5> toks;
      for (std::size_t d = 0; d < 5; ++d) toks[d] = quantize(core[d], kCoreDims[d], spec);
      e.prosody = toks;
    }
    s.items.push_back(std::move(e));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Frequency table and extremity.

/// Occurrence counts over the 512-entry prosody vocabulary with additive
/// smoothing. Counts are integers, so merging shards is exact.
class FrequencyTable {
 public:
  explicit FrequencyTable(double alpha = 1.0) : alpha_(alpha) {
    if (!(alpha > 0.0)) throw InputError("smoothing alpha must be positive");
  }

  void add(ProsodyToken t, std::uint64_t n = 1) {
    counts_[static_cast<std::size_t>(t.bin())] += n;
    total_ += n;
  }

  /// Word and silence tokens of the prosody section; the global token and
  /// invalid markers are not counted.
  void add(const SentenceSequence& s) {
    for (const auto& item : s.items) {
      add(item.silence);
      if (item.prosody) {
        for (ProsodyToken t : *item.prosody) add(t);
      }
    }
  }

  void merge(const FrequencyTable& other) {
    if (other.alpha_ != alpha_) throw InputError("cannot merge tables with different smoothing");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
  }

  double frequency(ProsodyToken t) const {
    return (static_cast<double>(counts_[static_cast<std::size_t>(t.bin())]) + alpha_) /
           (static_cast<double>(total_) + kBinCount * alpha_);
  }

  std::uint64_t count(int bin) const { return counts_.at(static_cast<std::size_t>(bin)); }
  std::uint64_t total() const { return total_; }
  double alpha() const { return alpha_; }
  const std::array<std::uint64_t, kBinCount>& counts() const { return counts_; }

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;

 private:
  std::array<std::uint64_t, kBinCount> counts_{};
  std::uint64_t total_ = 0;
  double alpha_;
};

inline nlohmann::json to_json(const FrequencyTable& t) {
  return {{"format", "prosotok-frequency-table"}, {"alpha", t.alpha()}, {"total", t.total()}, {"counts", t.counts()}};
}

inline FrequencyTable frequency_table_from_json(const nlohmann::json& j) {
  try {
    FrequencyTable t(j.at("alpha").get<double>());
    const auto counts = j.at("counts").get<std::vector<std::uint64_t>>();
    if (counts.size() != static_cast<std::size_t>(kBinCount)) throw InputError("frequency table: need 512 counts");
    for (int b = 0; b < kBinCount; ++b) {
      if (counts[b]) t.add(ProsodyToken(b), counts[b]);
    }
    if (t.total() != j.at("total").get<std::uint64_t>()) throw InputError("frequency table: total does not match counts");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("frequency table: ") + e.what());
  }
}

struct FrequencyBuild {
  FrequencyTable table;
  std::size_t skipped_streams = 0;
};

/// Counts every parseable stream; unparseable ones are skipped and counted.
inline FrequencyBuild build_frequency_table(std::span<const TokenStream> streams, bool include_global,
                                            StreamLayout layout = StreamLayout::kPrefixed, double alpha = 1.0) {
  FrequencyBuild out{FrequencyTable(alpha), 0};
  for (const auto& stream : streams) {
    try {
      SequenceParser p(include_global, layout);
      for (const auto& tok : stream) p.feed(tok);
      p.finish();
      for (const auto& s : p.sentences()) out.table.add(s);
    } catch (const ParseError&) {
      ++out.skipped_streams;
    }
  }
  return out;
}

/// Mean natural-log frequency over the sentence's word and silence tokens.
/// Lower means rarer prosody.
inline double extremity_score(const SentenceSequence& s, const FrequencyTable& table) {
  CompensatedSum sum;
  std::size_t n = 0;
  auto take = [&](ProsodyToken t) {
    sum.add(std::log(table.frequency(t)));
    ++n;
  };
  for (const auto& item : s.items) {
    take(item.silence);
    if (item.prosody) {
      for (ProsodyToken t : *item.prosody) take(t);
    }
  }
  if (n == 0) throw InputError("extremity score of a sentence without prosody tokens");
  return sum.value() / static_cast<double>(n);
}

inline ProsodyToken global_token(double score, const QuantizerSpec& spec) {
  if (!spec.is_calibrated(Dim::kExtremity)) throw InputError("extremity dimension is not calibrated");
  return quantize(score, Dim::kExtremity, spec);
}

// ---------------------------------------------------------------------------
// Cleaning.

struct CleaningReport {
  std::string utterance_id;
  std::size_t token_count = 0;
  std::size_t invalid_or_extreme_count = 0;
  bool dropped = false;
  std::string reason;
};

/// Drops iff flagged / total strictly exceeds `threshold`.
inline CleaningReport make_cleaning_report(std::string utterance_id, std::size_t token_count, std::size_t flagged,
                                           double threshold = 0.2) {
  if (token_count == 0) throw InputError("cleaning: utterance '" + utterance_id + "' has no prosody tokens");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InputError("cleaning threshold must be in (0, 1]");
  CleaningReport r{std::move(utterance_id), token_count, flagged, false, ""};
  const double fraction = static_cast<double>(flagged) / static_cast<double>(token_count);
  r.dropped = fraction > threshold;
  if (r.dropped) {
    r.reason = std::to_string(flagged) + "/" + std::to_string(token_count) + " prosody tokens invalid or extreme";
  }
  return r;
}

/// Each word contributes six tokens: its pause and the five prosody
/// dimensions. An invalid word flags all five dimensions; otherwise a token
/// is flagged when its raw value lies outside the caps.
inline std::pair<std::size_t, std::size_t> count_flagged_tokens(std::span<const WordProsodyVector> words,
                                                                const QuantizerSpec& spec) {
  std::size_t total = 0, flagged = 0;
  for (const auto& w : words) {
    total += 6;
    if (spec.is_calibrated(Dim::kSilence) &&
        is_extreme(silence_log_duration(w.preceding_silence_frames), Dim::kSilence, spec)) {
      ++flagged;
    }
    if (!w.valid) {
      flagged += 5;
      continue;
    }
    const auto core = w.core();
    for (std::size_t d = 0; d < 5; ++d) {
      if (is_extreme(core[d], kCoreDims[d], spec)) ++flagged;
    }
  }
  return {total, flagged};
}

inline CleaningReport clean_utterance(std::string utterance_id, std::span<const WordProsodyVector> words,
                                      const QuantizerSpec& spec, double threshold = 0.2) {
  const auto [total, flagged] = count_flagged_tokens(words, spec);
  return make_cleaning_report(std::move(utterance_id), total, flagged, threshold);
}

inline CleaningReport clean_utterance(const UtteranceFeatures& f, const QuantizerSpec& spec, double threshold = 0.2) {
  std::vector<WordProsodyVector> words;
  for (const auto& s : f.sentences) {
    for (const auto& w : s.words) words.push_back(w.prosody);
  }
  return clean_utterance(f.utterance_id, words, spec, threshold);
}

inline nlohmann::json to_json(const CleaningReport& r) {
  return {{"utterance_id", r.utterance_id},
          {"token_count", r.token_count},
          {"invalid_or_extreme_count", r.invalid_or_extreme_count},
          {"dropped", r.dropped},
          {"reason", r.reason}};
}

}  // namespace prosotok

#endif  // PROSOTOK_CORPUS_HPP
