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

#ifndef PROSOTOK_TOOLS_SYNTHETIC_CORPUS_HPP
#define PROSOTOK_TOOLS_SYNTHETIC_CORPUS_HPP

// Deterministic speech-like corpus: harmonic voiced words with pitch
// contours, noisy onsets, pauses, WAV files and alignment JSON on the
// 300-sample hop grid. Used for desk-scale pipeline runs and tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/ingest.hpp"

namespace prosotok::demo {

struct CorpusOptions {
  int speakers = 4;
  int utterances_per_speaker = 25;
  int sentences_per_utterance = 3;
  int min_words = 4;
  int max_words = 9;
  std::uint64_t seed = 7;
};

struct GeneratedUtterance {
  std::string utterance_id;
  std::string speaker;
  std::filesystem::path wav;
  std::filesystem::path alignment;
  double seconds = 0.0;
};

namespace detail {

inline const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> words = {
      "the",   "quiet", "river",  "carried", "old",    "letters", "past",   "a",      "house",  "where",
      "nobody", "had",  "lived",  "since",   "1996",   "she",     "said",   "that",   "morning", "light",
      "fell",  "across", "narrow", "streets", "and",   "every",   "window", "opened", "slowly", "toward",
      "sea",   "he",    "asked",  "why",     "they",   "waited",  "for",    "news",   "from",   "north"};
  return words;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double gauss(std::mt19937_64& rng) {
  const double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-300);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace detail

/// Writes `<dir>/manifest.csv` plus one WAV and one alignment JSON per
/// utterance. Output depends only on the options.
inline std::vector<GeneratedUtterance> write_corpus(const std::filesystem::path& dir, const CorpusOptions& opt = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<GeneratedUtterance> out;
  std::ofstream manifest(dir / "manifest.csv");
  manifest << "utterance_id,wav,alignment,speaker\n";
  const auto& lex = detail::lexicon();

  for (int s = 0; s < opt.speakers; ++s) {
    const std::string speaker = "spk" + std::to_string(s);
    const double base_f0 = 95.0 + 130.0 * s / std::max(1, opt.speakers - 1);
    for (int u = 0; u < opt.utterances_per_speaker; ++u) {
      std::mt19937_64 rng(opt.seed * 1000003ull + static_cast<std::uint64_t>(s) * 7919ull + static_cast<std::uint64_t>(u));
      const std::string uid = speaker + "_u" + std::to_string(u);
      std::vector<double> audio;
      double phase = 0.0;
      auto frames_to_samples = [](int frames) { return static_cast<std::size_t>(frames) * kHop; };
      auto append_silence = [&](int frames) {
        for (std::size_t i = 0; i < frames_to_samples(frames); ++i) audio.push_back(1e-4 * detail::gauss(rng));
      };
      nlohmann::json sentences = nlohmann::json::array();
      int frame = 0;
      append_silence(8);
      frame += 8;
      for (int sn = 0; sn < opt.sentences_per_utterance; ++sn) {
        const int n_words = detail::uniform_int(rng, opt.min_words, opt.max_words);
        nlohmann::json words = nlohmann::json::array();
        std::string text;
        for (int w = 0; w < n_words; ++w) {
          const std::string word = lex[rng() % lex.size()];
          const int gap = w == 0 ? detail::uniform_int(rng, 4, 16) : (rng() % 3 == 0 ? detail::uniform_int(rng, 1, 12) : 0);
          append_silence(gap);
          frame += gap;
          const int n_phones = detail::uniform_int(rng, 2, 6);
          const double amp = detail::uniform(rng, 0.05, 0.4);
          const double f0_start = base_f0 * std::exp(detail::uniform(rng, -0.15, 0.15));
          const double slope = detail::uniform(rng, -0.01, 0.01);  // log-Hz per frame
          const double arch = detail::uniform(rng, 0.0, 0.12);
          std::vector<int> phone_frames(static_cast<std::size_t>(n_phones));
          int total = 0;
          for (auto& pf : phone_frames) total += (pf = detail::uniform_int(rng, 3, 9));
          const bool noisy_onset = rng() % 2 == 0;
          nlohmann::json phones = nlohmann::json::array();
          int pf_cursor = frame;
          for (int pf : phone_frames) {
            phones.push_back({{"start", pf_cursor * kHopSeconds}, {"end", (pf_cursor + pf) * kHopSeconds}});
            pf_cursor += pf;
          }
          const std::size_t n_samples = frames_to_samples(total);
          const std::size_t onset = noisy_onset ? frames_to_samples(phone_frames[0]) : 0;
          for (std::size_t i = 0; i < n_samples; ++i) {
            const double t_frames = static_cast<double>(i) / kHop;
            const double env = std::sin(std::numbers::pi * (i + 0.5) / n_samples);
            if (i < onset) {
              audio.push_back(0.3 * amp * env * detail::gauss(rng));
              continue;
            }
            const double pos = static_cast<double>(i) / n_samples;
            const double f0 = f0_start * std::exp(slope * t_frames + arch * std::sin(std::numbers::pi * pos));
            phase += 2.0 * std::numbers::pi * f0 / kSampleRate;
            double v = 0.0;
            for (int h = 1; h <= 5; ++h) v += std::sin(h * phase) / h;
            audio.push_back(amp * std::sqrt(env) * v * 0.5);
          }
          words.push_back({{"word", word},
                           {"symbols", n_phones},
                           {"start", frame * kHopSeconds},
                           {"end", (frame + total) * kHopSeconds},
                           {"phones", phones}});
          frame += total;
          std::string surface = word;
          if (w == 0) surface = detail::capitalize(surface);
          if (!text.empty()) text += ' ';
          text += surface;
        }
        text += (sn % 3 == 2) ? "?" : ".";
        sentences.push_back({{"text", text}, {"words", words}});
      }
      append_silence(10);
      const fs::path wav = dir / (uid + ".wav");
      const fs::path align = dir / (uid + ".json");
      write_wav(wav, audio);
      std::ofstream(align) << nlohmann::json{{"speaker", speaker}, {"sentences", sentences}}.dump(1) << '\n';
      manifest << uid << ',' << wav.filename().string() << ',' << align.filename().string() << ',' << speaker << '\n';
      out.push_back({uid, speaker, wav, align, static_cast<double>(audio.size()) / kSampleRate});
    }
  }
  return out;
}

}  // namespace prosotok::demo

#endif  // PROSOTOK_TOOLS_SYNTHETIC_CORPUS_HPP
