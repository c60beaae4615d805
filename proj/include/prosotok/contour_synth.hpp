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

#ifndef PROSOTOK_CONTOUR_SYNTH_HPP
#define PROSOTOK_CONTOUR_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "prosotok/audio_features.hpp"
#include "prosotok/error.hpp"
#include "prosotok/ingest.hpp"
#include "prosotok/quantizer.hpp"
#include "prosotok/sequence_codec.hpp"
#include "prosotok/stats.hpp"

namespace prosotok {

struct PhoneDurations {
  std::vector<int> frames;
  bool flagged = false;  // requested total was below one frame per phone

  int total() const {
    int t = 0;
    for (int f : frames) t += f;
    return t;
  }
};

/// Expands a word's log frames-per-symbol into per-phone frame counts:
/// total = round(exp(value) * n_phones), split as evenly as possible with
/// the remainder going to the leading phones.
inline PhoneDurations synth_phone_durations(double duration_value, int n_phones) {
  if (n_phones < 1) throw InputError("synth_phone_durations: n_phones must be >= 1");
  if (!std::isfinite(duration_value)) throw InputError("synth_phone_durations: non-finite duration");
  long total = std::lround(std::exp(duration_value) * n_phones);
  PhoneDurations out;
  if (total < n_phones) {
    out.flagged = true;
    total = n_phones;
  }
  const long base = total / n_phones;
  const long extra = total % n_phones;
  out.frames.resize(static_cast<std::size_t>(n_phones));
  for (int i = 0; i < n_phones; ++i) out.frames[i] = static_cast<int>(base + (i < extra ? 1 : 0));
  return out;
}

struct F0Contour {
  std::vector<double> log_f0;
  double arch_scale = 0.0;
  bool feasible = true;
};

namespace detail {

inline double percentile_range(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 95.0) - percentile_sorted(v, 5.0);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return percentile_sorted(v, 50.0);
}

inline std::vector<double> arch_plus_line(double slope, double arch_scale, int n) {
  const double mid = (n - 1) / 2.0;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    v[t] = slope * (t - mid) + arch_scale * std::sin(std::numbers::pi * (t + 0.5) / n);
  }
  return v;
}

}  // namespace detail

/// Builds a log-F0 contour whose word statistics reproduce (range, median,
/// slope): a line through the median with a symmetric half-cosine arch on
/// top. The arch has zero OLS slope, so the slope is exact; its scale is
/// found by bisection on the 95-5 percentile range, then the intercept is
/// shifted to hit the median. When the line alone already spans more than
/// the requested range the arch stays at zero and `feasible` is false.
inline F0Contour synth_f0_contour(double f0_range, double f0_median, double f0_slope, int n_frames) {
  if (n_frames < 2) throw InputError("synth_f0_contour: need at least two frames");
  if (!(f0_range >= 0.0) || !std::isfinite(f0_range) || !std::isfinite(f0_median) || !std::isfinite(f0_slope)) {
    throw InputError("synth_f0_contour: range must be finite and non-negative");
  }
  auto range_at = [&](double a) { return detail::percentile_range(detail::arch_plus_line(f0_slope, a, n_frames)); };

  F0Contour out;
  const double r0 = range_at(0.0);
  constexpr double kTol = 1e-12;
  double a = 0.0;
  if (f0_range > r0 + kTol) {
    double hi = std::max(f0_range, 1e-6);
    int guard = 0;
    while (range_at(hi) < f0_range && guard++ < 200) hi *= 2.0;
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double r = range_at(mid);
      if (std::abs(r - f0_range) <= kTol) {
        lo = hi = mid;
        break;
      }
      (r < f0_range ? lo : hi) = mid;
    }
    a = 0.5 * (lo + hi);
  }
  out.arch_scale = a;
  std::vector<double> shape = detail::arch_plus_line(f0_slope, a, n_frames);
  const double shift = f0_median - detail::median_of(shape);
  for (double& v : shape) v += shift;
  out.feasible = std::abs(detail::percentile_range(shape) - f0_range) <= 1e-6 &&
                 std::abs(detail::median_of(shape) - f0_median) <= 1e-6;
  out.log_f0 = std::move(shape);
  return out;
}

inline std::vector<double> synth_energy_contour(double energy_value, int n_frames) {
  if (n_frames < 1) throw InputError("synth_energy_contour: need at least one frame");
  return std::vector<double>(static_cast<std::size_t>(n_frames), energy_value);
}

/// A realized sentence: alternating pauses and words on the frame grid.
struct SynthSegment {
  int word_index = -1;  // -1 for pauses
  std::vector<int> phone_frames;
  std::vector<double> log_f0;
  std::vector<double> log_energy;
  bool voiced = false;
  bool flagged = false;  // infeasible F0 triple, clamped duration, or invalid word

  int frames() const { return static_cast<int>(log_energy.size()); }
};

struct SynthPlan {
  std::vector<SynthSegment> segments;
  std::size_t word_count = 0;

  int total_frames() const {
    int n = 0;
    for (const auto& s : segments) n += s.frames();
    return n;
  }
};

namespace detail {
inline SynthSegment pause_segment(int frames, int word_index = -1) {
  SynthSegment s;
  s.word_index = word_index;
  s.log_f0.assign(static_cast<std::size_t>(frames), 0.0);
  s.log_energy.assign(static_cast<std::size_t>(frames), std::log(kEnergyFloor));
  return s;
}
}  // namespace detail

/// Dequantizes a token sentence and realizes it frame by frame. Pauses are
/// unvoiced at the energy floor. Invalid words become unvoiced stretches
/// as long as the median valid word of the sentence.
inline SynthPlan synth_sentence(const SentenceSequence& s, const QuantizerSpec& spec,
                                std::span<const int> phone_counts) {
  if (phone_counts.size() != s.items.size()) throw InputError("synth_sentence: one phone count per word required");
  for (int n : phone_counts) {
    if (n < 1) throw InputError("synth_sentence: phone counts must be positive");
  }
  std::vector<PhoneDurations> durations(s.items.size());
  std::vector<double> valid_lengths;
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    if (!s.items[i].prosody) continue;
    durations[i] = synth_phone_durations(dequantize((*s.items[i].prosody)[0], Dim::kDuration, spec), phone_counts[i]);
    valid_lengths.push_back(durations[i].total());
  }
  SynthPlan plan;
  plan.word_count = s.items.size();
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    const auto& item = s.items[i];
    const int pause = silence_frames_from_log(dequantize(item.silence, Dim::kSilence, spec));
    if (pause > 0) plan.segments.push_back(detail::pause_segment(pause));

    if (!item.prosody) {
      const int len = valid_lengths.empty() ? phone_counts[i]
                                            : std::max(phone_counts[i], static_cast<int>(std::lround(
                                                                            percentile(valid_lengths, 50.0))));
      SynthSegment seg = detail::pause_segment(len, static_cast<int>(i));
      seg.phone_frames = synth_phone_durations(std::log(static_cast<double>(len) / phone_counts[i]), phone_counts[i]).frames;
      seg.flagged = true;
      plan.segments.push_back(std::move(seg));
      continue;
    }
    const auto& toks = *item.prosody;
    SynthSegment seg;
    seg.word_index = static_cast<int>(i);
    seg.phone_frames = durations[i].frames;
    seg.flagged = durations[i].flagged;
    seg.voiced = true;
    const int n = durations[i].total();
    const double median = dequantize(toks[2], Dim::kF0Median, spec);
    if (n >= 2) {
      F0Contour c = synth_f0_contour(dequantize(toks[1], Dim::kF0Range, spec), median,
                                     dequantize(toks[3], Dim::kF0Slope, spec), n);
      seg.log_f0 = std::move(c.log_f0);
      seg.flagged = seg.flagged || !c.feasible;
    } else {
      seg.log_f0.assign(static_cast<std::size_t>(n), median);
      seg.flagged = true;
    }
    seg.log_energy = synth_energy_contour(dequantize(toks[4], Dim::kEnergy, spec), n);
    plan.segments.push_back(std::move(seg));
  }
  return plan;
}

/// The plan viewed as extractor output, with the word alignment that
/// re-extraction needs (phones become symbols).
struct RealizedPlan {
  FrameTracks tracks;
  SentenceTranscript transcript;
};

inline RealizedPlan realize(const SynthPlan& plan, const SentenceSequence& s) {
  RealizedPlan out;
  out.transcript.raw_text = s.text;
  int cursor = 0, last_end = 0;
  for (const auto& seg : plan.segments) {
    for (int k = 0; k < seg.frames(); ++k) {
      out.tracks.log_f0.push_back(seg.log_f0[k]);
      out.tracks.voiced.push_back(seg.voiced);
      out.tracks.log_energy.push_back(seg.log_energy[k]);
    }
    if (seg.word_index >= 0) {
      WordAlignment w;
      w.word_normalized = s.items[static_cast<std::size_t>(seg.word_index)].word;
      w.start_frame = cursor;
      w.end_frame = cursor + seg.frames();
      w.symbol_count = static_cast<int>(seg.phone_frames.size());
      int p = cursor;
      for (int f : seg.phone_frames) {
        w.phone_spans.push_back({p, p + f});
        p += f;
      }
      w.preceding_silence_frames = cursor - last_end;
      last_end = w.end_frame;
      out.transcript.words.push_back(std::move(w));
    }
    cursor += seg.frames();
  }
  return out;
}

/// CSV frame table: frame,log_f0,voiced,log_energy,word_index.
inline void write_plan_csv(std::ostream& os, const SynthPlan& plan) {
  os << "frame,log_f0,voiced,log_energy,word_index\n";
  int frame = 0;
  for (const auto& seg : plan.segments) {
    for (int k = 0; k < seg.frames(); ++k, ++frame) {
      os << frame << ',' << (seg.voiced ? format_double(seg.log_f0[k]) : std::string()) << ','
         << (seg.voiced ? 1 : 0) << ',' << format_double(seg.log_energy[k]) << ',' << seg.word_index << '\n';
    }
  }
}

}  // namespace prosotok

#endif  // PROSOTOK_CONTOUR_SYNTH_HPP
