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

#ifndef PROSOTOK_AUDIO_FEATURES_HPP
#define PROSOTOK_AUDIO_FEATURES_HPP

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "prosotok/error.hpp"
#include "prosotok/ingest.hpp"
#include "prosotok/stats.hpp"

namespace prosotok {

inline constexpr int kFftSize = 2048;
inline constexpr int kMelBands = 80;
inline constexpr double kMelMaxHz = 12000.0;
inline constexpr double kEnergyFloor = 1e-5;

struct FrameTracks {
  std::vector<double> log_f0;  // natural log of Hz; meaningful only where voiced
  std::vector<bool> voiced;
  std::vector<double> log_energy;

  std::size_t n_frames() const { return log_energy.size(); }
};

/// Frames on the centred hop grid: frame i is centred on sample i * hop.
inline std::size_t frame_count(std::size_t n_samples) { return 1 + n_samples / kHop; }

namespace detail {

inline void require_analysis_ready(const Utterance& u) {
  if (u.sample_rate != kSampleRate) {
    throw InputError("unsupported sample rate " + std::to_string(u.sample_rate) + ", expected 24000");
  }
  if (u.samples.size() < static_cast<std::size_t>(kWindow)) {
    throw InputError("audio shorter than one analysis window (" + std::to_string(kWindow) + " samples)");
  }
}

// Periodic Hann, as torch.hann_window(1200).
inline const std::vector<double>& hann_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kWindow);
    for (int n = 0; n < kWindow; ++n) {
      v[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kWindow);
    }
    return v;
  }();
  return w;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelBand {
  int first_bin = 0;
  std::vector<double> weights;  // for bins first_bin, first_bin + 1, ...
};

/// Triangular HTK-scale filterbank, un-normalized; each band keeps only
/// its non-zero bins.
inline const std::vector<MelBand>& mel_filterbank() {
  static const auto fb = [] {
    constexpr int n_freqs = kFftSize / 2 + 1;
    const double m_min = hz_to_mel(0.0);
    const double m_max = hz_to_mel(kMelMaxHz);
    std::array<double, kMelBands + 2> f_pts{};
    for (int i = 0; i < kMelBands + 2; ++i) {
      f_pts[i] = mel_to_hz(m_min + (m_max - m_min) * i / (kMelBands + 1));
    }
    std::vector<MelBand> bands(kMelBands);
    for (int m = 0; m < kMelBands; ++m) {
      MelBand& band = bands[m];
      band.first_bin = -1;
      for (int k = 0; k < n_freqs; ++k) {
        const double f = static_cast<double>(kSampleRate) / 2.0 * k / (n_freqs - 1);
        const double down = (f - f_pts[m]) / (f_pts[m + 1] - f_pts[m]);
        const double up = (f_pts[m + 2] - f) / (f_pts[m + 2] - f_pts[m + 1]);
        const double wgt = std::max(0.0, std::min(down, up));
        if (wgt > 0.0) {
          if (band.first_bin < 0) band.first_bin = k;
          band.weights.resize(static_cast<std::size_t>(k - band.first_bin + 1), 0.0);
          band.weights.back() = wgt;
        }
      }
      if (band.first_bin < 0) band.first_bin = 0;
    }
    return bands;
  }();
  return fb;
}

/// Real-to-complex FFT of fixed size. The plan is created once under a
/// lock; execution on caller-owned buffers is thread-safe in FFTW.
class RealFft {
 public:
  static const RealFft& instance() {
    static const RealFft fft;
    return fft;
  }

  void forward(std::vector<double>& in, std::vector<std::complex<double>>& out) const {
    out.resize(kFftSize / 2 + 1);
    fftw_execute_dft_r2c(plan_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

 private:
  RealFft() {
    std::vector<double> in(kFftSize);
    std::vector<std::complex<double>> out(kFftSize / 2 + 1);
    static std::mutex planner_mutex;
    std::lock_guard lock(planner_mutex);
    plan_ = fftw_plan_dft_r2c_1d(kFftSize, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~RealFft() { fftw_destroy_plan(plan_); }

  fftw_plan plan_;
};

inline double reflect_sample(std::span<const double> x, long idx) {
  const long n = static_cast<long>(x.size());
  if (idx < 0) idx = -idx;
  if (idx >= n) idx = 2 * (n - 1) - idx;
  return x[static_cast<std::size_t>(std::clamp(idx, 0L, n - 1))];
}

}  // namespace detail

/// Mel magnitude spectrum of one frame given the 1200 windowed-input
/// samples centred on the frame (before windowing).
inline std::array<double, kMelBands> mel_frame(std::span<const double> centred) {
  const auto& w = detail::hann_window();
  std::vector<double> buf(kFftSize, 0.0);
  constexpr int offset = (kFftSize - kWindow) / 2;
  for (int n = 0; n < kWindow; ++n) buf[offset + n] = centred[n] * w[n];
  std::vector<std::complex<double>> spec;
  detail::RealFft::instance().forward(buf, spec);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
  const auto& fb = detail::mel_filterbank();
  std::array<double, kMelBands> mel{};
  for (int m = 0; m < kMelBands; ++m) {
    const auto& band = fb[m];
    double acc = 0.0;
    for (std::size_t j = 0; j < band.weights.size(); ++j) acc += band.weights[j] * mag[band.first_bin + j];
    mel[m] = acc;
  }
  return mel;
}

inline double log_norm(std::span<const double> mel) {
  double ss = 0.0;
  for (double v : mel) ss += v * v;
  return std::log(std::max(std::sqrt(ss), kEnergyFloor));
}

/// Per-frame ln(max(||mel frame||_2, 1e-5)) with window 1200, hop 300,
/// reflect padding at the edges.
inline std::vector<double> frame_log_energy(const Utterance& u) {
  detail::require_analysis_ready(u);
  const std::span<const double> x(u.samples);
  const std::size_t n_frames = frame_count(x.size());
  std::vector<double> out(n_frames);
  std::vector<double> centred(kWindow);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const long first = static_cast<long>(i) * kHop - kWindow / 2;
    for (int n = 0; n < kWindow; ++n) centred[n] = detail::reflect_sample(x, first + n);
    const auto mel = mel_frame(centred);
    out[i] = log_norm(mel);
  }
  return out;
}

struct PitchConfig {
  double min_hz = 50.0;
  double max_hz = 600.0;
  double dip_threshold = 0.15;        // first CMNDF dip below this wins
  double voicing_threshold = 0.5;     // periodicity = 1 - CMNDF(best lag)
  double silence_mean_square = 1e-10; // frames quieter than this are unvoiced
};

/// Single-frame estimate. Returns F0 in Hz, or 0 when unvoiced.
inline double estimate_frame_f0(std::span<const double> frame, const PitchConfig& cfg = {}) {
  const int tau_min = static_cast<int>(std::floor(kSampleRate / cfg.max_hz));
  const int tau_max = static_cast<int>(std::ceil(kSampleRate / cfg.min_hz));
  const int width = static_cast<int>(frame.size()) - tau_max - 1;
  if (width <= 0) throw InputError("pitch frame too short for the lag range");

  double energy = 0.0;
  for (double v : frame) energy += v * v;
  if (energy / static_cast<double>(frame.size()) < cfg.silence_mean_square) return 0.0;

  // Difference function and its cumulative-mean normalization.
  std::vector<double> cmndf(tau_max + 2, 1.0);
  double running = 0.0;
  for (int tau = 1; tau <= tau_max + 1; ++tau) {
    double d = 0.0;
    const double* a = frame.data();
    const double* b = frame.data() + tau;
    for (int j = 0; j < width; ++j) {
      const double diff = a[j] - b[j];
      d += diff * diff;
    }
    running += d;
    cmndf[tau] = running > 0.0 ? d * tau / running : 1.0;
  }

  int best = -1;
  for (int tau = tau_min; tau <= tau_max; ++tau) {
    if (cmndf[tau] < cfg.dip_threshold) {
      while (tau + 1 <= tau_max && cmndf[tau + 1] < cmndf[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best < 0) {
    best = tau_min;
    for (int tau = tau_min + 1; tau <= tau_max; ++tau) {
      if (cmndf[tau] < cmndf[best]) best = tau;
    }
  }
  if (1.0 - cmndf[best] < cfg.voicing_threshold) return 0.0;

  double lag = best;
  const double y0 = cmndf[best - 1], y1 = cmndf[best], y2 = cmndf[best + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  if (denom > 0.0) lag += 0.5 * (y0 - y2) / denom;
  return kSampleRate / lag;
}

struct PitchTrack {
  std::vector<double> log_f0;
  std::vector<bool> voiced;
};

/// YIN-style normalized-difference pitch track on the hop grid. Frames
/// reaching past the signal are zero-padded.
inline PitchTrack frame_log_f0(const Utterance& u, const PitchConfig& cfg = {}) {
  detail::require_analysis_ready(u);
  const std::span<const double> x(u.samples);
  const std::size_t n_frames = frame_count(x.size());
  PitchTrack out;
  out.log_f0.assign(n_frames, 0.0);
  out.voiced.assign(n_frames, false);
  std::vector<double> frame(kWindow);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const long first = static_cast<long>(i) * kHop - kWindow / 2;
    for (int n = 0; n < kWindow; ++n) {
      const long idx = first + n;
      frame[n] = (idx >= 0 && idx < static_cast<long>(x.size())) ? x[static_cast<std::size_t>(idx)] : 0.0;
    }
    const double f0 = estimate_frame_f0(frame, cfg);
    if (f0 > 0.0) {
      out.log_f0[i] = std::log(f0);
      out.voiced[i] = true;
    }
  }
  return out;
}

inline FrameTracks compute_frame_tracks(const Utterance& u, const PitchConfig& cfg = {}) {
  PitchTrack pitch = frame_log_f0(u, cfg);
  FrameTracks t;
  t.log_f0 = std::move(pitch.log_f0);
  t.voiced = std::move(pitch.voiced);
  t.log_energy = frame_log_energy(u);
  return t;
}

// ---------------------------------------------------------------------------
// Word-level aggregates.

struct WordProsodyVector {
  double duration = 0.0;   // ln(frames per symbol)
  double f0_range = 0.0;   // P95 - P5 of voiced log-F0
  double f0_median = 0.0;
  double f0_slope = 0.0;   // OLS slope of log-F0 per frame
  double energy = 0.0;     // mean log-energy
  int preceding_silence_frames = 0;
  bool valid = false;

  std::array<double, 5> core() const { return {duration, f0_range, f0_median, f0_slope, energy}; }
};

inline double word_duration(const WordAlignment& w) {
  if (w.frame_count() <= 0) throw InputError("word_duration: zero-length span");
  if (w.symbol_count < 1) throw InputError("word_duration: symbol_count must be >= 1");
  return std::log(static_cast<double>(w.frame_count()) / w.symbol_count);
}

struct F0Features {
  double range = 0.0;
  double median = 0.0;
  double slope = 0.0;
  bool valid = false;
};

/// F0 statistics over the word's voiced frames. Fewer than two voiced
/// frames leaves the word invalid.
inline F0Features word_f0_features(const FrameTracks& tracks, const WordAlignment& w) {
  if (w.start_frame < 0 || w.end_frame > static_cast<int>(tracks.log_f0.size()) || w.frame_count() <= 0) {
    throw InputError("word_f0_features: span outside track");
  }
  std::vector<double> t, v;
  for (int i = w.start_frame; i < w.end_frame; ++i) {
    if (tracks.voiced[i]) {
      t.push_back(static_cast<double>(i));
      v.push_back(tracks.log_f0[i]);
    }
  }
  F0Features f;
  if (v.size() < 2) return f;
  f.slope = ols_slope(t, v);
  std::sort(v.begin(), v.end());
  f.range = percentile_sorted(v, 95.0) - percentile_sorted(v, 5.0);
  f.median = percentile_sorted(v, 50.0);
  f.valid = std::isfinite(f.range) && std::isfinite(f.median) && std::isfinite(f.slope);
  return f;
}

inline double word_energy(const FrameTracks& tracks, const WordAlignment& w) {
  if (w.frame_count() <= 0) throw InputError("word_energy: empty span");
  if (w.start_frame < 0 || w.end_frame > static_cast<int>(tracks.log_energy.size())) {
    throw InputError("word_energy: span outside track");
  }
  return compensated_mean(std::span<const double>(tracks.log_energy).subspan(
      static_cast<std::size_t>(w.start_frame), static_cast<std::size_t>(w.frame_count())));
}

inline std::vector<WordProsodyVector> extract_word_prosody(const FrameTracks& tracks,
                                                           const SentenceTranscript& sentence) {
  std::vector<WordProsodyVector> out;
  out.reserve(sentence.words.size());
  for (const auto& w : sentence.words) {
    if (w.end_frame > static_cast<int>(tracks.n_frames())) {
      throw InputError("alignment for '" + w.word_normalized + "' extends past the audio (" +
                       std::to_string(w.end_frame) + " > " + std::to_string(tracks.n_frames()) + " frames)");
    }
    WordProsodyVector p;
    p.duration = word_duration(w);
    const F0Features f0 = word_f0_features(tracks, w);
    p.f0_range = f0.range;
    p.f0_median = f0.median;
    p.f0_slope = f0.slope;
    p.energy = word_energy(tracks, w);
    p.preceding_silence_frames = w.preceding_silence_frames;
    p.valid = f0.valid && std::isfinite(p.duration) && std::isfinite(p.energy);
    out.push_back(p);
  }
  return out;
}

inline std::vector<WordProsodyVector> extract_word_prosody(const Utterance& u,
                                                           const SentenceTranscript& sentence) {
  return extract_word_prosody(compute_frame_tracks(u), sentence);
}

/// Running (sum, count) of voiced log-F0; mergeable across utterances.
struct VoicedLogF0 {
  CompensatedSum sum;
  std::size_t count = 0;

  void add(const FrameTracks& t) {
    for (std::size_t i = 0; i < t.n_frames(); ++i) {
      if (t.voiced[i]) {
        sum.add(t.log_f0[i]);
        ++count;
      }
    }
  }
  void merge(const VoicedLogF0& o) {
    sum.merge(o.sum);
    count += o.count;
  }
  double mean() const {
    if (count == 0) throw InputError("speaker has no voiced frames");
    return sum.value() / static_cast<double>(count);
  }
};

inline double speaker_mean_log_f0(std::span<const FrameTracks> tracks) {
  VoicedLogF0 acc;
  for (const auto& t : tracks) acc.add(t);
  return acc.mean();
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Debug CSV: frame_index,log_f0,voiced,log_energy (log_f0 blank when unvoiced).
inline void write_tracks_csv(std::ostream& os, const FrameTracks& t) {
  os << "frame_index,log_f0,voiced,log_energy\n";
  for (std::size_t i = 0; i < t.n_frames(); ++i) {
    os << i << ',' << (t.voiced[i] ? format_double(t.log_f0[i]) : std::string()) << ','
       << (t.voiced[i] ? 1 : 0) << ',' << format_double(t.log_energy[i]) << '\n';
  }
}

}  // namespace prosotok

#endif  // PROSOTOK_AUDIO_FEATURES_HPP
