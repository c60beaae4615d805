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

#ifndef PROSOTOK_TESTS_ORACLES_HPP
#define PROSOTOK_TESTS_ORACLES_HPP

// Reference implementations used only by tests. Each is written
// independently of the library code path (long double, naive loops,
// closed forms) so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Linear-interpolated percentile: rank h = (n-1) p / 100 between the two
// neighbouring order statistics.
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const long double h = static_cast<long double>(v.size() - 1) * p / 100.0L;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const long double frac = h - lo;
  return static_cast<double>(v[lo] * (1.0L - frac) + v[hi] * frac);
}

// Uncentred normal equations in long double.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  long double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const long double n = static_cast<long double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  return static_cast<double>((n * sxy - sx * sy) / (n * sxx - sx * sx));
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Log mel norm of one frame: periodic Hann, centred zero-padding to 2048,
// O(N^2) DFT magnitude, dense triangular HTK filterbank over 0..12 kHz.
inline double mel_log_energy(const std::vector<double>& centred1200) {
  constexpr int N = 2048, W = 1200, bands = 80, n_freqs = N / 2 + 1;
  std::vector<double> buf(N, 0.0);
  for (int n = 0; n < W; ++n) {
    buf[(N - W) / 2 + n] = centred1200[n] * (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / W));
  }
  std::vector<double> mag(n_freqs);
  for (int k = 0; k < n_freqs; ++k) {
    long double re = 0, im = 0;
    for (int n = 0; n < N; ++n) {
      if (buf[n] == 0.0) continue;
      const long double ang = -2.0L * std::numbers::pi_v<long double> * ((static_cast<long>(k) * n) % N) / N;
      re += buf[n] * std::cos(ang);
      im += buf[n] * std::sin(ang);
    }
    mag[k] = static_cast<double>(std::sqrt(re * re + im * im));
  }
  const double top = hz_to_mel(12000.0);
  long double ss = 0;
  for (int m = 0; m < bands; ++m) {
    const double l = mel_to_hz(top * m / (bands + 1));
    const double c = mel_to_hz(top * (m + 1) / (bands + 1));
    const double r = mel_to_hz(top * (m + 2) / (bands + 1));
    long double acc = 0;
    for (int k = 0; k < n_freqs; ++k) {
      const double f = 12000.0 * k / (n_freqs - 1);
      double w = 0.0;
      if (f > l && f < c) w = (f - l) / (c - l);
      else if (f >= c && f < r) w = (r - f) / (r - c);
      acc += w * mag[k];
    }
    ss += acc * acc;
  }
  return std::log(std::max(static_cast<double>(std::sqrt(ss)), 1e-5));
}

inline std::vector<double> sine(double hz, double seconds, double amp = 0.5, int sr = 24000, double phase = 0.0) {
  std::vector<double> v(static_cast<std::size_t>(std::llround(seconds * sr)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / sr + phase);
  return v;
}

inline std::vector<double> white_noise(double rms, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, rms);
  std::vector<double> v(n);
  for (auto& x : v) x = std::clamp(g(rng), -1.0, 1.0);
  return v;
}

// Hand-assembled RIFF/WAVE buffer.
inline std::vector<char> wav_bytes(const std::vector<std::int16_t>& pcm, int sr = 24000, int channels = 1,
                                   int bits = 16, int format = 1) {
  std::vector<char> b;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>(v >> 8));
  };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  u32(36 + data_bytes);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  u32(16);
  u16(static_cast<std::uint16_t>(format));
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(sr));
  u32(static_cast<std::uint32_t>(sr * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  u32(data_bytes);
  for (auto s : pcm) u16(static_cast<std::uint16_t>(s));
  return b;
}

}  // namespace oracle

#endif  // PROSOTOK_TESTS_ORACLES_HPP
