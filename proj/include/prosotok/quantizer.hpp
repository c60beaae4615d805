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

#ifndef PROSOTOK_QUANTIZER_HPP
#define PROSOTOK_QUANTIZER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/error.hpp"
#include "prosotok/stats.hpp"

namespace prosotok {

inline constexpr int kBinCount = 512;

/// Quantized dimensions. The first five are the word-level prosody vector
/// in serialization order.
enum class Dim : std::uint8_t {
  kDuration = 0,
  kF0Range,
  kF0Median,
  kF0Slope,
  kEnergy,
  kSilence,
  kExtremity,
  kSpeakerF0,
};

inline constexpr std::size_t kDimCount = 8;
inline constexpr std::array<Dim, 5> kCoreDims = {Dim::kDuration, Dim::kF0Range, Dim::kF0Median,
                                                 Dim::kF0Slope, Dim::kEnergy};

inline constexpr std::array<std::string_view, kDimCount> kDimNames = {
    "duration", "f0_range", "f0_median", "f0_slope", "energy", "silence_duration", "extremity", "speaker_f0"};

inline std::string_view dim_name(Dim d) { return kDimNames[static_cast<std::size_t>(d)]; }

inline std::optional<Dim> dim_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kDimCount; ++i) {
    if (kDimNames[i] == name) return static_cast<Dim>(i);
  }
  return std::nullopt;
}

struct CapPercentiles {
  double lower;
  double upper;
};

/// Percentile positions (in %) at which each dimension is capped. The five
/// word dimensions are fixed; silence, extremity, and speaker F0 follow the
/// conventions documented in the README.
inline constexpr CapPercentiles default_cap_percentiles(Dim d) {
  switch (d) {
    case Dim::kDuration: return {0.1, 99.9};
    case Dim::kF0Range: return {0.0, 99.9};
    case Dim::kF0Median: return {0.1, 99.9};
    case Dim::kF0Slope: return {0.5, 99.5};
    case Dim::kEnergy: return {0.1, 100.0};
    case Dim::kSilence: return {0.0, 99.9};
    case Dim::kExtremity: return {0.1, 99.9};
    case Dim::kSpeakerF0: return {0.0, 99.9};  // same positions as f0_range
  }
  return {0.0, 100.0};
}

/// One of the 512 shared prosody vocabulary entries.
class ProsodyToken {
 public:
  constexpr ProsodyToken() = default;
  constexpr explicit ProsodyToken(int bin) : bin_(static_cast<std::uint16_t>(bin)) {
    if (bin < 0 || bin >= kBinCount) throw InputError("prosody bin out of range: " + std::to_string(bin));
  }
  constexpr int bin() const { return bin_; }
  friend constexpr bool operator==(ProsodyToken, ProsodyToken) = default;
  friend constexpr auto operator<=>(ProsodyToken, ProsodyToken) = default;

 private:
  std::uint16_t bin_ = 0;
};

struct DimensionCaps {
  double lower = 0.0;
  double upper = 0.0;
  CapPercentiles percentiles{0.0, 100.0};
  std::size_t sample_count = 0;
  bool calibrated = false;

  double width() const { return upper - lower; }
};

/// Immutable codec contract: caps per dimension plus the shared bin count.
class QuantizerSpec {
 public:
  QuantizerSpec() = default;

  const DimensionCaps& caps(Dim d) const { return dims_[static_cast<std::size_t>(d)]; }
  bool is_calibrated(Dim d) const { return caps(d).calibrated; }

  /// Returns a copy with one dimension replaced.
  QuantizerSpec with(Dim d, const DimensionCaps& c) const {
    if (!(c.lower < c.upper) || !std::isfinite(c.lower) || !std::isfinite(c.upper)) {
      throw InputError("caps for '" + std::string(dim_name(d)) + "' need finite lower < upper");
    }
    QuantizerSpec out = *this;
    out.dims_[static_cast<std::size_t>(d)] = c;
    out.dims_[static_cast<std::size_t>(d)].calibrated = true;
    return out;
  }

  static constexpr int bin_count() { return kBinCount; }

  friend bool operator==(const QuantizerSpec& a, const QuantizerSpec& b) {
    for (std::size_t i = 0; i < kDimCount; ++i) {
      const auto &x = a.dims_[i], &y = b.dims_[i];
      if (x.calibrated != y.calibrated) return false;
      if (x.calibrated && (x.lower != y.lower || x.upper != y.upper || x.sample_count != y.sample_count ||
                           x.percentiles.lower != y.percentiles.lower ||
                           x.percentiles.upper != y.percentiles.upper)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::array<DimensionCaps, kDimCount> dims_{};
};

/// Caps for one dimension at the given percentile positions. Non-finite
/// samples are dropped before counting.
inline DimensionCaps calibrate_dimension(Dim d, std::span<const double> samples, std::size_t min_samples = 1000,
                                         std::optional<CapPercentiles> pct = std::nullopt) {
  std::vector<double> v;
  v.reserve(samples.size());
  for (double x : samples) {
    if (std::isfinite(x)) v.push_back(x);
  }
  const std::string name(dim_name(d));
  if (v.size() < min_samples || v.empty()) {
    throw InputError("insufficient samples for '" + name + "': " + std::to_string(v.size()) + " < " +
                     std::to_string(std::max<std::size_t>(min_samples, 1)));
  }
  std::sort(v.begin(), v.end());
  DimensionCaps c;
  c.percentiles = pct.value_or(default_cap_percentiles(d));
  c.lower = percentile_sorted(v, c.percentiles.lower);
  c.upper = percentile_sorted(v, c.percentiles.upper);
  c.sample_count = v.size();
  c.calibrated = true;
  if (!(c.lower < c.upper)) throw InputError("degenerate dimension '" + name + "': lower cap equals upper cap");
  return c;
}

struct CalibrationSamples {
  std::array<std::vector<double>, kDimCount> values;

  std::vector<double>& operator[](Dim d) { return values[static_cast<std::size_t>(d)]; }
  const std::vector<double>& operator[](Dim d) const { return values[static_cast<std::size_t>(d)]; }
};

struct CalibrationOptions {
  // Word-level dimensions need a large sample; sentence- and speaker-level
  // ones are much rarer in a corpus.
  std::array<std::size_t, kDimCount> min_samples = {1000, 1000, 1000, 1000, 1000, 1000, 10, 10};
};

/// Calibrates the five word dimensions (required) and every other
/// dimension that has samples.
inline QuantizerSpec calibrate(const CalibrationSamples& samples, const CalibrationOptions& opts = {}) {
  QuantizerSpec spec;
  for (std::size_t i = 0; i < kDimCount; ++i) {
    const auto d = static_cast<Dim>(i);
    const bool core = i < kCoreDims.size();
    if (!core && samples[d].empty()) continue;
    spec = spec.with(d, calibrate_dimension(d, samples[d], opts.min_samples[i]));
  }
  return spec;
}

namespace detail {
inline const DimensionCaps& usable_caps(Dim d, const QuantizerSpec& spec) {
  const auto& c = spec.caps(d);
  if (!c.calibrated) throw InputError("dimension '" + std::string(dim_name(d)) + "' is not calibrated");
  return c;
}
}  // namespace detail

/// Clip to the caps, normalize to [0, 1], floor into 512 bins with the top
/// edge folded into bin 511.
inline ProsodyToken quantize(double value, Dim d, const QuantizerSpec& spec) {
  if (!std::isfinite(value)) throw InputError("quantize: non-finite value for '" + std::string(dim_name(d)) + "'");
  const auto& c = detail::usable_caps(d, spec);
  const double x = std::clamp((value - c.lower) / c.width(), 0.0, 1.0);
  return ProsodyToken(std::min(static_cast<int>(std::floor(x * kBinCount)), kBinCount - 1));
}

/// Bin centre.
inline double dequantize(ProsodyToken token, Dim d, const QuantizerSpec& spec) {
  const auto& c = detail::usable_caps(d, spec);
  return c.lower + (token.bin() + 0.5) / kBinCount * c.width();
}

/// True when the raw value falls outside the caps (it would be clipped).
inline bool is_extreme(double value, Dim d, const QuantizerSpec& spec) {
  const auto& c = detail::usable_caps(d, spec);
  return value < c.lower || value > c.upper;
}

inline ProsodyToken speaker_f0_token(double mean_log_f0, const QuantizerSpec& spec) {
  return quantize(mean_log_f0, Dim::kSpeakerF0, spec);
}

/// Pause lengths are coded as ln(1 + frames) so zero-length gaps stay finite.
inline double silence_log_duration(int frames) {
  if (frames < 0) throw InputError("negative silence length");
  return std::log1p(static_cast<double>(frames));
}

inline int silence_frames_from_log(double value) {
  return std::max(0, static_cast<int>(std::lround(std::exp(value))) - 1);
}

// ---------------------------------------------------------------------------
// Persistence.

inline nlohmann::json to_json(const QuantizerSpec& spec) {
  nlohmann::json dims = nlohmann::json::object();
  for (std::size_t i = 0; i < kDimCount; ++i) {
    const auto d = static_cast<Dim>(i);
    const auto& c = spec.caps(d);
    if (!c.calibrated) continue;
    dims[std::string(dim_name(d))] = {
        {"lower", c.lower},
        {"upper", c.upper},
        {"lower_percentile", c.percentiles.lower},
        {"upper_percentile", c.percentiles.upper},
        {"sample_count", c.sample_count},
    };
  }
  return {{"format", "prosotok-quantizer"}, {"version", 1}, {"bin_count", kBinCount}, {"dimensions", dims}};
}

inline QuantizerSpec quantizer_from_json(const nlohmann::json& j) {
  try {
    if (j.at("bin_count").get<int>() != kBinCount) throw InputError("quantizer spec: bin_count must be 512");
    QuantizerSpec spec;
    for (const auto& [name, dj] : j.at("dimensions").items()) {
      const auto d = dim_from_name(name);
      if (!d) throw InputError("quantizer spec: unknown dimension '" + name + "'");
      DimensionCaps c;
      c.lower = dj.at("lower").get<double>();
      c.upper = dj.at("upper").get<double>();
      c.percentiles = {dj.at("lower_percentile").get<double>(), dj.at("upper_percentile").get<double>()};
      c.sample_count = dj.value("sample_count", std::size_t{0});
      const auto expected = default_cap_percentiles(*d);
      const bool core = static_cast<std::size_t>(*d) < kCoreDims.size();
      if (core && (c.percentiles.lower != expected.lower || c.percentiles.upper != expected.upper)) {
        throw InputError("quantizer spec: '" + name + "' must be capped at its fixed percentiles");
      }
      spec = spec.with(*d, c);
    }
    for (Dim d : kCoreDims) {
      if (!spec.is_calibrated(d)) throw InputError("quantizer spec: missing dimension '" + std::string(dim_name(d)) + "'");
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("quantizer spec: ") + e.what());
  }
}

inline QuantizerSpec load_quantizer_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open quantizer spec '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("quantizer spec '" + path.string() + "': " + e.what());
  }
  return quantizer_from_json(j);
}

}  // namespace prosotok

#endif  // PROSOTOK_QUANTIZER_HPP
