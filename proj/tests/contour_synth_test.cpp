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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "prosotok/contour_synth.hpp"
#include "roundtrip.hpp"

namespace prosotok {
namespace {

// Largest-remainder split of `total` into n near-equal parts.
std::vector<int> oracle_split(int total, int n) {
  std::vector<int> v(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < total; ++i) ++v[static_cast<std::size_t>(i % n)];
  return v;
}

TEST(PhoneDurations, Examples) {
  auto d = synth_phone_durations(std::log(4.0), 6);
  EXPECT_EQ(d.frames, std::vector<int>(6, 4));
  EXPECT_FALSE(d.flagged);
  d = synth_phone_durations(std::log(4.0), 5);
  EXPECT_EQ(d.frames, std::vector<int>(5, 4));
  d = synth_phone_durations(std::log(1.4), 5);
  EXPECT_EQ(d.total(), 7);
  EXPECT_EQ(*std::max_element(d.frames.begin(), d.frames.end()) - *std::min_element(d.frames.begin(), d.frames.end()),
            1);
  EXPECT_EQ(d.frames, oracle_split(7, 5));
}

TEST(PhoneDurations, ClampsTooShort) {
  const auto d = synth_phone_durations(std::log(0.1), 4);
  EXPECT_TRUE(d.flagged);
  EXPECT_EQ(d.frames, std::vector<int>(4, 1));
  EXPECT_THROW(synth_phone_durations(0.0, 0), InputError);
}

TEST(PhoneDurations, SumAndSpreadProperty) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 3.5);
  for (int i = 0; i < 5000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 12);
    const double v = u(rng);
    const auto d = synth_phone_durations(v, n);
    const long want = std::max<long>(n, std::lround(std::exp(v) * n));
    ASSERT_EQ(d.total(), want);
    ASSERT_EQ(d.frames, oracle_split(static_cast<int>(want), n));
  }
}

TEST(F0Contour, ConstantAndLine) {
  const auto c = synth_f0_contour(0.0, 5.2, 0.0, 12);
  EXPECT_TRUE(c.feasible);
  for (double v : c.log_f0) EXPECT_NEAR(v, 5.2, 1e-15);

  const int n = 21;
  const double b = 0.01, a = 5.0;
  std::vector<double> t(n), line(n);
  for (int i = 0; i < n; ++i) line[i] = a + b * (i - (n - 1) / 2.0);
  const double line_range = oracle::percentile(line, 95.0) - oracle::percentile(line, 5.0);
  const auto l = synth_f0_contour(line_range, a, b, n);
  EXPECT_TRUE(l.feasible);
  EXPECT_NEAR(l.arch_scale, 0.0, 1e-9);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(l.log_f0[i], line[i], 1e-9);
}

TEST(F0Contour, InfeasibleTripleFlagged) {
  const auto c = synth_f0_contour(0.01, 5.0, 0.05, 40);
  EXPECT_FALSE(c.feasible);
  EXPECT_EQ(c.arch_scale, 0.0);
  EXPECT_THROW(synth_f0_contour(0.1, 5.0, 0.0, 1), InputError);
  EXPECT_THROW(synth_f0_contour(-0.1, 5.0, 0.0, 10), InputError);
}

TEST(F0Contour, FeasibleTriplesMatchExactly) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ur(0.0, 1.0), um(4.0, 6.0), us(-0.03, 0.03);
  int feasible = 0;
  for (int i = 0; i < 2000; ++i) {
    const int n = 3 + static_cast<int>(rng() % 100);
    const double r = ur(rng), m = um(rng), s = us(rng);
    const auto c = synth_f0_contour(r, m, s, n);
    if (!c.feasible) continue;
    ++feasible;
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) x[k] = k;
    ASSERT_NEAR(oracle::percentile(c.log_f0, 95.0) - oracle::percentile(c.log_f0, 5.0), r, 1e-6);
    ASSERT_NEAR(oracle::percentile(c.log_f0, 50.0), m, 1e-6);
    ASSERT_NEAR(oracle::ols_slope(x, c.log_f0), s, 1e-9);
  }
  EXPECT_GT(feasible, 500);
}

TEST(EnergyContour, Constant) {
  EXPECT_EQ(synth_energy_contour(-2.0, 10), std::vector<double>(10, -2.0));
  EXPECT_EQ(synth_energy_contour(0.5, 1).size(), 1u);
  EXPECT_THROW(synth_energy_contour(0.0, 0), InputError);
}

TEST(SynthSentence, ConstantWordFixedPoint) {
  const auto spec = roundtrip::realistic_spec();
  SentenceSequence s;
  s.text = "Hi.";
  WordEntry w;
  w.word = "hi";
  w.silence = quantize(0.0, Dim::kSilence, spec);
  const auto dur = quantize(std::log(6.0), Dim::kDuration, spec);
  const auto flat = quantize(0.0, Dim::kF0Range, spec);
  const auto zero_slope = ProsodyToken(256);
  w.prosody = std::array<ProsodyToken, 5>{dur, flat, ProsodyToken(200), zero_slope, ProsodyToken(300)};
  s.items.push_back(w);
  const std::vector<int> phones = {3};
  const auto plan = synth_sentence(s, spec, phones);
  const auto r = realize(plan, s);
  const auto f = extract_word_prosody(r.tracks, r.transcript);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(r.tracks.n_frames(), 18u);
  EXPECT_NEAR(f[0].duration, std::log(6.0), 1e-12);
  EXPECT_NEAR(f[0].f0_median, dequantize(ProsodyToken(200), Dim::kF0Median, spec), 1e-12);
  EXPECT_NEAR(f[0].energy, dequantize(ProsodyToken(300), Dim::kEnergy, spec), 1e-12);
}

TEST(SynthSentence, SilenceFrames) {
  const auto spec = roundtrip::realistic_spec();
  for (int b : {0, 40, 100, 200, 300}) {
    SentenceSequence s;
    s.text = "x";
    WordEntry w;
    w.word = "x";
    w.silence = ProsodyToken(b);
    s.items.push_back(w);
    const std::vector<int> phones = {2};
    const auto plan = synth_sentence(s, spec, phones);
    const int expect = std::max(0, static_cast<int>(std::lround(std::exp(dequantize(w.silence, Dim::kSilence, spec)))) - 1);
    const int pause = plan.segments.size() == 2 ? plan.segments[0].frames() : 0;
    EXPECT_EQ(pause, expect) << b;
    EXPECT_TRUE(plan.segments.back().flagged);
    EXPECT_FALSE(plan.segments.back().voiced);
  }
}

TEST(SynthSentence, Validation) {
  const auto spec = roundtrip::realistic_spec();
  SentenceSequence s;
  s.items.resize(2);
  EXPECT_THROW(synth_sentence(s, spec, std::vector<int>{1}), InputError);
  EXPECT_THROW(synth_sentence(s, spec, std::vector<int>{1, 0}), InputError);
}

TEST(SynthSentence, PlanCsv) {
  const auto spec = roundtrip::realistic_spec();
  std::mt19937_64 rng(2);
  const auto sample = roundtrip::random_feasible_sentence(rng, spec);
  const auto plan = synth_sentence(sample.sentence, spec, sample.phone_counts);
  std::ostringstream os;
  write_plan_csv(os, plan);
  const std::string csv = os.str();
  EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), plan.total_frames() + 1);
  for (const auto& seg : plan.segments) {
    int sum = 0;
    for (int f : seg.phone_frames) sum += f;
    if (seg.word_index >= 0) {
      EXPECT_EQ(sum, seg.frames());
    }
  }
}

TEST(RoundTrip, RandomFeasibleSentences) {
  const auto spec = roundtrip::realistic_spec();
  std::mt19937_64 rng(77);
  roundtrip::Agreement acc;
  for (int i = 0; i < 150; ++i) roundtrip::check_sentence(roundtrip::random_feasible_sentence(rng, spec), spec, acc);
  EXPECT_EQ(acc.rate(0), 1.0);
  EXPECT_EQ(acc.rate(2), 1.0);
  EXPECT_EQ(acc.rate(4), 1.0);
  EXPECT_GE(acc.rate(1), 0.95);
  EXPECT_GE(acc.rate(3), 0.95);
  EXPECT_EQ(acc.silence_within_one, acc.silence_pairs);
}

}  // namespace
}  // namespace prosotok
