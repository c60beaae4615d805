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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances and time limits are fixed
// below.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "prosotok.hpp"
#include "roundtrip.hpp"
#include "synthetic_corpus.hpp"

namespace {

using namespace prosotok;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kRoundTripValues = 100000;       // per dimension
constexpr double kRoundTripSeconds = 5.0;
constexpr double kPercentileTol = 1e-9;
constexpr double kPitchTolerance = 0.03;       // relative
constexpr double kPitchVoicedMin = 0.95;
constexpr double kPitchSeconds = 10.0;
constexpr double kSlopeTol = 1e-9;
constexpr double kEnergyShiftTol = 1e-6;
constexpr int kGrammarCases = 10000;
constexpr int kContourSentences = 1000;
constexpr double kContourRangeSlopeMin = 0.95;
constexpr double kContourSeconds = 30.0;
constexpr double kMetricTol = 1e-9;
constexpr double kPipelineSeconds = 60.0;
constexpr double kCorpusMinSeconds = 600.0;
constexpr int kPipelineJobs = 8;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------
Outcome quantizer_round_trip() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  CalibrationSamples s;
  for (std::size_t i = 0; i < kDimCount; ++i) {
    std::normal_distribution<double> g(static_cast<double>(i), 0.5 + 0.1 * i);
    s.values[i].resize(5000);
    for (auto& x : s.values[i]) x = g(rng);
  }
  const auto spec = calibrate(s);
  double worst = 0.0;
  bool monotone = true;
  for (std::size_t i = 0; i < kDimCount; ++i) {
    const auto d = static_cast<Dim>(i);
    const auto& c = spec.caps(d);
    std::uniform_real_distribution<double> u(c.lower, c.upper);
    std::vector<double> v(kRoundTripValues);
    for (auto& x : v) x = u(rng);
    for (double x : v) worst = std::max(worst, std::abs(dequantize(quantize(x, d, spec), d, spec) - x) / (c.width() / 1024));
    std::sort(v.begin(), v.end());
    for (std::size_t k = 1; k < v.size(); ++k) monotone = monotone && quantize(v[k - 1], d, spec) <= quantize(v[k], d, spec);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1.0 + 1e-9 && monotone && secs < kRoundTripSeconds,
          fmt("max |err|/(width/1024) = %.6f, monotone = %s, %.2f s (limit %.0f s)", worst, monotone ? "yes" : "no",
              secs, kRoundTripSeconds)};
}

// 2 ------------------------------------------------------------------------
Outcome capping_table() {
  // Samples 1..10001 in shuffled order: the p-th percentile is exactly
  // 1 + 100 p.
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(5));
  const std::array<std::pair<double, double>, 5> table = {
      std::pair{0.1, 99.9}, {0.0, 99.9}, {0.1, 99.9}, {0.5, 99.5}, {0.1, 100.0}};
  CalibrationSamples s;
  for (Dim d : kCoreDims) s[d] = v;
  const auto spec = calibrate(s);
  double worst = 0.0;
  bool positions = true;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& c = spec.caps(kCoreDims[i]);
    positions = positions && c.percentiles.lower == table[i].first && c.percentiles.upper == table[i].second;
    worst = std::max({worst, std::abs(c.lower - (1.0 + 100.0 * table[i].first)),
                      std::abs(c.upper - (1.0 + 100.0 * table[i].second)),
                      std::abs(c.lower - oracle::percentile(v, table[i].first)),
                      std::abs(c.upper - oracle::percentile(v, table[i].second))});
  }
  return {positions && worst <= kPercentileTol,
          fmt("percentile positions match = %s, max cap error = %.3g (tol %.0e)", positions ? "yes" : "no", worst,
              kPercentileTol)};
}

// 3 ------------------------------------------------------------------------
Outcome pitch_oracle() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (double f : {100.0, 150.0, 220.0, 300.0, 440.0}) {
    Utterance u;
    u.samples = oracle::sine(f, 1.0, 0.5);
    const auto t = frame_log_f0(u);
    std::vector<double> hz;
    const std::size_t first = 4, last = t.voiced.size() - 4;
    for (std::size_t i = first; i < last; ++i) {
      if (t.voiced[i]) hz.push_back(std::exp(t.log_f0[i]));
    }
    const double voiced = static_cast<double>(hz.size()) / static_cast<double>(last - first);
    const double med = hz.empty() ? 0.0 : oracle::percentile(hz, 50.0);
    ok = ok && voiced >= kPitchVoicedMin && std::abs(med - f) <= kPitchTolerance * f;
    detail += fmt("%.0f Hz: median %.2f, voiced %.3f; ", f, med, voiced);
  }
  Utterance silence;
  silence.samples.assign(24000, 0.0);
  const auto t = frame_log_f0(silence);
  const bool silent = std::none_of(t.voiced.begin(), t.voiced.end(), [](bool v) { return v; });
  const double secs = seconds_since(t0);
  return {ok && silent && secs < kPitchSeconds,
          detail + fmt("silence unvoiced = %s, %.2f s (limit %.0f s)", silent ? "yes" : "no", secs, kPitchSeconds)};
}

// 4 ------------------------------------------------------------------------
Outcome feature_exactness() {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> ua(3.5, 6.5), ub(-0.08, 0.08);
  double slope_err = 0.0, const_range = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = ua(rng), b = ub(rng);
    const int n = 2 + static_cast<int>(rng() % 150), start = static_cast<int>(rng() % 500);
    FrameTracks t;
    t.log_f0.resize(static_cast<std::size_t>(start + n));
    for (std::size_t i = 0; i < t.log_f0.size(); ++i) t.log_f0[i] = a + b * static_cast<double>(i);
    t.voiced.assign(t.log_f0.size(), true);
    t.log_energy.assign(t.log_f0.size(), 0.0);
    WordAlignment w;
    w.start_frame = start;
    w.end_frame = start + n;
    slope_err = std::max(slope_err, std::abs(word_f0_features(t, w).slope - b));
    std::fill(t.log_f0.begin(), t.log_f0.end(), a);
    const auto c = word_f0_features(t, w);
    const_range = std::max({const_range, std::abs(c.range), std::abs(c.slope)});
  }
  Utterance u;
  u.samples = oracle::white_noise(0.05, 24000, 9);
  const auto s = oracle::sine(180.0, 1.0, 0.2);
  for (std::size_t i = 0; i < u.samples.size(); ++i) u.samples[i] += s[i];
  const auto base = frame_log_energy(u);
  double shift_err = 0.0;
  for (double k : {0.01, 0.25, 0.5, 2.0, 3.5}) {
    Utterance v = u;
    for (double& x : v.samples) x *= k;
    const auto e = frame_log_energy(v);
    for (std::size_t i = 0; i < e.size(); ++i) shift_err = std::max(shift_err, std::abs(e[i] - base[i] - std::log(k)));
  }
  return {slope_err <= kSlopeTol && const_range == 0.0 && shift_err <= kEnergyShiftTol,
          fmt("max slope error %.3g (tol %.0e), constant-contour range %.3g, energy shift error %.3g (tol %.0e)",
              slope_err, kSlopeTol, const_range, shift_err, kEnergyShiftTol)};
}

// 5 ------------------------------------------------------------------------
Outcome grammar_round_trip() {
  std::mt19937_64 rng(55);
  int round_trip_fail = 0, misparse = 0, rejected = 0, invalid_markers = 0;
  for (int i = 0; i < kGrammarCases; ++i) {
    const bool g = i % 2 == 0;
    std::vector<SentenceSequence> ss;
    TokenStream t;
    for (int k = 0, n = 1 + static_cast<int>(rng() % 3); k < n; ++k) {
      ss.push_back(gen::random_sentence(rng, g));
      for (const auto& item : ss.back().items) invalid_markers += !item.prosody;
      serialize_sentence_into(ss.back(), g, t);
    }
    try {
      round_trip_fail += parse_sequence(t, g) != ss;
    } catch (const ParseError&) {
      ++round_trip_fail;
    }
    const TokenStream m = gen::mutate(t, rng);
    try {
      misparse += parse_sequence(m, g) != ss;
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  return {round_trip_fail == 0 && misparse == 0,
          fmt("%d/%d round trips exact (%d invalid markers), %d/%d mutations rejected, %d silent misparses",
              kGrammarCases - round_trip_fail, kGrammarCases, invalid_markers, rejected, kGrammarCases, misparse)};
}

// 6 ------------------------------------------------------------------------
Outcome cleaning_and_filtering() {
  const bool keep2 = !make_cleaning_report("u", 10, 2, 0.2).dropped;
  const bool drop3 = make_cleaning_report("u", 10, 3, 0.2).dropped;
  const std::vector<SpeakerStats> s = {{"short", 3599.0, 5.0, 1}, {"hour", 3600.0, 5.0, 1}};
  const auto kept = filter_speakers(s, 3600.0);
  const bool spk = kept.count("hour") == 1 && kept.count("short") == 0;
  return {keep2 && drop3 && spk, fmt("2/10 kept = %s, 3/10 dropped = %s, 3599 s excluded and 3600 s kept = %s",
                                     keep2 ? "yes" : "no", drop3 ? "yes" : "no", spk ? "yes" : "no")};
}

// 7 ------------------------------------------------------------------------
Outcome frequency_extremity() {
  std::mt19937_64 rng(77);
  std::vector<TokenStream> streams;
  for (int i = 0; i < 2000; ++i) {
    std::vector<SentenceSequence> ss = {gen::random_sentence(rng, false), gen::random_sentence(rng, false)};
    streams.push_back(build_training_sequence(ss, "Create a story", gen::random_token(rng), false));
  }
  const auto sequential = build_frequency_table(streams, false).table;
  bool equal = true;
  for (std::size_t shards : {2u, 3u, 7u, 16u}) {
    const auto parts = parallel_map(shards, 4, [&](std::size_t k) {
      const std::size_t lo = streams.size() * k / shards, hi = streams.size() * (k + 1) / shards;
      return build_frequency_table(std::span(streams).subspan(lo, hi - lo), false).table;
    });
    FrequencyTable forward, backward;
    for (const auto& p : parts) forward.merge(p);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) backward.merge(*it);
    equal = equal && forward == sequential && backward == sequential;
  }
  int checked = 0, violations = 0;
  for (int i = 0; i < 2000; ++i) {
    auto s = gen::random_sentence(rng, false);
    if (s.items.empty()) continue;
    const double base = extremity_score(s, sequential);
    auto& item = s.items[rng() % s.items.size()];
    const bool use_silence = !item.prosody || rng() % 6 == 0;
    ProsodyToken& slot = use_silence ? item.silence : (*item.prosody)[rng() % 5];
    std::vector<int> rarer;
    for (int b = 0; b < kBinCount; ++b) {
      if (sequential.count(b) < sequential.count(slot.bin())) rarer.push_back(b);
    }
    if (rarer.empty()) continue;
    slot = ProsodyToken(rarer[rng() % rarer.size()]);
    ++checked;
    violations += !(extremity_score(s, sequential) < base);
  }
  return {equal && violations == 0 && checked > 1000,
          fmt("sharded == sequential = %s, %d/%d rarer replacements lowered the score", equal ? "yes" : "no",
              checked - violations, checked)};
}

// 8 ------------------------------------------------------------------------
Outcome contour_round_trip() {
  const auto t0 = Clock::now();
  const auto spec = roundtrip::realistic_spec();
  std::mt19937_64 rng(88);
  roundtrip::Agreement acc;
  for (int i = 0; i < kContourSentences; ++i) {
    roundtrip::check_sentence(roundtrip::random_feasible_sentence(rng, spec), spec, acc);
  }
  const double secs = seconds_since(t0);
  const bool exact = acc.rate(0) == 1.0 && acc.rate(2) == 1.0 && acc.rate(4) == 1.0;
  const bool loose = acc.rate(1) >= kContourRangeSlopeMin && acc.rate(3) >= kContourRangeSlopeMin;
  return {exact && loose && secs < kContourSeconds,
          fmt("within one bin: duration %.4f, median %.4f, energy %.4f, range %.4f, slope %.4f over %zu words; "
              "%.2f s (limit %.0f s)",
              acc.rate(0), acc.rate(2), acc.rate(4), acc.rate(1), acc.rate(3), acc.pairs[0], secs, kContourSeconds)};
}

// 9 ------------------------------------------------------------------------
Outcome metric_fidelity() {
  std::vector<std::string> failed;
  auto check = [&](const char* name, double got, double want) {
    if (!(std::abs(got - want) <= kMetricTol)) failed.push_back(fmt("%s got %.12g want %.12g", name, got, want));
  };
  auto lp = [](std::string g, std::string w, bool m, std::vector<double> t) { return LogProbRecord{g, w, t, m}; };

  // Nested expectation: inner means per (group, word), outer mean over cells.
  const std::vector<LogProbRecord> emph = {
      lp("g1", "cat", true, {-1.0}), lp("g1", "cat", true, {-3.0}), lp("g1", "cat", false, {-2.5}),
      lp("g1", "dog", true, {std::log(0.5), std::log(0.5)}), lp("g1", "dog", false, {std::log(0.125)}),
      lp("g2", "cat", true, {-0.2}), lp("g2", "cat", false, {-0.4}), lp("g2", "cat", false, {-0.8})};
  // cat/g1: -2 - -2.5 = 0.5; dog/g1: ln .25 - ln .125 = ln 2; cat/g2: -0.2 - -0.6 = 0.4
  check("emphasis", emphasis_metric(emph).stat.mean, (0.5 + std::log(2.0) + 0.4) / 3.0);
  check("product rule", word_logprob(std::vector<double>{std::log(0.5), std::log(0.5)}), std::log(0.25));

  std::vector<LogProbRecord> sad;
  const std::array<double, 4> inner = {0.31, 0.12, 0.25, 0.132};  // mean 0.203
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const std::string g = "set" + std::to_string(i);
    sad.push_back(lp(g, "sad", true, {-1.0, -0.5}));
    sad.push_back(lp(g, "sad", true, {-1.5}));
    sad.push_back(lp(g, "sad", false, {-1.5 - inner[i]}));
    sad.push_back(lp(g, "happy", true, {-0.2}));
    sad.push_back(lp(g, "happy", false, {-0.7}));
  }
  check("emotion sad", emotion_metric(sad, "sad").stat.mean, 0.203);
  check("emotion happy", emotion_metric(sad, "happy").stat.mean, 0.5);

  auto meas = [](std::string pair, std::string style, std::string role, double f0, double rate) {
    UtteranceMeasure m;
    m.utterance_id = pair + style + role;
    m.pair_id = pair;
    m.style = style;
    m.role = role;
    m.speaker = "s";
    m.mean_f0_hz = f0;
    m.symbol_rate = rate;
    m.mean_log_energy = -3.0;
    return m;
  };
  const std::vector<UtteranceMeasure> style = {meas("q1", "talk", "", 212, 10), meas("q1", "narr", "", 210, 11),
                                               meas("q2", "talk", "", 204, 10), meas("q2", "narr", "", 200, 12)};
  const auto sp = style_pair_diff(style, "talk", "narr", MeasureField::kF0);
  check("style mean", sp.stat.mean, 3.0);
  check("style std", sp.stat.stddev, std::sqrt(2.0));
  check("style stderr", sp.stat.stderr_, 1.0);
  check("style rate", style_pair_diff(style, "talk", "narr", MeasureField::kSymbolRate).stat.mean, -1.5);

  const std::vector<UtteranceMeasure> slow = {meas("p1", "", "first", 0, 10.0), meas("p1", "", "last", 0, 9.5),
                                              meas("p2", "", "first", 0, 8.0), meas("p2", "", "last", 0, 7.2)};
  const auto sd = slowdown_metric(slow);
  check("slowdown", sd.ratio.stat.mean, (0.95 + 0.9) / 2.0);
  if (!sd.slowdown) failed.push_back("slowdown flag");

  const std::vector<UtteranceMeasure> dlg = {meas("d1", "", "A", 250, 10), meas("d1", "", "B", 200, 10),
                                             meas("d2", "", "A", 245, 10), meas("d2", "", "B", 200, 10)};
  check("dialogue", dialogue_contrast(dlg, MeasureField::kF0).stat.mean, 47.5);

  std::vector<FocusRecord> focus;
  for (int role = 0; role < 4; ++role) {
    for (int p = 0; p < 2; ++p) {
      focus.push_back({"p", static_cast<FocusRole>(role), FocusCondition::kPre, 220.0 + 2 * p});
      focus.push_back({"p", static_cast<FocusRole>(role), FocusCondition::kOn, 250.0 + 2 * p});
      focus.push_back({"p", static_cast<FocusRole>(role), FocusCondition::kPost, 180.0 + 2 * p});
    }
  }
  const auto fa = focus_aggregate(focus);
  check("focus pre", fa.cells[0][0]->mean, 221.0);
  check("focus on", fa.cells[1][1]->mean, 251.0);
  check("focus post", fa.cells[3][2]->mean, 181.0);
  if (!fa.on_focus_stress() || !fa.post_focus_compression()) failed.push_back("focus checks");

  std::string detail = "emphasis, emotion (sad = 0.203), style, focus, slowdown, dialogue fixtures";
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty(), detail};
}

// 10 -----------------------------------------------------------------------
int run_cli(const std::string& args) {
  const std::string cmd = std::string(PROSOTOK_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome pipeline_run(const fs::path& corpus, const fs::path& out, double* secs) {
  const auto t0 = Clock::now();
  const std::string common = fmt(" --jobs %d --seed 17 --min-speaker-seconds 60 ", kPipelineJobs);
  const std::string o = out.string();
  const std::vector<std::string> steps = {
      "extract --manifest " + (corpus / "manifest.csv").string() + common + "--out " + o + "/extract",
      "calibrate --features " + o + "/extract/features.jsonl" + common + "--out " + o + "/calibrate",
      "tokenize --features " + o + "/extract/features.jsonl --spec " + o + "/calibrate/quantizer.json" + common +
          "--out " + o + "/tokenize",
      "clean --features " + o + "/extract/features.jsonl --spec " + o + "/calibrate/quantizer.json" + common +
          "--out " + o + "/clean",
      "freq-table --tokens " + o + "/tokenize/tokens.jsonl --cleaning " + o + "/clean/cleaning.jsonl --spec " + o +
          "/calibrate/quantizer.json" + common + "--out " + o + "/freq",
  };
  for (const auto& s : steps) {
    if (const int code = run_cli(s); code != 0) return {false, fmt("step failed (exit %d): ", code) + s};
  }
  *secs = seconds_since(t0);
  return {true, ""};
}

Outcome desk_scale_pipeline() {
  const fs::path root = fs::temp_directory_path() / "prosotok_acceptance";
  fs::remove_all(root);
  demo::CorpusOptions opt;
  opt.speakers = 4;
  opt.utterances_per_speaker = 30;
  const auto utts = demo::write_corpus(root / "corpus", opt);
  double audio = 0.0;
  for (const auto& u : utts) audio += u.seconds;

  // Identical command lines both times; the first run's outputs are moved
  // aside before the second.
  double t1 = 0.0, t2 = 0.0;
  auto r1 = pipeline_run(root / "corpus", root / "run", &t1);
  if (!r1.pass) return r1;
  fs::rename(root / "run", root / "run1");
  auto r2 = pipeline_run(root / "corpus", root / "run", &t2);
  if (!r2.pass) return r2;
  fs::rename(root / "run", root / "run2");

  std::size_t files = 0, differing = 0;
  std::string differing_names;
  for (const auto& e : fs::recursive_directory_iterator(root / "run1")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), root / "run1");
    if (slurp(e.path()) != slurp(root / "run2" / rel)) {
      ++differing;
      differing_names += " " + rel.string();
    }
  }
  const auto tokens = slurp(root / "run1/tokenize/tokens.jsonl");
  const auto lines = std::count(tokens.begin(), tokens.end(), '\n');
  const auto summary = nlohmann::json::parse(slurp(root / "run1/clean/run_summary.json"));
  const bool pass = audio >= kCorpusMinSeconds && std::max(t1, t2) < kPipelineSeconds && differing == 0 &&
                    lines == static_cast<long>(utts.size());
  if (pass) fs::remove_all(root);
  return {pass, (differing ? "differing:" + differing_names + "; " : std::string()) + fmt("%.1f s of audio, %zu utterances, %ld token lines, %d dropped by cleaning; runs took %.1f s and "
                    "%.1f s at %d workers (limit %.0f s); %zu/%zu output files byte-identical",
                    audio, utts.size(), lines, summary["dropped"].get<int>(), t1, t2, kPipelineJobs,
                    kPipelineSeconds, files - differing, files)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"quantizer round trip", quantizer_round_trip},
      {"capping table fidelity", capping_table},
      {"pitch oracle", pitch_oracle},
      {"feature exactness", feature_exactness},
      {"grammar round trip", grammar_round_trip},
      {"cleaning and filtering", cleaning_and_filtering},
      {"frequency and extremity", frequency_extremity},
      {"contour round trip", contour_round_trip},
      {"metric formula fidelity", metric_fidelity},
      {"desk-scale end-to-end", desk_scale_pipeline},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu acceptance criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
