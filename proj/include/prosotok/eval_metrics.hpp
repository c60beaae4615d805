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

#ifndef PROSOTOK_EVAL_METRICS_HPP
#define PROSOTOK_EVAL_METRICS_HPP

#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include "prosotok/audio_features.hpp"
#include "prosotok/csv.hpp"
#include "prosotok/error.hpp"
#include "prosotok/ingest.hpp"
#include "prosotok/stats.hpp"

namespace prosotok {

struct UtteranceMeasure {
  std::string utterance_id;
  std::string style;
  std::string pair_id;
  std::string speaker;
  std::string role;
  std::optional<double> mean_f0_hz;  // empty when the span has no voiced frame
  double symbol_rate = std::numeric_limits<double>::quiet_NaN();
  double mean_log_energy = std::numeric_limits<double>::quiet_NaN();
};

enum class MeasureField { kF0, kSymbolRate, kEnergy };

inline MeasureField measure_field_from_name(std::string_view name) {
  if (name == "f0" || name == "mean_f0_hz") return MeasureField::kF0;
  if (name == "symbol_rate" || name == "duration") return MeasureField::kSymbolRate;
  if (name == "energy" || name == "mean_log_energy") return MeasureField::kEnergy;
  throw InputError("unknown measure field '" + std::string(name) + "'");
}

inline std::optional<double> field_value(const UtteranceMeasure& m, MeasureField f) {
  double v = 0.0;
  switch (f) {
    case MeasureField::kF0:
      if (!m.mean_f0_hz) return std::nullopt;
      v = *m.mean_f0_hz;
      break;
    case MeasureField::kSymbolRate: v = m.symbol_rate; break;
    case MeasureField::kEnergy: v = m.mean_log_energy; break;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

/// Utterance-level F0 (Hz, voiced frames only), symbol rate and mean
/// log-energy over a frame span.
inline UtteranceMeasure measure_utterance(const FrameTracks& tracks, FrameSpan span, int symbol_count,
                                          double hop_seconds = kHopSeconds) {
  if (span.start < 0 || span.end > static_cast<int>(tracks.n_frames()) || span.length() <= 0) {
    throw InputError("measure_utterance: span outside track");
  }
  if (symbol_count < 1) throw InputError("measure_utterance: symbol_count must be >= 1");
  UtteranceMeasure m;
  CompensatedSum f0, energy;
  std::size_t voiced = 0;
  for (int i = span.start; i < span.end; ++i) {
    energy.add(tracks.log_energy[i]);
    if (tracks.voiced[i]) {
      f0.add(std::exp(tracks.log_f0[i]));
      ++voiced;
    }
  }
  if (voiced > 0) m.mean_f0_hz = f0.value() / static_cast<double>(voiced);
  m.symbol_rate = symbol_count / (span.length() * hop_seconds);
  m.mean_log_energy = energy.value() / span.length();
  return m;
}

/// Aggregate with the count of inputs that could not be used.
struct MetricResult {
  SummaryStat stat;
  std::size_t excluded = 0;
};

inline nlohmann::json to_json(const MetricResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"mean", num(r.stat.mean)},
          {"std", num(r.stat.stddev)},
          {"stderr", num(r.stat.stderr_)},
          {"n", r.stat.n},
          {"excluded", r.excluded}};
}

namespace detail {
// Groups measures by key and role/style label; duplicate labels within a
// key are an input error.
template <typename KeyFn, typename LabelFn>
std::map<std::string, std::map<std::string, const UtteranceMeasure*>> group_measures(
    std::span<const UtteranceMeasure> measures, KeyFn key, LabelFn label) {
  std::map<std::string, std::map<std::string, const UtteranceMeasure*>> groups;
  for (const auto& m : measures) {
    auto& slot = groups[key(m)][label(m)];
    if (slot) throw InputError("duplicate measure for '" + key(m) + "' / '" + label(m) + "'");
    slot = &m;
  }
  return groups;
}

inline MetricResult paired_difference(std::span<const UtteranceMeasure> measures, auto key, auto label,
                                      std::string_view a, std::string_view b, MeasureField field,
                                      bool ratio = false) {
  const auto groups = group_measures(measures, key, label);
  std::vector<double> diffs;
  MetricResult r;
  for (const auto& [k, members] : groups) {
    auto ia = members.find(std::string(a));
    auto ib = members.find(std::string(b));
    if (ia == members.end() || ib == members.end()) {
      ++r.excluded;
      continue;
    }
    const auto va = field_value(*ia->second, field);
    const auto vb = field_value(*ib->second, field);
    if (!va || !vb || (ratio && !(*vb > 0.0))) {
      ++r.excluded;
      continue;
    }
    diffs.push_back(ratio ? *va / *vb : *va - *vb);
  }
  r.stat = summarize(diffs);
  return r;
}
}  // namespace detail

/// Mean over matched (quote, speaker) pairs of field(styleA) - field(styleB).
inline MetricResult style_pair_diff(std::span<const UtteranceMeasure> measures, std::string_view style_a,
                                    std::string_view style_b, MeasureField field) {
  return detail::paired_difference(
      measures, [](const UtteranceMeasure& m) { return m.pair_id + '\x1f' + m.speaker; },
      [](const UtteranceMeasure& m) { return m.style; }, style_a, style_b, field);
}

/// Mean over passages of symbol_rate(last) / symbol_rate(first); roles are
/// "first" and "last", pair_id names the passage.
struct SlowdownResult {
  MetricResult ratio;
  bool slowdown = false;
};

inline SlowdownResult slowdown_metric(std::span<const UtteranceMeasure> measures) {
  SlowdownResult out;
  out.ratio = detail::paired_difference(
      measures, [](const UtteranceMeasure& m) { return m.pair_id; },
      [](const UtteranceMeasure& m) { return m.role; }, "last", "first", MeasureField::kSymbolRate, true);
  out.slowdown = out.ratio.stat.n > 0 && out.ratio.stat.mean < 1.0;
  return out;
}

/// Second-round dialogue contrast. Role "A" is the speaker whose reference
/// utterance had the higher value of the contrasted field, so a carried-over
/// contrast is positive.
inline MetricResult dialogue_contrast(std::span<const UtteranceMeasure> measures, MeasureField field) {
  return detail::paired_difference(
      measures, [](const UtteranceMeasure& m) { return m.pair_id; },
      [](const UtteranceMeasure& m) { return m.role; }, "A", "B", field);
}

// ---------------------------------------------------------------------------
// Log-probability metrics.

struct LogProbRecord {
  std::string group_id;
  std::string candidate_word;
  std::vector<double> token_logprobs;
  bool matches = false;  // emphasized / emotion matches
};

/// log q(W = w | u): the word's probability is the product of its tokens'.
inline double word_logprob(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw InputError("word_logprob: no tokens");
  CompensatedSum s;
  for (double lp : token_logprobs) {
    if (!(lp <= 0.0)) throw InputError("invalid log-probability " + std::to_string(lp));
    s.add(lp);
  }
  return s.value();
}

namespace detail {
// E_key[ E_{match} log q - E_{mismatch} log q ].
template <typename KeyFn>
MetricResult nested_logprob_difference(std::span<const LogProbRecord> records, KeyFn key) {
  struct Cell {
    CompensatedSum match, mismatch;
    std::size_t n_match = 0, n_mismatch = 0;
  };
  std::map<std::string, Cell> cells;
  for (const auto& r : records) {
    auto& c = cells[key(r)];
    const double lq = word_logprob(r.token_logprobs);
    if (r.matches) {
      c.match.add(lq);
      ++c.n_match;
    } else {
      c.mismatch.add(lq);
      ++c.n_mismatch;
    }
  }
  std::vector<double> diffs;
  MetricResult out;
  for (const auto& [k, c] : cells) {
    if (c.n_match == 0 || c.n_mismatch == 0) {
      ++out.excluded;
      continue;
    }
    diffs.push_back(c.match.value() / static_cast<double>(c.n_match) -
                    c.mismatch.value() / static_cast<double>(c.n_mismatch));
  }
  out.stat = summarize(diffs);
  return out;
}
}  // namespace detail

/// Emphasis detection: inner difference per (parallel set, word), then the
/// mean across all such pairs.
inline MetricResult emphasis_metric(std::span<const LogProbRecord> records) {
  return detail::nested_logprob_difference(
      records, [](const LogProbRecord& r) { return r.group_id + '\x1f' + r.candidate_word; });
}

/// Emotion recognition for one emotion word: inner difference per parallel
/// set, averaged over sets. Words are not pooled.
inline MetricResult emotion_metric(std::span<const LogProbRecord> records, std::string_view emotion_word) {
  std::vector<LogProbRecord> subset;
  for (const auto& r : records) {
    if (r.candidate_word == emotion_word) subset.push_back(r);
  }
  return detail::nested_logprob_difference(subset, [](const LogProbRecord& r) { return r.group_id; });
}

inline std::map<std::string, MetricResult> emotion_metrics(std::span<const LogProbRecord> records) {
  std::map<std::string, MetricResult> out;
  std::map<std::string, bool> words;
  for (const auto& r : records) words[r.candidate_word] = true;
  for (const auto& [w, _] : words) out[w] = emotion_metric(records, w);
  return out;
}

// ---------------------------------------------------------------------------
// Contrastive focus.

enum class FocusRole { kSubject = 0, kVerb, kObject, kAdverbial };
enum class FocusCondition { kPre = 0, kOn, kPost };

inline constexpr std::array<std::string_view, 4> kFocusRoleNames = {"subject", "verb", "object", "adverbial"};
inline constexpr std::array<std::string_view, 3> kFocusConditionNames = {"pre-focus", "on-focus", "post-focus"};

inline FocusRole focus_role_from_name(std::string_view s) {
  for (std::size_t i = 0; i < kFocusRoleNames.size(); ++i) {
    if (kFocusRoleNames[i] == s) return static_cast<FocusRole>(i);
  }
  throw InputError("unknown component role '" + std::string(s) + "'");
}

inline FocusCondition focus_condition_from_name(std::string_view s) {
  for (std::size_t i = 0; i < kFocusConditionNames.size(); ++i) {
    if (kFocusConditionNames[i] == s) return static_cast<FocusCondition>(i);
  }
  throw InputError("unknown focus condition '" + std::string(s) + "'");
}

struct FocusRecord {
  std::string passage_id;
  FocusRole role = FocusRole::kSubject;
  FocusCondition condition = FocusCondition::kPre;
  double mean_f0_hz = 0.0;
};

struct FocusSummary {
  // [role][condition]; empty when no record fell in the cell.
  std::array<std::array<std::optional<SummaryStat>, 3>, 4> cells;
  // Per role; empty when the role lacks a needed cell.
  std::array<std::optional<bool>, 4> on_focus_max;
  std::array<std::optional<bool>, 4> post_focus_compressed;

  /// True when every role that could be checked passes, and at least one could.
  bool on_focus_stress() const { return all_checked(on_focus_max); }
  bool post_focus_compression() const { return all_checked(post_focus_compressed); }

 private:
  static bool all_checked(const std::array<std::optional<bool>, 4>& v) {
    bool any = false;
    for (const auto& x : v) {
      if (!x) continue;
      if (!*x) return false;
      any = true;
    }
    return any;
  }
};

inline FocusSummary focus_aggregate(std::span<const FocusRecord> records) {
  std::array<std::array<std::vector<double>, 3>, 4> buckets;
  for (const auto& r : records) {
    if (!std::isfinite(r.mean_f0_hz)) throw InputError("focus record '" + r.passage_id + "' has non-finite F0");
    buckets[static_cast<std::size_t>(r.role)][static_cast<std::size_t>(r.condition)].push_back(r.mean_f0_hz);
  }
  FocusSummary out;
  for (std::size_t role = 0; role < 4; ++role) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (!buckets[role][c].empty()) out.cells[role][c] = summarize(buckets[role][c]);
    }
    const auto& pre = out.cells[role][0];
    const auto& on = out.cells[role][1];
    const auto& post = out.cells[role][2];
    if (on && (pre || post)) {
      out.on_focus_max[role] = (!pre || on->mean > pre->mean) && (!post || on->mean > post->mean);
    }
    if (pre && post) out.post_focus_compressed[role] = post->mean < pre->mean;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input parsing.

inline std::vector<UtteranceMeasure> parse_measures_csv(const CsvTable& t) {
  const auto c_id = t.column("utterance_id"), c_style = t.column("style"), c_pair = t.column("pair_id"),
             c_spk = t.column("speaker"), c_role = t.column("role"), c_f0 = t.column("mean_f0_hz"),
             c_rate = t.column("symbol_rate"), c_en = t.column("mean_log_energy");
  auto num = [](const std::string& s, const std::string& what) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError("measures CSV: bad number '" + s + "' in " + what);
    }
  };
  std::vector<UtteranceMeasure> out;
  for (const auto& row : t.rows) {
    UtteranceMeasure m;
    m.utterance_id = row[c_id];
    m.style = row[c_style];
    m.pair_id = row[c_pair];
    m.speaker = row[c_spk];
    m.role = row[c_role];
    if (const double f0 = num(row[c_f0], "mean_f0_hz"); std::isfinite(f0)) m.mean_f0_hz = f0;
    m.symbol_rate = num(row[c_rate], "symbol_rate");
    m.mean_log_energy = num(row[c_en], "mean_log_energy");
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<FocusRecord> parse_focus_csv(const CsvTable& t) {
  const auto c_id = t.column("passage_id"), c_role = t.column("component_role"), c_cond = t.column("condition"),
             c_f0 = t.column("mean_f0_hz");
  std::vector<FocusRecord> out;
  for (const auto& row : t.rows) {
    FocusRecord r;
    r.passage_id = row[c_id];
    r.role = focus_role_from_name(row[c_role]);
    r.condition = focus_condition_from_name(row[c_cond]);
    try {
      r.mean_f0_hz = std::stod(row[c_f0]);
    } catch (const std::exception&) {
      throw InputError("focus CSV: bad F0 '" + row[c_f0] + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// One JSON object per line: {"group", "word", "condition": "match"|"mismatch", "token_logprobs": [...]}.
inline std::vector<LogProbRecord> parse_logprob_jsonl(std::istream& in) {
  std::vector<LogProbRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LogProbRecord r;
      r.group_id = j.at("group").get<std::string>();
      r.candidate_word = j.at("word").get<std::string>();
      const auto cond = j.at("condition").get<std::string>();
      if (cond != "match" && cond != "mismatch") throw InputError("condition must be 'match' or 'mismatch'");
      r.matches = cond == "match";
      r.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
      word_logprob(r.token_logprobs);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("log-prob JSONL line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("log-prob JSONL line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace prosotok

#endif  // PROSOTOK_EVAL_METRICS_HPP
