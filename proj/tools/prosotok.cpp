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

// prosotok: batch front end for the prosody tokenization pipeline.
//
//   prosotok extract     --manifest M --out D
//   prosotok calibrate   --features D/features.jsonl --out D
//   prosotok tokenize    --spec S (--features F | --manifest M) --out D
//   prosotok clean       --features F --spec S --out D
//   prosotok freq-table  --tokens T --out D [--spec S] [--cleaning C]
//   prosotok synth       --spec S --tokens T --out D [--features F]
//   prosotok prompt      --spec S --text "..." --speaker-bin N --out D
//   prosotok eval-style | eval-focus | eval-logprob | eval-dialogue ...
//
// Exit codes: 0 ok, 2 usage, 3 input or schema error, 4 internal error.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <boost/program_options.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prosotok.hpp"

namespace po = boost::program_options;
namespace fs = std::filesystem;
using nlohmann::json;

namespace prosotok::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string manifest;
  std::string out;
  std::string spec;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool include_global = false;
  double threshold = 0.2;
  double min_speaker_seconds = 3600.0;
};

// Collects artifacts in memory; nothing touches the output directory
// until every input has been validated.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  std::ostringstream& file(const std::string& name) { return files_[name]; }

  void commit(const json& summary) {
    fs::create_directories(dir_);
    for (auto& [name, os] : files_) write_atomic(dir_ / name, os.str());
    json s = summary;
    s["outputs"] = json::array();
    for (const auto& [name, _] : files_) s["outputs"].push_back(name);
    write_atomic(dir_ / "run_summary.json", s.dump(2) + "\n");
  }

 private:
  static void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw Error(ErrorKind::kInternal, "cannot write '" + tmp.string() + "'");
      os << content;
      if (!os.flush()) throw Error(ErrorKind::kInternal, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
  }

  fs::path dir_;
  std::map<std::string, std::ostringstream> files_;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

std::vector<UtteranceFeatures> read_features(const fs::path& path) {
  std::vector<UtteranceFeatures> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    try {
      out.push_back(utterance_features_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, TokenStream>> read_tokens(const fs::path& path) {
  std::vector<std::pair<std::string, TokenStream>> out;
  for (const auto& line : read_lines(path)) {
    out.push_back(line.front() == '{' ? from_jsonl_line(line) : from_plain_line(line));
  }
  return out;
}

std::vector<UtteranceFeatures> extract_all(const fs::path& manifest, unsigned jobs) {
  const auto entries = load_manifest(manifest);
  spdlog::info("extracting {} utterances with {} workers", entries.size(), jobs);
  return parallel_map(entries.size(), jobs, [&](std::size_t i) { return extract_features(entries[i]); });
}

std::vector<UtteranceFeatures> features_from(const po::variables_map& vm, const RunConfig& cfg) {
  if (vm.count("features")) return read_features(vm["features"].as<std::string>());
  if (!cfg.manifest.empty()) return extract_all(cfg.manifest, cfg.jobs);
  throw UsageError("need --features or --manifest");
}

std::string require(const po::variables_map& vm, const char* name) {
  if (!vm.count(name)) throw UsageError(std::string("missing --") + name);
  return vm[name].as<std::string>();
}

json config_json(const RunConfig& c) {
  return {{"manifest", c.manifest},
          {"spec", c.spec},
          {"seed", c.seed},
          {"jobs", c.jobs},
          {"include_global", c.include_global},
          {"threshold", c.threshold},
          {"min_speaker_seconds", c.min_speaker_seconds}};
}

json summary(const std::string& cmd, const RunConfig& cfg) {
  return {{"subcommand", cmd}, {"config", config_json(cfg)}};
}

QuantizerSpec spec_from(const RunConfig& cfg) {
  if (cfg.spec.empty()) throw UsageError("missing --spec");
  return load_quantizer_spec(cfg.spec);
}

// ---------------------------------------------------------------------------

int cmd_extract(const po::variables_map& vm, const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw UsageError("missing --manifest");
  const auto feats = extract_all(cfg.manifest, cfg.jobs);
  Artifacts out(cfg.out);
  auto& fj = out.file("features.jsonl");
  for (const auto& f : feats) fj << to_json(f).dump() << '\n';
  auto& sc = out.file("speaker_stats.csv");
  sc << "speaker_id,total_speech_seconds,mean_log_f0,utterance_count\n";
  for (const auto& s : speaker_stats(feats)) {
    sc << s.speaker_id << ',' << format_double(s.total_speech_seconds) << ','
       << (std::isnan(s.mean_log_f0) ? std::string() : format_double(s.mean_log_f0)) << ',' << s.utterance_count
       << '\n';
  }
  std::size_t words = 0;
  for (const auto& f : feats) words += f.word_count();
  auto s = summary("extract", cfg);
  s["utterances"] = feats.size();
  s["words"] = words;
  out.commit(s);
  (void)vm;
  return 0;
}

std::vector<UtteranceFeatures> kept_speakers(std::vector<UtteranceFeatures> feats, double min_seconds,
                                             std::size_t* excluded) {
  const auto keep = filter_speakers(speaker_stats(feats), min_seconds);
  std::vector<UtteranceFeatures> out;
  for (auto& f : feats) {
    if (keep.count(f.speaker)) out.push_back(std::move(f));
  }
  *excluded = feats.size() - out.size();
  return out;
}

int cmd_calibrate(const po::variables_map& vm, const RunConfig& cfg) {
  std::size_t excluded = 0;
  const auto feats = kept_speakers(features_from(vm, cfg), cfg.min_speaker_seconds, &excluded);
  if (excluded) spdlog::warn("{} utterances excluded by the speaker-duration filter", excluded);
  const auto spec = calibrate(calibration_samples(feats));
  Artifacts out(cfg.out);
  out.file("quantizer.json") << to_json(spec).dump(2) << '\n';
  auto s = summary("calibrate", cfg);
  s["utterances"] = feats.size();
  s["excluded_utterances"] = excluded;
  out.commit(s);
  return 0;
}

struct Tokenized {
  std::string utterance_id;
  TokenStream tokens;
};

std::optional<Tokenized> tokenize_utterance(const UtteranceFeatures& f, const QuantizerSpec& spec,
                                            const std::map<std::string, double>& speaker_mean,
                                            const RunConfig& cfg, const FrequencyTable* table) {
  const auto it = speaker_mean.find(f.speaker);
  if (it == speaker_mean.end() || std::isnan(it->second)) return std::nullopt;
  std::vector<SentenceSequence> sentences;
  for (const auto& sf : f.sentences) {
    SentenceSequence s = tokenize_sentence(sf, spec);
    if (cfg.include_global) s.global = global_token(extremity_score(s, *table), spec);
    sentences.push_back(std::move(s));
  }
  return Tokenized{f.utterance_id,
                   build_training_sequence(sentences, select_instruction(cfg.seed, f.utterance_id),
                                           speaker_f0_token(it->second, spec), cfg.include_global)};
}

int cmd_tokenize(const po::variables_map& vm, const RunConfig& cfg) {
  const auto spec = spec_from(cfg);
  if (!spec.is_calibrated(Dim::kSilence) || !spec.is_calibrated(Dim::kSpeakerF0)) {
    throw InputError("quantizer spec lacks silence_duration or speaker_f0 caps");
  }
  std::optional<FrequencyTable> table;
  if (cfg.include_global) {
    if (!vm.count("freq-table")) throw UsageError("--include-global needs --freq-table");
    std::ifstream in(vm["freq-table"].as<std::string>());
    if (!in) throw InputError("cannot open frequency table");
    table = frequency_table_from_json(json::parse(in));
    if (!spec.is_calibrated(Dim::kExtremity)) throw InputError("quantizer spec lacks extremity caps");
  }
  const auto feats = features_from(vm, cfg);
  std::map<std::string, double> speaker_mean;
  for (const auto& s : speaker_stats(feats)) speaker_mean[s.speaker_id] = s.mean_log_f0;
  const auto results = parallel_map(feats.size(), cfg.jobs, [&](std::size_t i) {
    return tokenize_utterance(feats[i], spec, speaker_mean, cfg, table ? &*table : nullptr);
  });
  const bool plain = vm.count("format") && vm["format"].as<std::string>() == "plain";
  Artifacts out(cfg.out);
  auto& os = out.file(plain ? "tokens.txt" : "tokens.jsonl");
  std::size_t written = 0, skipped = 0;
  for (const auto& r : results) {
    if (!r) {
      ++skipped;
      continue;
    }
    os << (plain ? to_plain_line(r->utterance_id, r->tokens) : to_jsonl_line(r->utterance_id, r->tokens)) << '\n';
    ++written;
  }
  if (skipped) spdlog::warn("{} utterances skipped: speaker has no voiced frames", skipped);
  auto s = summary("tokenize", cfg);
  s["utterances"] = written;
  s["skipped"] = skipped;
  out.commit(s);
  return 0;
}

int cmd_clean(const po::variables_map& vm, const RunConfig& cfg) {
  const auto spec = spec_from(cfg);
  const auto feats = features_from(vm, cfg);
  const auto keep = filter_speakers(speaker_stats(feats), cfg.min_speaker_seconds);
  Artifacts out(cfg.out);
  auto& os = out.file("cleaning.jsonl");
  std::size_t dropped = 0;
  for (const auto& f : feats) {
    CleaningReport r = f.word_count() ? clean_utterance(f, spec, cfg.threshold)
                                      : CleaningReport{f.utterance_id, 0, 0, true, "no words"};
    if (!keep.count(f.speaker)) {
      r.dropped = true;
      r.reason = r.reason.empty() ? "speaker below minimum duration" : r.reason + "; speaker below minimum duration";
    }
    dropped += r.dropped;
    os << to_json(r).dump() << '\n';
  }
  auto s = summary("clean", cfg);
  s["utterances"] = feats.size();
  s["dropped"] = dropped;
  out.commit(s);
  return 0;
}

int cmd_freq_table(const po::variables_map& vm, const RunConfig& cfg) {
  auto tokens = read_tokens(require(vm, "tokens"));
  if (vm.count("cleaning")) {
    std::map<std::string, bool> dropped;
    for (const auto& line : read_lines(vm["cleaning"].as<std::string>())) {
      const auto j = json::parse(line);
      dropped[j.at("utterance_id").get<std::string>()] = j.at("dropped").get<bool>();
    }
    std::erase_if(tokens, [&](const auto& t) { return dropped.count(t.first) && dropped[t.first]; });
  }
  std::vector<TokenStream> streams;
  for (auto& [id, t] : tokens) streams.push_back(std::move(t));
  if (streams.empty()) throw InputError("no token streams left to count (all dropped by cleaning?)");

  // Shards are merged in index order, so the result does not depend on
  // the worker count.
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(cfg.jobs, streams.size()));
  const auto parts = parallel_map(shards, cfg.jobs, [&](std::size_t k) {
    const std::size_t lo = streams.size() * k / shards, hi = streams.size() * (k + 1) / shards;
    return build_frequency_table(std::span(streams).subspan(lo, hi - lo), cfg.include_global);
  });
  FrequencyTable table;
  std::size_t skipped = 0;
  for (const auto& p : parts) {
    table.merge(p.table);
    skipped += p.skipped_streams;
  }
  if (skipped) spdlog::warn("{} token streams failed to parse and were skipped", skipped);

  Artifacts out(cfg.out);
  out.file("freq_table.json") << to_json(table).dump() << '\n';
  auto s = summary("freq-table", cfg);
  s["streams"] = streams.size();
  s["skipped_streams"] = skipped;
  s["token_total"] = table.total();
  if (!cfg.spec.empty()) {
    std::vector<double> scores;
    for (const auto& stream : streams) {
      try {
        for (const auto& sent : parse_training_sequence(stream, cfg.include_global).sentences) {
          if (!sent.items.empty()) scores.push_back(extremity_score(sent, table));
        }
      } catch (const ParseError&) {
      }
    }
    const auto spec = spec_from(cfg).with(Dim::kExtremity, calibrate_dimension(Dim::kExtremity, scores, 10));
    out.file("quantizer.json") << to_json(spec).dump(2) << '\n';
    auto& sc = out.file("extremity_scores.csv");
    sc << "index,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) sc << i << ',' << format_double(scores[i]) << '\n';
    s["sentences_scored"] = scores.size();
  }
  out.commit(s);
  return 0;
}

int phones_guess(const std::string& word) {
  int letters = 0;
  for (unsigned char c : word) letters += std::isalpha(c) ? 1 : 0;
  return std::max(1, (letters + 1) / 2);
}

int cmd_synth(const po::variables_map& vm, const RunConfig& cfg) {
  const auto spec = spec_from(cfg);
  const auto tokens = read_tokens(require(vm, "tokens"));
  std::map<std::string, const UtteranceFeatures*> by_id;
  std::vector<UtteranceFeatures> feats;
  if (vm.count("features")) {
    feats = read_features(vm["features"].as<std::string>());
    for (const auto& f : feats) by_id[f.utterance_id] = &f;
  }
  Artifacts out(cfg.out);
  auto& index = out.file("plans.csv");
  index << "utterance_id,sentence,frames,flagged_segments\n";
  std::size_t flagged_total = 0;
  for (const auto& [id, stream] : tokens) {
    const auto seq = parse_training_sequence(stream, cfg.include_global);
    const UtteranceFeatures* f = by_id.count(id) ? by_id[id] : nullptr;
    for (std::size_t si = 0; si < seq.sentences.size(); ++si) {
      const auto& s = seq.sentences[si];
      std::vector<int> phones;
      for (std::size_t wi = 0; wi < s.items.size(); ++wi) {
        const bool known = f && si < f->sentences.size() && wi < f->sentences[si].words.size();
        phones.push_back(known ? f->sentences[si].words[wi].phones : phones_guess(s.items[wi].word));
      }
      const auto plan = synth_sentence(s, spec, phones);
      std::size_t flagged = 0;
      for (const auto& seg : plan.segments) flagged += seg.flagged;
      flagged_total += flagged;
      write_plan_csv(out.file(id + "_s" + std::to_string(si) + ".csv"), plan);
      index << id << ',' << si << ',' << plan.total_frames() << ',' << flagged << '\n';
    }
  }
  auto s = summary("synth", cfg);
  s["utterances"] = tokens.size();
  s["flagged_segments"] = flagged_total;
  out.commit(s);
  return 0;
}

int cmd_prompt(const po::variables_map& vm, const RunConfig& cfg) {
  if (!vm.count("speaker-bin") && !vm.count("speaker-log-f0")) throw UsageError("need --speaker-bin or --speaker-log-f0");
  // The spec is only needed to quantize a raw speaker mean.
  const ProsodyToken spk = vm.count("speaker-bin")
                               ? ProsodyToken(vm["speaker-bin"].as<int>())
                               : speaker_f0_token(vm["speaker-log-f0"].as<double>(), spec_from(cfg));
  const std::string key = vm.count("key") ? vm["key"].as<std::string>() : "prompt";
  const std::string_view instruction = select_instruction(cfg.seed, key);
  TokenStream prompt;
  json pending = json::array();
  if (vm.count("continue-from")) {
    const auto tokens = read_tokens(vm["continue-from"].as<std::string>());
    const std::string uid = require(vm, "utterance");
    auto it = std::find_if(tokens.begin(), tokens.end(), [&](const auto& t) { return t.first == uid; });
    if (it == tokens.end()) throw InputError("utterance '" + uid + "' not found in token file");
    const auto ref = parse_training_sequence(it->second, cfg.include_global).sentences;
    prompt = build_continuation_prompt(ref, instruction, spk, cfg.include_global);
  } else {
    const auto sentences = split_sentences(require(vm, "text"));
    prompt = build_tts_prompt(sentences, instruction, spk);
    // Later sentences are appended one at a time once the model has closed
    // the previous prosody section.
    for (std::size_t i = 1; i < sentences.size(); ++i) pending.push_back(sentences[i]);
  }
  Artifacts out(cfg.out);
  out.file("prompt.jsonl") << to_jsonl_line(key, prompt) << '\n';
  auto s = summary("prompt", cfg);
  s["pending_sentences"] = pending;
  out.commit(s);
  return 0;
}

CsvTable csv_from(const po::variables_map& vm, const char* name) { return read_csv(require(vm, name)); }

int cmd_eval_style(const po::variables_map& vm, const RunConfig& cfg) {
  const auto measures = parse_measures_csv(csv_from(vm, "measures"));
  const std::string a = require(vm, "style-a"), b = require(vm, "style-b");
  Artifacts out(cfg.out);
  json results = json::object();
  auto& plot = out.file("style_plot.csv");
  plot << "field,mean,std,stderr,n\n";
  for (const char* field : {"f0", "symbol_rate", "energy"}) {
    const auto r = style_pair_diff(measures, a, b, measure_field_from_name(field));
    results[field] = to_json(r);
    plot << field << ',' << format_double(r.stat.mean) << ',' << format_double(r.stat.stddev) << ','
         << format_double(r.stat.stderr_) << ',' << r.stat.n << '\n';
  }
  out.file("style_diff.json") << json{{"style_a", a}, {"style_b", b}, {"results", results}}.dump(2) << '\n';
  out.commit(summary("eval-style", cfg));
  return 0;
}

int cmd_eval_focus(const po::variables_map& vm, const RunConfig& cfg) {
  Artifacts out(cfg.out);
  auto s = summary("eval-focus", cfg);
  if (vm.count("focus")) {
    const auto f = focus_aggregate(parse_focus_csv(csv_from(vm, "focus")));
    auto& plot = out.file("focus_plot.csv");
    plot << "component_role,condition,mean_f0_hz,std,stderr,n\n";
    json cells = json::object();
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto& cell = f.cells[r][c];
        plot << kFocusRoleNames[r] << ',' << kFocusConditionNames[c] << ','
             << (cell ? format_double(cell->mean) : "") << ',' << (cell ? format_double(cell->stddev) : "") << ','
             << (cell ? format_double(cell->stderr_) : "") << ',' << (cell ? cell->n : 0) << '\n';
        cells[std::string(kFocusRoleNames[r])][std::string(kFocusConditionNames[c])] =
            cell ? json(cell->mean) : json(nullptr);
      }
    }
    out.file("focus.json") << json{{"cells", cells},
                                   {"on_focus_stress", f.on_focus_stress()},
                                   {"post_focus_compression", f.post_focus_compression()}}
                                  .dump(2)
                           << '\n';
  }
  if (vm.count("measures")) {
    const auto r = slowdown_metric(parse_measures_csv(csv_from(vm, "measures")));
    out.file("slowdown.json") << json{{"ratio", to_json(r.ratio)}, {"slowdown", r.slowdown}}.dump(2) << '\n';
  }
  if (!vm.count("focus") && !vm.count("measures")) throw UsageError("need --focus and/or --measures");
  out.commit(s);
  return 0;
}

int cmd_eval_logprob(const po::variables_map& vm, const RunConfig& cfg) {
  std::ifstream in(require(vm, "logprobs"));
  if (!in) throw InputError("cannot open log-prob file");
  const auto records = parse_logprob_jsonl(in);
  const std::string mode = vm.count("mode") ? vm["mode"].as<std::string>() : "emphasis";
  Artifacts out(cfg.out);
  json result;
  auto& plot = out.file("logprob_plot.csv");
  plot << "label,mean,std,stderr,n,excluded\n";
  auto row = [&](const std::string& label, const MetricResult& r) {
    plot << label << ',' << format_double(r.stat.mean) << ',' << format_double(r.stat.stddev) << ','
         << format_double(r.stat.stderr_) << ',' << r.stat.n << ',' << r.excluded << '\n';
  };
  if (mode == "emphasis") {
    const auto r = emphasis_metric(records);
    result = {{"emphasis", to_json(r)}};
    row("emphasis", r);
  } else if (mode == "emotion") {
    result = json::object();
    for (const auto& [word, r] : emotion_metrics(records)) {
      result[word] = to_json(r);
      row(word, r);
    }
  } else {
    throw UsageError("--mode must be emphasis or emotion");
  }
  out.file("logprob_metrics.json") << result.dump(2) << '\n';
  out.commit(summary("eval-logprob", cfg));
  return 0;
}

int cmd_eval_dialogue(const po::variables_map& vm, const RunConfig& cfg) {
  const auto measures = parse_measures_csv(csv_from(vm, "measures"));
  Artifacts out(cfg.out);
  json results = json::object();
  for (const char* field : {"f0", "symbol_rate", "energy"}) {
    results[field] = to_json(dialogue_contrast(measures, measure_field_from_name(field)));
  }
  out.file("dialogue.json") << results.dump(2) << '\n';
  out.commit(summary("eval-dialogue", cfg));
  return 0;
}

// ---------------------------------------------------------------------------

const std::map<std::string, std::function<int(const po::variables_map&, const RunConfig&)>>& commands() {
  static const std::map<std::string, std::function<int(const po::variables_map&, const RunConfig&)>> c = {
      {"extract", cmd_extract},         {"calibrate", cmd_calibrate},     {"tokenize", cmd_tokenize},
      {"freq-table", cmd_freq_table},   {"clean", cmd_clean},             {"synth", cmd_synth},
      {"eval-style", cmd_eval_style},   {"eval-focus", cmd_eval_focus},   {"eval-logprob", cmd_eval_logprob},
      {"eval-dialogue", cmd_eval_dialogue}, {"prompt", cmd_prompt}};
  return c;
}

po::options_description options() {
  po::options_description o("options");
  o.add_options()
      ("help,h", "show help")
      ("config", po::value<std::string>(), "JSON file with default option values")
      ("manifest", po::value<std::string>(), "CSV: utterance_id,wav,alignment,speaker")
      ("out", po::value<std::string>(), "output directory")
      ("spec", po::value<std::string>(), "quantizer spec JSON")
      ("seed", po::value<std::uint64_t>(), "instruction selection seed (default 0)")
      ("jobs", po::value<unsigned>(), "worker threads (default: hardware concurrency)")
      ("include-global", po::bool_switch(), "emit the per-sentence [Global] token")
      ("threshold", po::value<double>(), "cleaning threshold in (0, 1] (default 0.2)")
      ("min-speaker-seconds", po::value<double>(), "speaker filter (default 3600)")
      ("features", po::value<std::string>(), "features JSONL written by extract")
      ("tokens", po::value<std::string>(), "token file (JSONL or plain text)")
      ("format", po::value<std::string>(), "tokenize output: jsonl (default) or plain")
      ("freq-table", po::value<std::string>(), "frequency table JSON")
      ("cleaning", po::value<std::string>(), "cleaning report JSONL; dropped utterances are skipped")
      ("measures", po::value<std::string>(), "per-utterance measures CSV")
      ("focus", po::value<std::string>(), "focus records CSV")
      ("logprobs", po::value<std::string>(), "log-prob JSONL")
      ("mode", po::value<std::string>(), "eval-logprob: emphasis or emotion")
      ("style-a", po::value<std::string>(), "eval-style: first style")
      ("style-b", po::value<std::string>(), "eval-style: second style")
      ("text", po::value<std::string>(), "prompt: input text")
      ("speaker-bin", po::value<int>(), "prompt: speaker F0 bin")
      ("speaker-log-f0", po::value<double>(), "prompt: speaker mean log-F0")
      ("key", po::value<std::string>(), "prompt: instruction selection key")
      ("continue-from", po::value<std::string>(), "prompt: token file with reference sentences")
      ("utterance", po::value<std::string>(), "prompt: reference utterance id");
  return o;
}

void usage(std::ostream& os) {
  os << "usage: prosotok <subcommand> [options]\n\nsubcommands:";
  for (const auto& [name, _] : commands()) os << ' ' << name;
  os << "\n\n" << options() << '\n';
}

RunConfig resolve_config(const po::variables_map& vm) {
  RunConfig c;
  c.jobs = std::max(1u, std::thread::hardware_concurrency());
  if (vm.count("config")) {
    std::ifstream in(vm["config"].as<std::string>());
    if (!in) throw InputError("cannot open config '" + vm["config"].as<std::string>() + "'");
    json j;
    try {
      in >> j;
      c.manifest = j.value("manifest", c.manifest);
      c.out = j.value("out", c.out);
      c.spec = j.value("spec", c.spec);
      c.seed = j.value("seed", c.seed);
      c.jobs = j.value("jobs", c.jobs);
      c.include_global = j.value("include_global", c.include_global);
      c.threshold = j.value("threshold", c.threshold);
      c.min_speaker_seconds = j.value("min_speaker_seconds", c.min_speaker_seconds);
    } catch (const json::exception& e) {
      throw InputError(std::string("config: ") + e.what());
    }
  }
  if (vm.count("manifest")) c.manifest = vm["manifest"].as<std::string>();
  if (vm.count("out")) c.out = vm["out"].as<std::string>();
  if (vm.count("spec")) c.spec = vm["spec"].as<std::string>();
  if (vm.count("seed")) c.seed = vm["seed"].as<std::uint64_t>();
  if (vm.count("jobs")) c.jobs = vm["jobs"].as<unsigned>();
  if (vm["include-global"].as<bool>()) c.include_global = true;
  if (vm.count("threshold")) c.threshold = vm["threshold"].as<double>();
  if (vm.count("min-speaker-seconds")) c.min_speaker_seconds = vm["min-speaker-seconds"].as<double>();
  if (!(c.threshold > 0.0 && c.threshold <= 1.0)) throw UsageError("--threshold must be in (0, 1]");
  if (c.jobs < 1) throw UsageError("--jobs must be >= 1");
  if (c.out.empty()) throw UsageError("missing --out");
  return c;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("prosotok");
  logger->set_pattern("prosotok: %l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("PROSOTOK_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

int run(int argc, char** argv) {
  configure_logging();
  if (argc < 2 || std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h") {
    usage(argc < 2 ? std::cerr : std::cout);
    return argc < 2 ? 2 : 0;
  }
  const std::string name = argv[1];
  try {
    const auto it = commands().find(name);
    if (it == commands().end()) throw UsageError("unknown subcommand '" + name + "'");
    po::variables_map vm;
    try {
      po::store(po::command_line_parser(argc - 1, argv + 1).options(options()).run(), vm);
      po::notify(vm);
    } catch (const po::error& e) {
      throw UsageError(e.what());
    }
    if (vm.count("help")) {
      usage(std::cout);
      return 0;
    }
    return it->second(vm, resolve_config(vm));
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    std::cerr << "run 'prosotok --help' for usage\n";
    return 2;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.kind() == ErrorKind::kUsage ? 2 : e.kind() == ErrorKind::kInputSchema ? 3 : 4;
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 4;
  }
}

}  // namespace prosotok::cli

int main(int argc, char** argv) { return prosotok::cli::run(argc, argv); }
