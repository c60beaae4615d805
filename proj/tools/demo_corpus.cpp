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

// Writes a small synthetic speech-like corpus (WAV + alignment JSON +
// manifest.csv) for trying the pipeline without a real dataset.
//
//   prosotok_demo_corpus OUT_DIR [speakers] [utterances_per_speaker] [seed]

#include <cstdlib>
#include <iostream>
#include <string>

#include "synthetic_corpus.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: prosotok_demo_corpus OUT_DIR [speakers] [utterances_per_speaker] [seed]\n";
    return 2;
  }
  prosotok::demo::CorpusOptions opt;
  try {
    if (argc > 2) opt.speakers = std::stoi(argv[2]);
    if (argc > 3) opt.utterances_per_speaker = std::stoi(argv[3]);
    if (argc > 4) opt.seed = std::stoull(argv[4]);
  } catch (const std::exception&) {
    std::cerr << "prosotok_demo_corpus: numeric arguments expected\n";
    return 2;
  }
  if (opt.speakers < 1 || opt.utterances_per_speaker < 1) {
    std::cerr << "prosotok_demo_corpus: counts must be positive\n";
    return 2;
  }
  const auto utts = prosotok::demo::write_corpus(argv[1], opt);
  double seconds = 0.0;
  for (const auto& u : utts) seconds += u.seconds;
  std::cout << utts.size() << " utterances, " << seconds << " s of audio in " << argv[1] << "\n";
  return 0;
}
