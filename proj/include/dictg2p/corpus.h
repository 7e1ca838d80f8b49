// Copyright 2026 The dictg2p Authors
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

#pragma once

#include <string>
#include <vector>

namespace dictg2p {

// One training/eval sentence: character tokens, aligned acoustic target rows,
// and ground-truth pronunciation indices. Labels exist for evaluation only;
// nothing on the training path reads them.
struct CorpusSentence {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> targets;  // l x F
  std::vector<int> labels;                   // per position, eval only

  size_t length() const { return tokens.size(); }
  bool operator==(const CorpusSentence&) const = default;
};

struct Corpus {
  std::vector<CorpusSentence> sentences;
  int acoustic_dim = 0;

  bool operator==(const Corpus&) const = default;
};

// Sentence file: one sentence per line, tokens space-separated.
void write_sentences(const std::string& path, const Corpus& corpus);

// Targets: magic "DGPA", u32 version, u32 acoustic_dim, u64 count, then per
// sentence u32 rows followed by rows x dim little-endian f64 values.
void write_targets(const std::string& path, const Corpus& corpus);

// Labels sidecar: "sentence_id position pron_index" per line.
void write_labels(const std::string& path, const Corpus& corpus);

// Reads {split}.txt, {split}_targets.bin and, when present,
// {split}_labels.txt from dir.
Corpus load_corpus_split(const std::string& dir, const std::string& split);

// Individual readers (paths, not directory conventions).
std::vector<std::vector<std::string>> read_sentences(const std::string& path);
void read_targets_into(const std::string& path, Corpus& corpus);
void read_labels_into(const std::string& path, Corpus& corpus);

void write_corpus_split(const std::string& dir, const std::string& split,
                        const Corpus& corpus);

}  // namespace dictg2p
