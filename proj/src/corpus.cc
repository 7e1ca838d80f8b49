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

#include "dictg2p/corpus.h"

#include <fstream>
#include <sstream>

#include "dictg2p/error.h"
#include "dictg2p/io_util.h"

namespace dictg2p {

namespace {
constexpr char kTargetsMagic[4] = {'D', 'G', 'P', 'A'};
constexpr uint32_t kTargetsVersion = 1;
}  // namespace

void write_sentences(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path);
  for (const auto& sent : corpus.sentences) {
    for (size_t i = 0; i < sent.tokens.size(); ++i) {
      if (i > 0) os << ' ';
      os << sent.tokens[i];
    }
    os << '\n';
  }
}

void write_targets(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  write_magic(os, kTargetsMagic);
  write_u32(os, kTargetsVersion);
  write_u32(os, static_cast<uint32_t>(corpus.acoustic_dim));
  write_u64(os, corpus.sentences.size());
  for (const auto& sent : corpus.sentences) {
    write_u32(os, static_cast<uint32_t>(sent.targets.size()));
    for (const auto& row : sent.targets) {
      if (static_cast<int>(row.size()) != corpus.acoustic_dim) {
        throw FormatError("target row width mismatch");
      }
      for (double v : row) write_f64(os, v);
    }
  }
}

void write_labels(const std::string& path, const Corpus& corpus) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path);
  for (size_t s = 0; s < corpus.sentences.size(); ++s) {
    const auto& labels = corpus.sentences[s].labels;
    for (size_t p = 0; p < labels.size(); ++p) {
      os << s << ' ' << p << ' ' << labels[p] << '\n';
    }
  }
}

std::vector<std::vector<std::string>> read_sentences(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    out.push_back(std::move(tokens));
  }
  return out;
}

void read_targets_into(const std::string& path, Corpus& corpus) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  expect_magic(is, kTargetsMagic, kTargetsVersion);
  corpus.acoustic_dim = static_cast<int>(read_u32(is));
  const uint64_t count = read_u64(is);
  if (count != corpus.sentences.size()) {
    throw FormatError("targets file has " + std::to_string(count) +
                      " sentences, corpus has " +
                      std::to_string(corpus.sentences.size()));
  }
  for (auto& sent : corpus.sentences) {
    const uint32_t rows = read_u32(is);
    if (rows != sent.tokens.size()) {
      throw FormatError("target rows do not align with sentence length");
    }
    sent.targets.assign(rows, std::vector<double>(corpus.acoustic_dim));
    for (auto& row : sent.targets) {
      for (double& v : row) v = read_f64(is);
    }
  }
}

void read_labels_into(const std::string& path, Corpus& corpus) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path);
  for (auto& sent : corpus.sentences) {
    sent.labels.assign(sent.tokens.size(), -1);
  }
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    size_t sid = 0, pos = 0;
    int idx = 0;
    if (!(ss >> sid >> pos >> idx)) {
      throw ParseError(line_no, "bad label line: " + line);
    }
    if (sid >= corpus.sentences.size() ||
        pos >= corpus.sentences[sid].tokens.size()) {
      throw ParseError(line_no, "label out of range");
    }
    corpus.sentences[sid].labels[pos] = idx;
  }
}

void write_corpus_split(const std::string& dir, const std::string& split,
                        const Corpus& corpus) {
  write_sentences(dir + "/" + split + ".txt", corpus);
  write_targets(dir + "/" + split + "_targets.bin", corpus);
  write_labels(dir + "/" + split + "_labels.txt", corpus);
}

Corpus load_corpus_split(const std::string& dir, const std::string& split) {
  Corpus corpus;
  for (auto& tokens : read_sentences(dir + "/" + split + ".txt")) {
    CorpusSentence sent;
    sent.tokens = std::move(tokens);
    corpus.sentences.push_back(std::move(sent));
  }
  read_targets_into(dir + "/" + split + "_targets.bin", corpus);
  const std::string labels_path = dir + "/" + split + "_labels.txt";
  if (std::ifstream(labels_path).good()) {
    read_labels_into(labels_path, corpus);
  }
  return corpus;
}

}  // namespace dictg2p
