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

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dictg2p/corpus.h"
#include "dictg2p/dictionary.h"
#include "dictg2p/key_store.h"

namespace dictg2p {

// Deterministic synthetic language with context-governed polyphones. The
// generator knows every ground-truth pronunciation, so the label-free
// training claim is testable end to end.

struct ToyParams {
  int n_chars = 60;        // characters, excluding the optional punctuation
  int n_polyphones = 12;
  int n_classes = 4;
  int m_min = 2;
  int m_max = 3;
  int d_model = 64;        // width of class/key vectors
  int acoustic_dim = 8;
  double key_noise = 0.05;     // stddev added to class vectors in key rows
  double target_noise = 0.1;   // stddev added to acoustic target rows
  int gloss_min = 3;
  int gloss_max = 6;
  int sent_min = 8;
  int sent_max = 16;
  double polyphone_rate = 0.3;
  bool include_punct = true;
  uint64_t seed = 0;
};

struct ToyPronunciation {
  std::vector<std::string> phonemes;
  int governing_class = -1;  // polyphones: deciding context class
};

struct ToyCharacter {
  std::string name;
  bool polyphone = false;
  int membership_class = -1;  // monophones: the class this token votes for
  std::vector<ToyPronunciation> prons;
  std::vector<std::vector<std::string>> glosses;  // per pronunciation

  int pron_count() const { return static_cast<int>(prons.size()); }
};

struct ToyLanguageSpec {
  ToyParams params;
  std::vector<ToyCharacter> characters;
  std::vector<std::vector<double>> class_vectors;  // n_classes x d_model
  std::vector<std::string> phoneme_inventory;
  std::vector<std::vector<double>> codebook;  // parallel to phoneme_inventory
  std::vector<std::vector<std::string>> class_members;  // monophone names

  int char_index(const std::string& name) const;
  const ToyCharacter& character(const std::string& name) const;
  const std::vector<double>& codebook_row(const std::string& phoneme) const;

  // Checks the declared invariants: distinct governing classes within each
  // polyphone, pairwise class-vector cosine < 0.5, distinct codebook rows.
  void validate() const;

  void rebuild_indices();  // after deserialization

 private:
  std::unordered_map<std::string, int> char_index_;
  std::unordered_map<std::string, int> phoneme_index_;
};

struct GeneratedCorpus {
  Corpus train;
  Corpus heldout;
};

// Throws ConfigError on infeasible parameters (fewer than 2 classes, m
// larger than the class count, not enough monophones to populate classes).
ToyLanguageSpec generate_spec(const ToyParams& params);

GeneratedCorpus generate_corpus(const ToyLanguageSpec& spec, int n_train,
                                int n_heldout, uint64_t seed);

// Ground-truth governance: class voting over the window of 2 around pos,
// counting only monophone neighbors whose class governs one of the
// character's pronunciations. Ties are broken toward the left neighbor
// (scan order pos-1, pos-2, pos+1, pos+2). Monophones return 0.
int rule_label(const ToyLanguageSpec& spec,
               const std::vector<std::string>& tokens, size_t pos);

Dictionary emit_oracle_dictionary(const ToyLanguageSpec& spec);

// Key rows for every (character, pronunciation, gloss token): the governing
// class vector plus N(0, key_noise^2) per component. Deterministic in the
// spec seed.
std::vector<KeyRow> emit_oracle_keys(const ToyLanguageSpec& spec);

// Writes dict.txt, keys.dkey, toyspec.json and the train/heldout splits.
void write_corpus_dir(const ToyLanguageSpec& spec, const GeneratedCorpus& corpus,
                      const std::string& dir);

void save_toyspec(const ToyLanguageSpec& spec, const std::string& path);
ToyLanguageSpec load_toyspec(const std::string& path);

struct OracleAccuracy {
  double polyphone_accuracy = 0.0;
  double overall_accuracy = 0.0;
  size_t polyphone_occurrences = 0;
  size_t total_occurrences = 0;
};

// predictions[s][p] is the predicted pron_index for sentence s position p.
// Throws on misaligned shapes.
OracleAccuracy oracle_accuracy(const std::vector<std::vector<int>>& predictions,
                               const Corpus& corpus,
                               const ToyLanguageSpec& spec);

}  // namespace dictg2p
