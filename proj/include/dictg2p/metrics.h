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

#include <map>
#include <string>
#include <vector>

#include "dictg2p/model.h"

namespace dictg2p {

using PhonemeSeq = std::vector<std::string>;

// Token-level Levenshtein distance.
size_t edit_distance(const PhonemeSeq& a, const PhonemeSeq& b);

// Phoneme error rate: sum of edit distances / sum of reference lengths.
// Throws on mismatched counts or an empty reference corpus.
double per(const std::vector<PhonemeSeq>& predicted,
           const std::vector<PhonemeSeq>& reference);

// Sentence error rate: fraction of sentences with at least one token error;
// a sentence with multiple errors counts once.
double ser(const std::vector<PhonemeSeq>& predicted,
           const std::vector<PhonemeSeq>& reference);

// Objective evaluation report. Subjective metrics are human studies and have
// no executable counterpart here.
struct EvalReport {
  double per = 0.0;
  double ser = 0.0;
  double polyphone_accuracy = -1.0;  // < 0 when labels were unavailable
  double overall_accuracy = -1.0;
  size_t sample_count = 0;           // sentences evaluated
  // (character, true pron_index, predicted pron_index) -> count
  std::map<std::string, std::map<std::pair<int, int>, size_t>> confusions;

  std::string to_json() const;
};

// Attention export ("dictg2p-attn v1"): header line, then one JSON record
// per character occurrence with the m-length w vector and the flat a' vector
// plus its (pron j, token k) legend.
void export_attention(const std::vector<SentenceDiag>& diags,
                      const std::string& path);
std::vector<SentenceDiag> load_attention(const std::string& path);

}  // namespace dictg2p
