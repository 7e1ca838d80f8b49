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

#include "dictg2p/vocab.h"

#include "dictg2p/error.h"

namespace dictg2p {

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  index_[token] = id;
  tokens_.push_back(token);
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw OovError("token not in vocabulary: " + token);
  return it->second;
}

int Vocab::id_or(const std::string& token, int fallback) const {
  auto it = index_.find(token);
  return it == index_.end() ? fallback : it->second;
}

Vocab Vocab::characters_from(const Dictionary& dict) {
  Vocab v;
  v.add(Dictionary::kUnknownCharacter);
  for (const auto& rec : dict.records()) v.add(rec.character);
  return v;
}

Vocab Vocab::phonemes_from(const Dictionary& dict) {
  Vocab v;
  v.add(Dictionary::kUnknownPhoneme);
  for (const auto& ph : dict.phoneme_inventory()) v.add(ph);
  return v;
}

}  // namespace dictg2p
