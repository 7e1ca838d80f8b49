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
#include <unordered_map>
#include <vector>

#include "dictg2p/dictionary.h"

namespace dictg2p {

// Dense token-to-id mapping, ids from 0 in insertion order.
class Vocab {
 public:
  int add(const std::string& token);
  bool has(const std::string& token) const { return index_.count(token) > 0; }
  // Throws OovError for unseen tokens.
  int id(const std::string& token) const;
  int id_or(const std::string& token, int fallback) const;
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }

  // id 0 is the reserved unknown character, then record order.
  static Vocab characters_from(const Dictionary& dict);
  // id 0 is the reserved unknown phoneme, then first-appearance order.
  static Vocab phonemes_from(const Dictionary& dict);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace dictg2p
