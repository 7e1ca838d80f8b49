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
#include <utility>
#include <vector>

#include "dictg2p/dictionary.h"
#include "dictg2p/tensor.h"
#include "dictg2p/vocab.h"

namespace dictg2p {

enum class KeyStoreMode {
  kTrainable,  // rows are embeddings of gloss token ids, trained end to end
  kImported,   // rows loaded from a DKEY file, frozen
};

KeyStoreMode key_store_mode_from_string(const std::string& s);
std::string to_string(KeyStoreMode mode);

// One row of the embedding import file.
struct KeyRow {
  std::string character;
  int pron_index = 0;
  int token_index = 0;
  std::vector<float> values;

  bool operator==(const KeyRow&) const = default;
};

// Binary import format: magic "DKEY", u32 version, u32 d_model,
// u64 row count, rows as (character, pron_index, token_index, f32 values).
void write_dkey(const std::string& path, int d_model,
                const std::vector<KeyRow>& rows);
std::pair<int, std::vector<KeyRow>> read_dkey(const std::string& path);

// Per-character gloss-token keys, flattened over (pronunciation j, token k).
template <typename T>
struct CharKeys {
  std::vector<int> gloss_ids;                    // char-vocab ids, flat
  std::vector<std::pair<int, int>> index_map;    // row -> (j, k)
  Tensor<T> imported_rows;                       // R x d (imported mode only)
  Tensor<T> aggregation;                         // R x m, 0/1 constant

  int row_count() const { return static_cast<int>(index_map.size()); }
};

// The gloss-token key matrix for every dictionary character, indexed in
// dictionary record order. Imported stores are immutable; trainable stores
// reference a gloss embedding table owned by the model's parameter store.
template <typename T>
class KeyStore {
 public:
  static KeyStore trainable(const Dictionary& dict, const Vocab& char_vocab,
                            int d_model);
  // Every gloss token row of every record must be present in the file;
  // missing rows and width mismatches are errors.
  static KeyStore imported(const Dictionary& dict, const std::string& path);

  KeyStoreMode mode() const { return mode_; }
  int d_model() const { return d_model_; }
  size_t char_count() const { return entries_.size(); }

  // record_index -1 selects the reserved out-of-vocabulary entry.
  const CharKeys<T>& keys_for(int record_index) const;

  // Materializes K_i. Trainable mode gathers from gloss_table (gradients
  // flow into the table); imported mode returns the frozen constant rows.
  Tensor<T> rows(int record_index, const Tensor<T>& gloss_table,
                 Tape<T>* tape) const;

 private:
  KeyStoreMode mode_ = KeyStoreMode::kTrainable;
  int d_model_ = 0;
  std::vector<CharKeys<T>> entries_;
  CharKeys<T> unknown_entry_;
};

}  // namespace dictg2p
