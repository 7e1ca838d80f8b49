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

#include "dictg2p/key_store.h"

#include <fstream>
#include <map>

#include "dictg2p/error.h"
#include "dictg2p/io_util.h"

namespace dictg2p {

namespace {
constexpr char kDkeyMagic[4] = {'D', 'K', 'E', 'Y'};
constexpr uint32_t kDkeyVersion = 1;
}  // namespace

KeyStoreMode key_store_mode_from_string(const std::string& s) {
  if (s == "trainable") return KeyStoreMode::kTrainable;
  if (s == "imported") return KeyStoreMode::kImported;
  throw ConfigError("unknown key_store_mode: " + s);
}

std::string to_string(KeyStoreMode mode) {
  return mode == KeyStoreMode::kTrainable ? "trainable" : "imported";
}

void write_dkey(const std::string& path, int d_model,
                const std::vector<KeyRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  write_magic(os, kDkeyMagic);
  write_u32(os, kDkeyVersion);
  write_u32(os, static_cast<uint32_t>(d_model));
  write_u64(os, rows.size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.values.size()) != d_model) {
      throw FormatError("key row width " + std::to_string(row.values.size()) +
                        " does not match d_model " + std::to_string(d_model));
    }
    write_string(os, row.character);
    write_u32(os, static_cast<uint32_t>(row.pron_index));
    write_u32(os, static_cast<uint32_t>(row.token_index));
    for (float v : row.values) write_f32(os, v);
  }
  if (!os) throw FormatError("write failed: " + path);
}

std::pair<int, std::vector<KeyRow>> read_dkey(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  expect_magic(is, kDkeyMagic, kDkeyVersion);
  const int d_model = static_cast<int>(read_u32(is));
  const uint64_t count = read_u64(is);
  std::vector<KeyRow> rows;
  rows.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    KeyRow row;
    row.character = read_string(is);
    row.pron_index = static_cast<int>(read_u32(is));
    row.token_index = static_cast<int>(read_u32(is));
    row.values.resize(d_model);
    for (int j = 0; j < d_model; ++j) row.values[j] = read_f32(is);
    rows.push_back(std::move(row));
  }
  return {d_model, std::move(rows)};
}

namespace {

template <typename T>
CharKeys<T> layout_for_record(const CharacterRecord& rec) {
  CharKeys<T> keys;
  for (const auto& entry : rec.entries) {
    for (int k = 0; k < entry.gloss.token_count(); ++k) {
      keys.index_map.emplace_back(entry.pron.pron_index, k);
    }
  }
  const int r = keys.row_count();
  const int m = rec.pron_count();
  keys.aggregation = Tensor<T>::zeros(r, m);
  for (int row = 0; row < r; ++row) {
    keys.aggregation.at(row, keys.index_map[row].first) = T(1);
  }
  return keys;
}

template <typename T>
CharKeys<T> make_unknown_entry(int d_model, KeyStoreMode mode) {
  CharKeys<T> keys = layout_for_record<T>(Dictionary::unknown_record());
  if (mode == KeyStoreMode::kTrainable) {
    keys.gloss_ids = {0};  // the reserved unknown character id
  } else {
    keys.imported_rows = Tensor<T>::zeros(1, d_model);
  }
  return keys;
}

}  // namespace

template <typename T>
KeyStore<T> KeyStore<T>::trainable(const Dictionary& dict,
                                   const Vocab& char_vocab, int d_model) {
  KeyStore<T> store;
  store.mode_ = KeyStoreMode::kTrainable;
  store.d_model_ = d_model;
  store.entries_.reserve(dict.size());
  for (const auto& rec : dict.records()) {
    CharKeys<T> keys = layout_for_record<T>(rec);
    for (const auto& entry : rec.entries) {
      for (const auto& tok : entry.gloss.gloss_tokens) {
        keys.gloss_ids.push_back(char_vocab.id_or(tok, 0));
      }
    }
    store.entries_.push_back(std::move(keys));
  }
  store.unknown_entry_ = make_unknown_entry<T>(d_model, store.mode_);
  return store;
}

template <typename T>
KeyStore<T> KeyStore<T>::imported(const Dictionary& dict,
                                  const std::string& path) {
  auto [d_model, rows] = read_dkey(path);
  // (character, j, k) -> row, with duplicate detection.
  std::map<std::tuple<std::string, int, int>, const KeyRow*> by_key;
  for (const auto& row : rows) {
    auto key = std::make_tuple(row.character, row.pron_index, row.token_index);
    if (by_key.count(key) > 0) {
      throw FormatError("duplicate key row for " + row.character + " (" +
                        std::to_string(row.pron_index) + ", " +
                        std::to_string(row.token_index) + ")");
    }
    by_key[key] = &row;
  }
  KeyStore<T> store;
  store.mode_ = KeyStoreMode::kImported;
  store.d_model_ = d_model;
  store.entries_.reserve(dict.size());
  for (const auto& rec : dict.records()) {
    CharKeys<T> keys = layout_for_record<T>(rec);
    keys.imported_rows = Tensor<T>::zeros(keys.row_count(), d_model);
    for (int r = 0; r < keys.row_count(); ++r) {
      auto [j, k] = keys.index_map[r];
      auto it = by_key.find(std::make_tuple(rec.character, j, k));
      if (it == by_key.end()) {
        throw FormatError("missing key row for " + rec.character + " (" +
                          std::to_string(j) + ", " + std::to_string(k) + ")");
      }
      for (int c = 0; c < d_model; ++c) {
        keys.imported_rows.at(r, c) = static_cast<T>(it->second->values[c]);
      }
    }
    store.entries_.push_back(std::move(keys));
  }
  store.unknown_entry_ = make_unknown_entry<T>(d_model, store.mode_);
  return store;
}

template <typename T>
const CharKeys<T>& KeyStore<T>::keys_for(int record_index) const {
  if (record_index < 0) return unknown_entry_;
  return entries_.at(record_index);
}

template <typename T>
Tensor<T> KeyStore<T>::rows(int record_index, const Tensor<T>& gloss_table,
                            Tape<T>* tape) const {
  const CharKeys<T>& keys = keys_for(record_index);
  if (mode_ == KeyStoreMode::kImported) return keys.imported_rows;
  return embedding_lookup(gloss_table, keys.gloss_ids, tape);
}

template class KeyStore<float>;
template class KeyStore<double>;
template struct CharKeys<float>;
template struct CharKeys<double>;

}  // namespace dictg2p
