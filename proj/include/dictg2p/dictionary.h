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

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace dictg2p {

// One pronunciation of a character: its phoneme tokens and its position j
// within the character's pronunciation list.
struct Pronunciation {
  std::vector<std::string> phoneme_tokens;
  int pron_index = 0;

  bool operator==(const Pronunciation&) const = default;
};

// The dictionary text attached to one pronunciation, tokenized to
// character-level tokens. Definitions and usages arrive merged into a single
// sequence; token_count is capped by the parser's u_max.
struct GlossEntry {
  std::vector<std::string> gloss_tokens;

  int token_count() const { return static_cast<int>(gloss_tokens.size()); }
  bool operator==(const GlossEntry&) const = default;
};

struct PronEntry {
  Pronunciation pron;
  GlossEntry gloss;

  bool operator==(const PronEntry&) const = default;
};

struct CharacterRecord {
  std::string character;
  std::vector<PronEntry> entries;  // ordered by pron_index

  int pron_count() const { return static_cast<int>(entries.size()); }
  bool is_polyphone() const { return pron_count() > 1; }
  bool operator==(const CharacterRecord&) const = default;
};

struct DictionaryStats {
  size_t size = 0;
  size_t polyphone_count = 0;
  int max_pron_count = 0;
  int max_gloss_tokens = 0;
  size_t phoneme_inventory_size = 0;
};

// Immutable after build; safe for concurrent readers.
class Dictionary {
 public:
  static constexpr const char* kUnknownCharacter = "<unk>";
  static constexpr const char* kUnknownPhoneme = "UNK";

  void add_record(CharacterRecord record);  // build-time only

  size_t size() const { return records_.size(); }
  bool has(const std::string& character) const;
  // Throws OovError for unseen characters.
  const CharacterRecord& lookup(const std::string& character) const;
  // Out-of-vocabulary characters map to a reserved single-pronunciation
  // record with the "UNK" phoneme so pipelines never crash on unseen input.
  const CharacterRecord& lookup_or_unknown(const std::string& character) const;
  // Index of the record, or -1 for OOV (the reserved record has no index).
  int record_index(const std::string& character) const;

  const std::vector<CharacterRecord>& records() const { return records_; }
  // Phoneme symbols of all records in first-appearance order.
  const std::vector<std::string>& phoneme_inventory() const {
    return phoneme_inventory_;
  }

  static const CharacterRecord& unknown_record();

  bool operator==(const Dictionary& other) const {
    return records_ == other.records_;
  }

 private:
  std::vector<CharacterRecord> records_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<std::string> phoneme_inventory_;
  std::unordered_map<std::string, size_t> phoneme_index_;
};

struct ParseOptions {
  // Gloss entries are truncated to this many tokens (tail dropped).
  int u_max = 64;
};

enum class ParseIssueKind {
  kMalformedLine,
  kDuplicateCharacter,
  kEmptyPronunciations,
  kBadEscape,
};

struct ParseIssue {
  size_t line = 0;
  ParseIssueKind kind = ParseIssueKind::kMalformedLine;
  std::string message;
};

struct ParseResult {
  Dictionary dict;
  std::vector<ParseIssue> issues;
  size_t record_lines = 0;  // non-blank lines after the header
  size_t blank_lines = 0;
};

// Text format ("dictg2p-dict v1"): UTF-8, header line then one JSON record
// per line: {"char": "...", "prons": [{"pron": "H UO3", "gloss": "..."}]}.
// "pron" holds space-separated phoneme symbols; "gloss" is tokenized with
// tokenize_text (whitespace-split when spaces are present, else UTF-8
// codepoints).

// Strict parse: throws ParseError (with line number) on the first issue.
Dictionary parse_dictionary(std::istream& raw, const ParseOptions& opts = {});
// Collecting parse: every non-blank line yields either a record or an issue.
ParseResult parse_dictionary_collect(std::istream& raw,
                                     const ParseOptions& opts = {});

void write_dictionary_text(const Dictionary& dict, std::ostream& os);

DictionaryStats dictionary_stats(const Dictionary& dict);

// Binary snapshot: magic "DGPD", u32 version, length-prefixed records.
void save_dictionary(const Dictionary& dict, const std::string& path);
Dictionary load_dictionary(const std::string& path);
// Reads either a binary snapshot or the text format, sniffing the magic.
Dictionary load_dictionary_any(const std::string& path,
                               const ParseOptions& opts = {});

}  // namespace dictg2p
