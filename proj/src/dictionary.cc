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

#include "dictg2p/dictionary.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dictg2p/error.h"
#include "dictg2p/io_util.h"

namespace dictg2p {

namespace {

constexpr const char* kTextHeader = "dictg2p-dict v1";
constexpr char kBinaryMagic[4] = {'D', 'G', 'P', 'D'};
constexpr uint32_t kBinaryVersion = 1;

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void Dictionary::add_record(CharacterRecord record) {
  if (index_.count(record.character) > 0) {
    throw Error("duplicate character: " + record.character);
  }
  index_[record.character] = records_.size();
  for (const auto& entry : record.entries) {
    for (const auto& ph : entry.pron.phoneme_tokens) {
      if (phoneme_index_.count(ph) == 0) {
        phoneme_index_[ph] = phoneme_inventory_.size();
        phoneme_inventory_.push_back(ph);
      }
    }
  }
  records_.push_back(std::move(record));
}

bool Dictionary::has(const std::string& character) const {
  return index_.count(character) > 0;
}

const CharacterRecord& Dictionary::lookup(const std::string& character) const {
  auto it = index_.find(character);
  if (it == index_.end()) {
    throw OovError("character not in dictionary: " + character);
  }
  return records_[it->second];
}

const CharacterRecord& Dictionary::lookup_or_unknown(
    const std::string& character) const {
  auto it = index_.find(character);
  return it == index_.end() ? unknown_record() : records_[it->second];
}

int Dictionary::record_index(const std::string& character) const {
  auto it = index_.find(character);
  return it == index_.end() ? -1 : static_cast<int>(it->second);
}

const CharacterRecord& Dictionary::unknown_record() {
  static const CharacterRecord record{
      kUnknownCharacter,
      {PronEntry{Pronunciation{{kUnknownPhoneme}, 0},
                 GlossEntry{{kUnknownCharacter}}}}};
  return record;
}

namespace {

CharacterRecord parse_record_line(const std::string& line, size_t line_no,
                                  const ParseOptions& opts) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed record: ") + e.what());
  }
  if (!j.is_object() || !j.contains("char") || !j.contains("prons")) {
    throw ParseError(line_no, "record must have \"char\" and \"prons\"");
  }
  CharacterRecord rec;
  if (!j["char"].is_string() || j["char"].get<std::string>().empty()) {
    throw ParseError(line_no, "\"char\" must be a non-empty string");
  }
  rec.character = j["char"].get<std::string>();
  if (!j["prons"].is_array()) {
    throw ParseError(line_no, "\"prons\" must be an array");
  }
  if (j["prons"].empty()) {
    throw ParseError(line_no, "empty pronunciation list for " + rec.character);
  }
  int idx = 0;
  for (const auto& pj : j["prons"]) {
    if (!pj.is_object() || !pj.contains("pron") || !pj.contains("gloss") ||
        !pj["pron"].is_string() || !pj["gloss"].is_string()) {
      throw ParseError(line_no,
                       "each pronunciation needs string \"pron\" and \"gloss\"");
    }
    Pronunciation pron;
    pron.phoneme_tokens = split_whitespace(pj["pron"].get<std::string>());
    pron.pron_index = idx;
    if (pron.phoneme_tokens.empty()) {
      throw ParseError(line_no, "empty phoneme sequence in " + rec.character);
    }
    GlossEntry gloss;
    gloss.gloss_tokens = tokenize_text(pj["gloss"].get<std::string>());
    if (gloss.gloss_tokens.empty()) {
      throw ParseError(line_no, "empty gloss in " + rec.character);
    }
    if (gloss.token_count() > opts.u_max) {
      gloss.gloss_tokens.resize(opts.u_max);
    }
    rec.entries.push_back({std::move(pron), std::move(gloss)});
    ++idx;
  }
  return rec;
}

ParseIssueKind classify_issue(const std::string& message) {
  if (message.find("escape") != std::string::npos ||
      message.find("backslash") != std::string::npos) {
    return ParseIssueKind::kBadEscape;
  }
  if (message.find("empty pronunciation list") != std::string::npos) {
    return ParseIssueKind::kEmptyPronunciations;
  }
  if (message.find("duplicate character") != std::string::npos) {
    return ParseIssueKind::kDuplicateCharacter;
  }
  return ParseIssueKind::kMalformedLine;
}

template <typename OnIssue>
ParseResult parse_impl(std::istream& raw, const ParseOptions& opts,
                       OnIssue on_issue) {
  ParseResult result;
  std::string line;
  size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(raw, line)) {
    ++line_no;
    line = strip_cr(line);
    if (is_blank(line)) {
      ++result.blank_lines;
      continue;
    }
    if (!saw_header) {
      if (line != kTextHeader) {
        on_issue(ParseError(line_no, std::string("expected header \"") +
                                         kTextHeader + "\""),
                 result);
        return result;
      }
      saw_header = true;
      continue;
    }
    ++result.record_lines;
    try {
      CharacterRecord rec = parse_record_line(line, line_no, opts);
      if (result.dict.has(rec.character)) {
        throw ParseError(line_no, "duplicate character: " + rec.character);
      }
      result.dict.add_record(std::move(rec));
    } catch (const ParseError& e) {
      on_issue(e, result);
    }
  }
  if (!saw_header) {
    on_issue(ParseError(line_no, std::string("missing header \"") +
                                     kTextHeader + "\""),
             result);
  }
  return result;
}

}  // namespace

Dictionary parse_dictionary(std::istream& raw, const ParseOptions& opts) {
  ParseResult result = parse_impl(
      raw, opts, [](const ParseError& e, ParseResult&) -> void { throw e; });
  return std::move(result.dict);
}

ParseResult parse_dictionary_collect(std::istream& raw,
                                     const ParseOptions& opts) {
  return parse_impl(raw, opts, [](const ParseError& e, ParseResult& r) {
    r.issues.push_back({e.line(), classify_issue(e.what()), e.what()});
  });
}

void write_dictionary_text(const Dictionary& dict, std::ostream& os) {
  os << kTextHeader << "\n";
  for (const auto& rec : dict.records()) {
    nlohmann::json prons = nlohmann::json::array();
    for (const auto& entry : rec.entries) {
      std::string pron;
      for (size_t i = 0; i < entry.pron.phoneme_tokens.size(); ++i) {
        if (i > 0) pron += ' ';
        pron += entry.pron.phoneme_tokens[i];
      }
      std::string gloss;
      for (size_t i = 0; i < entry.gloss.gloss_tokens.size(); ++i) {
        if (i > 0) gloss += ' ';
        gloss += entry.gloss.gloss_tokens[i];
      }
      prons.push_back({{"pron", pron}, {"gloss", gloss}});
    }
    nlohmann::json j = {{"char", rec.character}, {"prons", prons}};
    os << j.dump() << "\n";
  }
}

DictionaryStats dictionary_stats(const Dictionary& dict) {
  DictionaryStats stats;
  stats.size = dict.size();
  stats.phoneme_inventory_size = dict.phoneme_inventory().size();
  for (const auto& rec : dict.records()) {
    if (rec.is_polyphone()) ++stats.polyphone_count;
    stats.max_pron_count = std::max(stats.max_pron_count, rec.pron_count());
    for (const auto& entry : rec.entries) {
      stats.max_gloss_tokens =
          std::max(stats.max_gloss_tokens, entry.gloss.token_count());
    }
  }
  return stats;
}

void save_dictionary(const Dictionary& dict, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  write_magic(os, kBinaryMagic);
  write_u32(os, kBinaryVersion);
  write_u64(os, dict.size());
  for (const auto& rec : dict.records()) {
    write_string(os, rec.character);
    write_u32(os, static_cast<uint32_t>(rec.entries.size()));
    for (const auto& entry : rec.entries) {
      write_u32(os, static_cast<uint32_t>(entry.pron.phoneme_tokens.size()));
      for (const auto& ph : entry.pron.phoneme_tokens) write_string(os, ph);
      write_u32(os, static_cast<uint32_t>(entry.gloss.gloss_tokens.size()));
      for (const auto& tok : entry.gloss.gloss_tokens) write_string(os, tok);
    }
  }
  if (!os) throw FormatError("write failed: " + path);
}

Dictionary load_dictionary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  expect_magic(is, kBinaryMagic, kBinaryVersion);
  const uint64_t count = read_u64(is);
  Dictionary dict;
  for (uint64_t r = 0; r < count; ++r) {
    CharacterRecord rec;
    rec.character = read_string(is);
    const uint32_t m = read_u32(is);
    if (m == 0) throw FormatError("record with no pronunciations: " + path);
    for (uint32_t j = 0; j < m; ++j) {
      PronEntry entry;
      entry.pron.pron_index = static_cast<int>(j);
      const uint32_t np = read_u32(is);
      for (uint32_t k = 0; k < np; ++k)
        entry.pron.phoneme_tokens.push_back(read_string(is));
      if (entry.pron.phoneme_tokens.empty()) {
        throw FormatError("empty phoneme sequence in snapshot: " + path);
      }
      const uint32_t ng = read_u32(is);
      for (uint32_t k = 0; k < ng; ++k)
        entry.gloss.gloss_tokens.push_back(read_string(is));
      rec.entries.push_back(std::move(entry));
    }
    dict.add_record(std::move(rec));
  }
  return dict;
}

Dictionary load_dictionary_any(const std::string& path,
                               const ParseOptions& opts) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw FormatError("cannot open: " + path);
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  if (std::equal(magic, magic + 4, kBinaryMagic)) return load_dictionary(path);
  std::ifstream is(path);
  return parse_dictionary(is, opts);
}

}  // namespace dictg2p
