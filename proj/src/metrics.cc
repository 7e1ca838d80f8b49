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

#include "dictg2p/metrics.h"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "dictg2p/error.h"

namespace dictg2p {

namespace {
constexpr const char* kAttnHeader = "dictg2p-attn v1";
}

size_t edit_distance(const PhonemeSeq& a, const PhonemeSeq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double per(const std::vector<PhonemeSeq>& predicted,
           const std::vector<PhonemeSeq>& reference) {
  if (predicted.size() != reference.size()) {
    throw Error("per: " + std::to_string(predicted.size()) +
                " predictions vs " + std::to_string(reference.size()) +
                " references");
  }
  size_t errors = 0, ref_len = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    errors += edit_distance(predicted[i], reference[i]);
    ref_len += reference[i].size();
  }
  if (ref_len == 0) throw Error("per: empty reference corpus");
  return static_cast<double>(errors) / static_cast<double>(ref_len);
}

double ser(const std::vector<PhonemeSeq>& predicted,
           const std::vector<PhonemeSeq>& reference) {
  if (predicted.size() != reference.size()) {
    throw Error("ser: " + std::to_string(predicted.size()) +
                " predictions vs " + std::to_string(reference.size()) +
                " references");
  }
  if (reference.empty()) throw Error("ser: empty reference corpus");
  size_t wrong = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != reference[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(reference.size());
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["metric_kind"] = "objective";
  j["per"] = per;
  j["ser"] = ser;
  if (polyphone_accuracy >= 0.0) j["polyphone_accuracy"] = polyphone_accuracy;
  if (overall_accuracy >= 0.0) j["overall_accuracy"] = overall_accuracy;
  j["sample_count"] = sample_count;
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& [character, cells] : confusions) {
    for (const auto& [pair, count] : cells) {
      conf.push_back({{"char", character},
                      {"true", pair.first},
                      {"predicted", pair.second},
                      {"count", count}});
    }
  }
  j["confusions"] = conf;
  return j.dump(1);
}

void export_attention(const std::vector<SentenceDiag>& diags,
                      const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os << kAttnHeader << "\n";
  for (size_t s = 0; s < diags.size(); ++s) {
    for (size_t p = 0; p < diags[s].chars.size(); ++p) {
      const CharDiag& d = diags[s].chars[p];
      nlohmann::json legend = nlohmann::json::array();
      for (const auto& [j, k] : d.legend) legend.push_back({j, k});
      nlohmann::json rec = {{"sentence", s},
                            {"position", p},
                            {"char", d.character},
                            {"pron_count", d.pron_count},
                            {"chosen", d.chosen},
                            {"forced", d.forced},
                            {"w", d.w},
                            {"sampled", d.sampled},
                            {"attn", d.attn},
                            {"legend", legend}};
      os << rec.dump() << "\n";
    }
    // Sentence boundary marker keeps reloads aligned with empty sentences.
    os << nlohmann::json({{"sentence_end", s}}).dump() << "\n";
  }
  if (!os) throw FormatError("write failed: " + path);
}

std::vector<SentenceDiag> load_attention(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != kAttnHeader) {
    throw FormatError("bad attention export header in " + path);
  }
  std::vector<SentenceDiag> diags;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("bad attention record: ") +
                                    e.what());
    }
    if (rec.contains("sentence_end")) {
      const size_t s = rec["sentence_end"].get<size_t>();
      if (diags.size() <= s) diags.resize(s + 1);
      continue;
    }
    const size_t s = rec.at("sentence").get<size_t>();
    if (diags.size() <= s) diags.resize(s + 1);
    CharDiag d;
    d.character = rec.at("char").get<std::string>();
    d.pron_count = rec.at("pron_count").get<int>();
    d.chosen = rec.at("chosen").get<int>();
    d.forced = rec.at("forced").get<bool>();
    d.w = rec.at("w").get<std::vector<double>>();
    d.sampled = rec.at("sampled").get<std::vector<double>>();
    d.attn = rec.at("attn").get<std::vector<double>>();
    for (const auto& pair : rec.at("legend")) {
      d.legend.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    diags[s].chars.push_back(std::move(d));
  }
  return diags;
}

}  // namespace dictg2p
