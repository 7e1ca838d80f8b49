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

#include "dictg2p/toy_language.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dictg2p/error.h"
#include "dictg2p/rng.h"

namespace dictg2p {

namespace {

constexpr const char* kPunctName = ".";
constexpr const char* kPunctPhoneme = "SIL";

std::string char_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "c%02d", i);
  return buf;
}

std::string phoneme_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "p%02d", i);
  return buf;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

template <typename E>
const E& pick(const std::vector<E>& v, Rng& rng) {
  return v[rng.uniform_int(0, static_cast<int>(v.size()) - 1)];
}

template <typename E>
void shuffle_in_place(std::vector<E>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    std::swap(v[i], v[rng.uniform_int(0, i)]);
  }
}

}  // namespace

int ToyLanguageSpec::char_index(const std::string& name) const {
  auto it = char_index_.find(name);
  return it == char_index_.end() ? -1 : it->second;
}

const ToyCharacter& ToyLanguageSpec::character(const std::string& name) const {
  int idx = char_index(name);
  if (idx < 0) throw OovError("not a toy character: " + name);
  return characters[idx];
}

const std::vector<double>& ToyLanguageSpec::codebook_row(
    const std::string& phoneme) const {
  auto it = phoneme_index_.find(phoneme);
  if (it == phoneme_index_.end()) {
    throw OovError("not a toy phoneme: " + phoneme);
  }
  return codebook[it->second];
}

void ToyLanguageSpec::rebuild_indices() {
  char_index_.clear();
  phoneme_index_.clear();
  for (size_t i = 0; i < characters.size(); ++i) {
    char_index_[characters[i].name] = static_cast<int>(i);
  }
  for (size_t i = 0; i < phoneme_inventory.size(); ++i) {
    phoneme_index_[phoneme_inventory[i]] = static_cast<int>(i);
  }
}

void ToyLanguageSpec::validate() const {
  for (const auto& ch : characters) {
    if (!ch.polyphone) continue;
    std::vector<int> classes;
    for (const auto& pron : ch.prons) classes.push_back(pron.governing_class);
    std::sort(classes.begin(), classes.end());
    if (std::adjacent_find(classes.begin(), classes.end()) != classes.end()) {
      throw ConfigError("polyphone " + ch.name +
                        " has pronunciations sharing a governing class");
    }
  }
  for (size_t a = 0; a < class_vectors.size(); ++a) {
    for (size_t b = a + 1; b < class_vectors.size(); ++b) {
      if (cosine(class_vectors[a], class_vectors[b]) >= 0.5) {
        throw ConfigError("class vectors too similar (cosine >= 0.5)");
      }
    }
  }
  for (size_t a = 0; a < codebook.size(); ++a) {
    for (size_t b = a + 1; b < codebook.size(); ++b) {
      if (codebook[a] == codebook[b]) {
        throw ConfigError("codebook rows must be pairwise distinct");
      }
    }
  }
}

ToyLanguageSpec generate_spec(const ToyParams& params) {
  if (params.n_classes < 2) throw ConfigError("need at least 2 context classes");
  if (params.m_min < 2 || params.m_max < params.m_min) {
    throw ConfigError("polyphone pronunciation counts need 2 <= m_min <= m_max");
  }
  if (params.m_max > params.n_classes) {
    throw ConfigError("m_max exceeds the class count");
  }
  if (params.n_polyphones <= 0 || params.n_polyphones >= params.n_chars) {
    throw ConfigError("polyphone count must be in (0, n_chars)");
  }
  const int monophones = params.n_chars - params.n_polyphones;
  if (monophones < 2 * params.n_classes) {
    throw ConfigError("need at least two monophones per context class");
  }
  if (params.sent_min < 4 || params.sent_max < params.sent_min) {
    throw ConfigError("sentence length range infeasible");
  }
  if (params.gloss_min < 1 || params.gloss_max < params.gloss_min) {
    throw ConfigError("gloss length range infeasible");
  }

  Rng rng(params.seed);
  ToyLanguageSpec spec;
  spec.params = params;

  // Class vectors: random unit vectors, redrawn until pairwise cosine < 0.5.
  for (int attempt = 0; attempt < 100; ++attempt) {
    spec.class_vectors.clear();
    for (int c = 0; c < params.n_classes; ++c) {
      std::vector<double> v(params.d_model);
      double norm = 0;
      for (double& x : v) {
        x = rng.normal();
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
      spec.class_vectors.push_back(std::move(v));
    }
    bool ok = true;
    for (size_t a = 0; a < spec.class_vectors.size() && ok; ++a) {
      for (size_t b = a + 1; b < spec.class_vectors.size(); ++b) {
        if (cosine(spec.class_vectors[a], spec.class_vectors[b]) >= 0.5) {
          ok = false;
          break;
        }
      }
    }
    if (ok) break;
    if (attempt == 99) {
      throw ConfigError("could not draw class vectors with cosine < 0.5; "
                        "d_model too small for the class count");
    }
  }

  // Which characters are polyphones.
  std::vector<int> order(params.n_chars);
  for (int i = 0; i < params.n_chars; ++i) order[i] = i;
  shuffle_in_place(order, rng);
  std::vector<bool> is_poly(params.n_chars, false);
  for (int i = 0; i < params.n_polyphones; ++i) is_poly[order[i]] = true;

  // Phoneme pool and codebook grow on demand.
  auto new_phoneme = [&]() {
    const std::string name = phoneme_name(static_cast<int>(spec.phoneme_inventory.size()));
    spec.phoneme_inventory.push_back(name);
    std::vector<double> row(params.acoustic_dim);
    for (double& x : row) x = rng.normal();
    spec.codebook.push_back(std::move(row));
    return name;
  };
  auto draw_phonemes = [&]() {
    std::vector<std::string> seq;
    const int len = rng.uniform_int(1, 2);
    for (int i = 0; i < len; ++i) {
      if (!spec.phoneme_inventory.empty() && rng.uniform() < 0.3) {
        seq.push_back(pick(spec.phoneme_inventory, rng));
      } else {
        seq.push_back(new_phoneme());
      }
    }
    return seq;
  };

  spec.class_members.assign(params.n_classes, {});
  std::vector<std::vector<std::string>> monophone_prons;  // for reuse

  int next_class = 0;
  for (int i = 0; i < params.n_chars; ++i) {
    ToyCharacter ch;
    ch.name = char_name(i);
    ch.polyphone = is_poly[i];
    if (!ch.polyphone) {
      ch.membership_class = next_class;
      next_class = (next_class + 1) % params.n_classes;
      spec.class_members[ch.membership_class].push_back(ch.name);
      ToyPronunciation pron;
      if (!monophone_prons.empty() && rng.uniform() < 0.15) {
        pron.phonemes = pick(monophone_prons, rng);  // shared pronunciation
      } else {
        pron.phonemes = draw_phonemes();
        monophone_prons.push_back(pron.phonemes);
      }
      pron.governing_class = ch.membership_class;
      ch.prons.push_back(std::move(pron));
    } else {
      const int m = rng.uniform_int(params.m_min, params.m_max);
      std::vector<int> classes(params.n_classes);
      for (int c = 0; c < params.n_classes; ++c) classes[c] = c;
      shuffle_in_place(classes, rng);
      for (int j = 0; j < m; ++j) {
        ToyPronunciation pron;
        pron.governing_class = classes[j];
        do {
          pron.phonemes = draw_phonemes();
        } while (std::any_of(ch.prons.begin(), ch.prons.end(),
                             [&](const ToyPronunciation& other) {
                               return other.phonemes == pron.phonemes;
                             }));
        ch.prons.push_back(std::move(pron));
      }
    }
    spec.characters.push_back(std::move(ch));
  }

  // Glosses need the class pools, which are complete only now.
  for (auto& ch : spec.characters) {
    for (const auto& pron : ch.prons) {
      std::vector<std::string> gloss;
      const int u = rng.uniform_int(params.gloss_min, params.gloss_max);
      const auto& pool = spec.class_members[pron.governing_class];
      for (int k = 0; k < u; ++k) gloss.push_back(pick(pool, rng));
      ch.glosses.push_back(std::move(gloss));
    }
  }

  if (params.include_punct) {
    ToyCharacter punct;
    punct.name = kPunctName;
    punct.membership_class = -1;
    ToyPronunciation pron;
    pron.phonemes = {kPunctPhoneme};
    pron.governing_class = -1;
    punct.prons.push_back(std::move(pron));
    punct.glosses.push_back({kPunctName});
    spec.characters.push_back(std::move(punct));
    spec.phoneme_inventory.push_back(kPunctPhoneme);
    std::vector<double> row(params.acoustic_dim);
    for (double& x : row) x = rng.normal();
    spec.codebook.push_back(std::move(row));
  }

  spec.rebuild_indices();
  spec.validate();
  return spec;
}

int rule_label(const ToyLanguageSpec& spec,
               const std::vector<std::string>& tokens, size_t pos) {
  const ToyCharacter& ch = spec.character(tokens[pos]);
  if (!ch.polyphone) return 0;

  auto class_of = [&](size_t p) -> int {
    int idx = spec.char_index(tokens[p]);
    if (idx < 0) return -1;
    const ToyCharacter& n = spec.characters[idx];
    return n.polyphone ? -1 : n.membership_class;
  };
  auto pron_for_class = [&](int cls) -> int {
    for (size_t j = 0; j < ch.prons.size(); ++j) {
      if (ch.prons[j].governing_class == cls) return static_cast<int>(j);
    }
    return -1;
  };

  std::vector<int> votes(spec.params.n_classes, 0);
  const long len = static_cast<long>(tokens.size());
  for (long off : {-2L, -1L, 1L, 2L}) {
    const long p = static_cast<long>(pos) + off;
    if (p < 0 || p >= len) continue;
    const int cls = class_of(static_cast<size_t>(p));
    if (cls >= 0 && pron_for_class(cls) >= 0) votes[cls] += 1;
  }
  int best = 0;
  for (int v : votes) best = std::max(best, v);
  if (best == 0) return 0;

  std::vector<bool> tied(spec.params.n_classes, false);
  int tie_count = 0;
  for (int c = 0; c < spec.params.n_classes; ++c) {
    if (votes[c] == best && pron_for_class(c) >= 0) {
      tied[c] = true;
      ++tie_count;
    }
  }
  if (tie_count == 1) {
    for (int c = 0; c < spec.params.n_classes; ++c) {
      if (tied[c]) return pron_for_class(c);
    }
  }
  // Tie: prefer the left neighbor, then further left, then the right side.
  for (long off : {-1L, -2L, 1L, 2L}) {
    const long p = static_cast<long>(pos) + off;
    if (p < 0 || p >= len) continue;
    const int cls = class_of(static_cast<size_t>(p));
    if (cls >= 0 && tied[cls]) return pron_for_class(cls);
  }
  return 0;
}

GeneratedCorpus generate_corpus(const ToyLanguageSpec& spec, int n_train,
                                int n_heldout, uint64_t seed) {
  Rng rng(seed);
  const ToyParams& params = spec.params;

  std::vector<std::string> monophones;
  std::vector<std::string> polyphones;
  for (const auto& ch : spec.characters) {
    if (ch.polyphone) {
      polyphones.push_back(ch.name);
    } else if (ch.membership_class >= 0) {
      monophones.push_back(ch.name);
    }
  }

  GeneratedCorpus corpus;
  corpus.train.acoustic_dim = params.acoustic_dim;
  corpus.heldout.acoustic_dim = params.acoustic_dim;

  const int total = n_train + n_heldout;
  for (int s = 0; s < total; ++s) {
    CorpusSentence sent;
    const int len = rng.uniform_int(params.sent_min, params.sent_max);
    sent.tokens.resize(len);
    for (int p = 0; p < len; ++p) sent.tokens[p] = pick(monophones, rng);

    // Polyphones spaced at least 3 apart so each keeps a dedicated
    // monophone neighbor slot.
    std::vector<int> poly_positions;
    int last = -3;
    for (int p = 0; p < len; ++p) {
      if (p - last >= 3 && rng.uniform() < params.polyphone_rate) {
        sent.tokens[p] = pick(polyphones, rng);
        poly_positions.push_back(p);
        last = p;
      }
    }
    // Give every polyphone one neighbor from an intended governing class.
    for (int p : poly_positions) {
      const ToyCharacter& ch = spec.character(sent.tokens[p]);
      const int j = rng.uniform_int(0, ch.pron_count() - 1);
      const int cls = ch.prons[j].governing_class;
      const int slot = p > 0 ? p - 1 : p + 1;
      sent.tokens[slot] = pick(spec.class_members[cls], rng);
    }
    if (params.include_punct && rng.uniform() < 0.5) {
      sent.tokens.push_back(kPunctName);
    }

    // Ground truth is the governance rule applied to the final tokens.
    sent.labels.resize(sent.tokens.size());
    for (size_t p = 0; p < sent.tokens.size(); ++p) {
      sent.labels[p] = rule_label(spec, sent.tokens, p);
    }
    sent.targets.resize(sent.tokens.size());
    for (size_t p = 0; p < sent.tokens.size(); ++p) {
      const ToyCharacter& ch = spec.character(sent.tokens[p]);
      const auto& phonemes = ch.prons[sent.labels[p]].phonemes;
      std::vector<double> row(params.acoustic_dim, 0.0);
      for (const auto& ph : phonemes) {
        const auto& code = spec.codebook_row(ph);
        for (int c = 0; c < params.acoustic_dim; ++c) row[c] += code[c];
      }
      for (int c = 0; c < params.acoustic_dim; ++c) {
        row[c] = row[c] / static_cast<double>(phonemes.size()) +
                 rng.normal(0.0, params.target_noise);
      }
      sent.targets[p] = std::move(row);
    }
    (s < n_train ? corpus.train : corpus.heldout).sentences.push_back(
        std::move(sent));
  }
  return corpus;
}

Dictionary emit_oracle_dictionary(const ToyLanguageSpec& spec) {
  Dictionary dict;
  for (const auto& ch : spec.characters) {
    CharacterRecord rec;
    rec.character = ch.name;
    for (int j = 0; j < ch.pron_count(); ++j) {
      PronEntry entry;
      entry.pron.phoneme_tokens = ch.prons[j].phonemes;
      entry.pron.pron_index = j;
      entry.gloss.gloss_tokens = ch.glosses[j];
      rec.entries.push_back(std::move(entry));
    }
    dict.add_record(std::move(rec));
  }
  return dict;
}

std::vector<KeyRow> emit_oracle_keys(const ToyLanguageSpec& spec) {
  Rng rng(spec.params.seed ^ 0x6b657973ull);  // independent key-noise stream
  std::vector<KeyRow> rows;
  for (const auto& ch : spec.characters) {
    for (int j = 0; j < ch.pron_count(); ++j) {
      const int cls = ch.prons[j].governing_class;
      for (size_t k = 0; k < ch.glosses[j].size(); ++k) {
        KeyRow row;
        row.character = ch.name;
        row.pron_index = j;
        row.token_index = static_cast<int>(k);
        row.values.resize(spec.params.d_model);
        for (int c = 0; c < spec.params.d_model; ++c) {
          const double base = cls >= 0 ? spec.class_vectors[cls][c] : 0.0;
          row.values[c] = static_cast<float>(
              base + rng.normal(0.0, spec.params.key_noise));
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

nlohmann::json spec_to_json(const ToyLanguageSpec& spec) {
  const ToyParams& p = spec.params;
  nlohmann::json j;
  j["params"] = {{"n_chars", p.n_chars},
                 {"n_polyphones", p.n_polyphones},
                 {"n_classes", p.n_classes},
                 {"m_min", p.m_min},
                 {"m_max", p.m_max},
                 {"d_model", p.d_model},
                 {"acoustic_dim", p.acoustic_dim},
                 {"key_noise", p.key_noise},
                 {"target_noise", p.target_noise},
                 {"gloss_min", p.gloss_min},
                 {"gloss_max", p.gloss_max},
                 {"sent_min", p.sent_min},
                 {"sent_max", p.sent_max},
                 {"polyphone_rate", p.polyphone_rate},
                 {"include_punct", p.include_punct},
                 {"seed", p.seed}};
  j["class_vectors"] = spec.class_vectors;
  j["phoneme_inventory"] = spec.phoneme_inventory;
  j["codebook"] = spec.codebook;
  j["class_members"] = spec.class_members;
  j["characters"] = nlohmann::json::array();
  for (const auto& ch : spec.characters) {
    nlohmann::json prons = nlohmann::json::array();
    for (const auto& pron : ch.prons) {
      prons.push_back({{"phonemes", pron.phonemes},
                       {"governing_class", pron.governing_class}});
    }
    j["characters"].push_back({{"name", ch.name},
                               {"polyphone", ch.polyphone},
                               {"membership_class", ch.membership_class},
                               {"prons", prons},
                               {"glosses", ch.glosses}});
  }
  return j;
}

ToyLanguageSpec spec_from_json(const nlohmann::json& j) {
  ToyLanguageSpec spec;
  const auto& p = j.at("params");
  spec.params.n_chars = p.at("n_chars");
  spec.params.n_polyphones = p.at("n_polyphones");
  spec.params.n_classes = p.at("n_classes");
  spec.params.m_min = p.at("m_min");
  spec.params.m_max = p.at("m_max");
  spec.params.d_model = p.at("d_model");
  spec.params.acoustic_dim = p.at("acoustic_dim");
  spec.params.key_noise = p.at("key_noise");
  spec.params.target_noise = p.at("target_noise");
  spec.params.gloss_min = p.at("gloss_min");
  spec.params.gloss_max = p.at("gloss_max");
  spec.params.sent_min = p.at("sent_min");
  spec.params.sent_max = p.at("sent_max");
  spec.params.polyphone_rate = p.at("polyphone_rate");
  spec.params.include_punct = p.at("include_punct");
  spec.params.seed = p.at("seed");
  spec.class_vectors = j.at("class_vectors")
                           .get<std::vector<std::vector<double>>>();
  spec.phoneme_inventory =
      j.at("phoneme_inventory").get<std::vector<std::string>>();
  spec.codebook = j.at("codebook").get<std::vector<std::vector<double>>>();
  spec.class_members =
      j.at("class_members").get<std::vector<std::vector<std::string>>>();
  for (const auto& cj : j.at("characters")) {
    ToyCharacter ch;
    ch.name = cj.at("name");
    ch.polyphone = cj.at("polyphone");
    ch.membership_class = cj.at("membership_class");
    for (const auto& pj : cj.at("prons")) {
      ToyPronunciation pron;
      pron.phonemes = pj.at("phonemes").get<std::vector<std::string>>();
      pron.governing_class = pj.at("governing_class");
      ch.prons.push_back(std::move(pron));
    }
    ch.glosses =
        cj.at("glosses").get<std::vector<std::vector<std::string>>>();
    spec.characters.push_back(std::move(ch));
  }
  spec.rebuild_indices();
  return spec;
}

}  // namespace

void save_toyspec(const ToyLanguageSpec& spec, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path);
  os << spec_to_json(spec).dump(1) << "\n";
}

ToyLanguageSpec load_toyspec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("bad toyspec json: ") + e.what());
  }
  return spec_from_json(j);
}

void write_corpus_dir(const ToyLanguageSpec& spec, const GeneratedCorpus& corpus,
                      const std::string& dir) {
  Dictionary dict = emit_oracle_dictionary(spec);
  {
    std::ofstream os(dir + "/dict.txt");
    if (!os) throw FormatError("cannot open for writing: " + dir + "/dict.txt");
    write_dictionary_text(dict, os);
  }
  write_dkey(dir + "/keys.dkey", spec.params.d_model, emit_oracle_keys(spec));
  save_toyspec(spec, dir + "/toyspec.json");
  write_corpus_split(dir, "train", corpus.train);
  write_corpus_split(dir, "heldout", corpus.heldout);
}

OracleAccuracy oracle_accuracy(const std::vector<std::vector<int>>& predictions,
                               const Corpus& corpus,
                               const ToyLanguageSpec& spec) {
  if (predictions.size() != corpus.sentences.size()) {
    throw Error("oracle_accuracy: prediction/corpus sentence count mismatch");
  }
  OracleAccuracy acc;
  size_t correct_poly = 0, correct_all = 0;
  for (size_t s = 0; s < predictions.size(); ++s) {
    const auto& sent = corpus.sentences[s];
    if (predictions[s].size() != sent.tokens.size()) {
      throw Error("oracle_accuracy: misaligned sentence " + std::to_string(s));
    }
    for (size_t p = 0; p < sent.tokens.size(); ++p) {
      const bool hit = predictions[s][p] == sent.labels[p];
      ++acc.total_occurrences;
      if (hit) ++correct_all;
      int idx = spec.char_index(sent.tokens[p]);
      if (idx >= 0 && spec.characters[idx].polyphone) {
        ++acc.polyphone_occurrences;
        if (hit) ++correct_poly;
      }
    }
  }
  acc.overall_accuracy =
      acc.total_occurrences == 0
          ? 0.0
          : static_cast<double>(correct_all) / acc.total_occurrences;
  acc.polyphone_accuracy =
      acc.polyphone_occurrences == 0
          ? 0.0
          : static_cast<double>(correct_poly) / acc.polyphone_occurrences;
  return acc;
}

}  // namespace dictg2p
