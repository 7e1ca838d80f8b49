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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "dictg2p/key_store.h"
#include "dictg2p/rng.h"
#include "dictg2p/toy_language.h"

using namespace dictg2p;

namespace {

// One-pass reimplementation of the governance rule, written independently of
// toy_language.cc: count governing-class votes in the +-2 window, break ties
// scanning left-first (pos-1, pos-2, pos+1, pos+2).
int checker_label(const ToyLanguageSpec& spec,
                  const std::vector<std::string>& tokens, size_t pos) {
  const ToyCharacter& ch = spec.character(tokens[pos]);
  if (!ch.polyphone) return 0;
  std::map<int, int> cls_to_pron;
  for (size_t j = 0; j < ch.prons.size(); ++j) {
    cls_to_pron[ch.prons[j].governing_class] = static_cast<int>(j);
  }
  std::map<int, int> votes;
  const std::vector<long> window = {-2, -1, 1, 2};
  for (long off : window) {
    const long p = static_cast<long>(pos) + off;
    if (p < 0 || p >= static_cast<long>(tokens.size())) continue;
    const int idx = spec.char_index(tokens[p]);
    if (idx < 0) continue;
    const ToyCharacter& other = spec.characters[idx];
    if (other.polyphone || other.membership_class < 0) continue;
    if (cls_to_pron.count(other.membership_class) > 0) {
      votes[other.membership_class] += 1;
    }
  }
  if (votes.empty()) return 0;
  int best = 0;
  for (const auto& [cls, n] : votes) best = std::max(best, n);
  const std::vector<long> scan = {-1, -2, 1, 2};
  for (long off : scan) {
    const long p = static_cast<long>(pos) + off;
    if (p < 0 || p >= static_cast<long>(tokens.size())) continue;
    const int idx = spec.char_index(tokens[p]);
    if (idx < 0) continue;
    const ToyCharacter& other = spec.characters[idx];
    if (other.polyphone || other.membership_class < 0) continue;
    auto it = votes.find(other.membership_class);
    if (it != votes.end() && it->second == best) {
      return cls_to_pron[other.membership_class];
    }
  }
  return 0;
}

ToyParams small_params(uint64_t seed) {
  ToyParams p;
  p.n_chars = 24;
  p.n_polyphones = 6;
  p.n_classes = 3;
  p.d_model = 12;
  p.acoustic_dim = 4;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("infeasible parameters are rejected") {
  ToyParams p = small_params(1);
  p.n_classes = 1;
  CHECK_THROWS_AS(generate_spec(p), ConfigError);
  p = small_params(1);
  p.m_max = 5;  // more pronunciations than classes
  CHECK_THROWS_AS(generate_spec(p), ConfigError);
  p = small_params(1);
  p.n_polyphones = 23;  // not enough monophones for the classes
  CHECK_THROWS_AS(generate_spec(p), ConfigError);
}

TEST_CASE("polyphone pronunciations map to distinct governing classes") {
  ToyLanguageSpec spec = generate_spec(small_params(2));
  for (const auto& ch : spec.characters) {
    if (!ch.polyphone) continue;
    CHECK(ch.pron_count() >= 2);
    std::vector<int> classes;
    for (const auto& pron : ch.prons) {
      CHECK(pron.governing_class >= 0);
      classes.push_back(pron.governing_class);
    }
    std::sort(classes.begin(), classes.end());
    CHECK(std::adjacent_find(classes.begin(), classes.end()) == classes.end());
  }
}

TEST_CASE("same seed reproduces the spec exactly") {
  ToyLanguageSpec a = generate_spec(small_params(3));
  ToyLanguageSpec b = generate_spec(small_params(3));
  CHECK(a.class_vectors == b.class_vectors);
  CHECK(a.phoneme_inventory == b.phoneme_inventory);
  CHECK(a.codebook == b.codebook);
  REQUIRE(a.characters.size() == b.characters.size());
  for (size_t i = 0; i < a.characters.size(); ++i) {
    CHECK(a.characters[i].name == b.characters[i].name);
    CHECK(a.characters[i].glosses == b.characters[i].glosses);
  }
}

TEST_CASE("4-class spec keeps class vectors more than 60 degrees apart") {
  for (uint64_t seed : {5u, 6u, 7u, 8u, 9u}) {
    ToyParams p = small_params(seed);
    p.n_classes = 4;
    p.n_chars = 30;
    p.d_model = 32;
    ToyLanguageSpec spec = generate_spec(p);
    for (size_t a = 0; a < spec.class_vectors.size(); ++a) {
      for (size_t b = a + 1; b < spec.class_vectors.size(); ++b) {
        double dot = 0;
        for (int c = 0; c < p.d_model; ++c) {
          dot += spec.class_vectors[a][c] * spec.class_vectors[b][c];
        }
        CHECK(std::acos(dot) > 60.0 * 3.14159265358979 / 180.0);
      }
    }
  }
}

TEST_CASE("corpus generation: label rules, neighborhood guarantee, checker") {
  ToyLanguageSpec spec = generate_spec(small_params(10));
  GeneratedCorpus corpus = generate_corpus(spec, 200, 50, 11);
  CHECK(corpus.train.sentences.size() == 200);
  CHECK(corpus.heldout.sentences.size() == 50);

  size_t poly_seen = 0;
  for (const auto& split : {corpus.train, corpus.heldout}) {
    for (const auto& sent : split.sentences) {
      REQUIRE(sent.labels.size() == sent.tokens.size());
      REQUIRE(sent.targets.size() == sent.tokens.size());
      for (size_t p = 0; p < sent.tokens.size(); ++p) {
        const ToyCharacter& ch = spec.character(sent.tokens[p]);
        if (!ch.polyphone) {
          CHECK(sent.labels[p] == 0);
          continue;
        }
        ++poly_seen;
        // Independent checker agrees with the stored label.
        CHECK(sent.labels[p] == checker_label(spec, sent.tokens, p));
        // At least one window token belongs to some governing class.
        bool has_governing_neighbor = false;
        for (long off : {-2L, -1L, 1L, 2L}) {
          const long q = static_cast<long>(p) + off;
          if (q < 0 || q >= static_cast<long>(sent.tokens.size())) continue;
          const ToyCharacter& other = spec.character(sent.tokens[q]);
          if (other.polyphone || other.membership_class < 0) continue;
          for (const auto& pron : ch.prons) {
            if (pron.governing_class == other.membership_class) {
              has_governing_neighbor = true;
            }
          }
        }
        CHECK(has_governing_neighbor);
      }
    }
  }
  CHECK(poly_seen > 100);
}

TEST_CASE("monophone-only sentences label everything with entry zero") {
  ToyLanguageSpec spec = generate_spec(small_params(12));
  // Construct one by hand from monophone names.
  std::vector<std::string> tokens;
  for (const auto& ch : spec.characters) {
    if (!ch.polyphone && ch.membership_class >= 0) tokens.push_back(ch.name);
    if (tokens.size() == 6) break;
  }
  for (size_t p = 0; p < tokens.size(); ++p) {
    CHECK(rule_label(spec, tokens, p) == 0);
  }
}

TEST_CASE("label distribution tracks the class sampling distribution") {
  ToyParams p = small_params(13);
  p.n_chars = 40;
  p.n_polyphones = 8;
  ToyLanguageSpec spec = generate_spec(p);
  GeneratedCorpus corpus = generate_corpus(spec, 5000, 0, 14);
  // Intended classes are uniform over each polyphone's pronunciations, so
  // labels should be near-uniform per polyphone.
  std::map<std::string, std::map<int, int>> counts;
  for (const auto& sent : corpus.train.sentences) {
    for (size_t i = 0; i < sent.tokens.size(); ++i) {
      if (spec.character(sent.tokens[i]).polyphone) {
        counts[sent.tokens[i]][sent.labels[i]] += 1;
      }
    }
  }
  for (const auto& [name, by_label] : counts) {
    const ToyCharacter& ch = spec.character(name);
    size_t total = 0;
    for (const auto& [label, n] : by_label) total += n;
    if (total < 400) continue;  // skip rarely-sampled characters
    for (int j = 0; j < ch.pron_count(); ++j) {
      const double expected = 1.0 / ch.pron_count();
      const auto it = by_label.find(j);
      const double got =
          it == by_label.end() ? 0.0 : static_cast<double>(it->second) / total;
      CHECK(std::fabs(got - expected) < 0.05);
    }
  }
}

TEST_CASE("acoustic targets are codebook means plus declared noise") {
  ToyParams p = small_params(15);
  p.target_noise = 0.0;
  ToyLanguageSpec spec = generate_spec(p);
  GeneratedCorpus corpus = generate_corpus(spec, 20, 0, 16);
  for (const auto& sent : corpus.train.sentences) {
    for (size_t i = 0; i < sent.tokens.size(); ++i) {
      const ToyCharacter& ch = spec.character(sent.tokens[i]);
      const auto& phonemes = ch.prons[sent.labels[i]].phonemes;
      for (int c = 0; c < p.acoustic_dim; ++c) {
        double mean = 0;
        for (const auto& ph : phonemes) mean += spec.codebook_row(ph)[c];
        mean /= static_cast<double>(phonemes.size());
        CHECK(sent.targets[i][c] == doctest::Approx(mean).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("emitted files parse back losslessly") {
  ToyLanguageSpec spec = generate_spec(small_params(17));
  GeneratedCorpus corpus = generate_corpus(spec, 30, 10, 18);
  const std::string dir = "/tmp/dictg2p_test_corpus";
  std::filesystem::create_directories(dir);
  write_corpus_dir(spec, corpus, dir);

  // Dictionary round trip through the text format.
  Dictionary dict = emit_oracle_dictionary(spec);
  Dictionary parsed = load_dictionary_any(dir + "/dict.txt");
  CHECK(parsed == dict);

  // Key store import covers every row at the right width.
  auto store = KeyStore<double>::imported(parsed, dir + "/keys.dkey");
  CHECK(store.d_model() == spec.params.d_model);

  // Corpus split round trip.
  Corpus train = load_corpus_split(dir, "train");
  CHECK(train == corpus.train);
  Corpus heldout = load_corpus_split(dir, "heldout");
  CHECK(heldout == corpus.heldout);

  // Toyspec JSON round trip preserves vectors bit-exactly.
  ToyLanguageSpec reloaded = load_toyspec(dir + "/toyspec.json");
  CHECK(reloaded.class_vectors == spec.class_vectors);
  CHECK(reloaded.codebook == spec.codebook);
  CHECK(reloaded.phoneme_inventory == spec.phoneme_inventory);
  CHECK(reloaded.characters.size() == spec.characters.size());
  reloaded.validate();

  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle accuracy: identity, all-wrong, and random guessing") {
  ToyParams p = small_params(19);
  p.m_min = 2;
  p.m_max = 2;  // balanced two-way polyphones
  ToyLanguageSpec spec = generate_spec(p);
  GeneratedCorpus corpus = generate_corpus(spec, 2500, 0, 20);

  // Identity predictions.
  std::vector<std::vector<int>> exact;
  for (const auto& sent : corpus.train.sentences) exact.push_back(sent.labels);
  OracleAccuracy acc = oracle_accuracy(exact, corpus.train, spec);
  CHECK(acc.polyphone_accuracy == 1.0);
  CHECK(acc.overall_accuracy == 1.0);
  CHECK(acc.polyphone_occurrences > 1000);

  // All-wrong on two-pronunciation polyphones.
  std::vector<std::vector<int>> flipped = exact;
  for (size_t s = 0; s < flipped.size(); ++s) {
    const auto& sent = corpus.train.sentences[s];
    for (size_t i = 0; i < flipped[s].size(); ++i) {
      if (spec.character(sent.tokens[i]).polyphone) {
        flipped[s][i] = 1 - flipped[s][i];
      }
    }
  }
  CHECK(oracle_accuracy(flipped, corpus.train, spec).polyphone_accuracy == 0.0);

  // Uniform random guessing on a balanced m=2 corpus sits near one half.
  Rng rng(21);
  std::vector<std::vector<int>> random_guess = exact;
  for (auto& sent : random_guess) {
    for (auto& v : sent) v = rng.uniform_int(0, 1);
  }
  const double guess =
      oracle_accuracy(random_guess, corpus.train, spec).polyphone_accuracy;
  CHECK(guess > 0.47);
  CHECK(guess < 0.53);

  // Misalignment is an error.
  exact[0].pop_back();
  CHECK_THROWS_AS(oracle_accuracy(exact, corpus.train, spec), Error);
}
