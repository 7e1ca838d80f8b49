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
#include <sstream>

#include "dictg2p/encoder.h"
#include "dictg2p/key_store.h"
#include "dictg2p/toy_language.h"
#include "test_util.h"

using namespace dictg2p;
using dictg2p::testing::random_tensor;

namespace {

Tape<double>* no_tape = nullptr;

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.semantic_layers = 2;
  cfg.linguistic_layers = 2;
  cfg.conv_kernel = 5;
  cfg.ffn_mult = 2;
  cfg.rel_clip = 8;
  return cfg;
}

Dictionary tiny_dict() {
  std::istringstream is(
      "dictg2p-dict v1\n"
      "{\"char\": \"a\", \"prons\": [{\"pron\": \"A1\", \"gloss\": \"b c\"}]}\n"
      "{\"char\": \"b\", \"prons\": [{\"pron\": \"B1 B2\", \"gloss\": \"a\"},"
      "{\"pron\": \"B3\", \"gloss\": \"c c a\"}]}\n"
      "{\"char\": \"c\", \"prons\": [{\"pron\": \"A1\", \"gloss\": \"a b\"}]}\n");
  return parse_dictionary(is);
}

}  // namespace

TEST_CASE("encoder config validation") {
  EncoderConfig cfg = small_config();
  cfg.d_model = 15;  // not divisible by heads
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.semantic_layers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("semantic encoding: shapes, determinism, empty input") {
  EncoderConfig cfg = small_config();
  Rng rng(21);
  ParameterStore<double> params;
  init_normal(params.create("char_emb", 10, cfg.d_model), 0.1, rng);
  create_encoder_params(params, "sem", cfg, cfg.semantic_layers, rng);

  CHECK_THROWS_AS(encode_semantic<double>({}, params, cfg, nullptr), Error);

  auto z1 = encode_semantic<double>({3}, params, cfg, nullptr);
  CHECK(z1.rows() == 1);
  CHECK(z1.cols() == cfg.d_model);

  for (int len : {2, 7, 64, 512}) {
    std::vector<int> ids;
    for (int i = 0; i < len; ++i) ids.push_back(i % 10);
    auto z = encode_semantic<double>(ids, params, cfg, nullptr);
    CHECK(z.rows() == len);
    CHECK(z.cols() == cfg.d_model);
    CHECK(z.all_finite());
  }

  // Determinism: same sentence twice gives identical contexts.
  std::vector<int> ids = {1, 4, 2, 9, 0};
  auto a = encode_semantic<double>(ids, params, cfg, nullptr);
  auto b = encode_semantic<double>(ids, params, cfg, nullptr);
  CHECK(a.same_values(b));
}

TEST_CASE("self-attention reacts to permuting distant context characters") {
  EncoderConfig cfg = small_config();
  Rng rng(22);
  ParameterStore<double> params;
  init_normal(params.create("char_emb", 12, cfg.d_model), 0.1, rng);
  create_encoder_params(params, "sem", cfg, cfg.semantic_layers, rng);

  std::vector<int> ids = {5, 1, 2, 3, 4, 6, 7};
  std::vector<int> permuted = ids;
  std::swap(permuted[1], permuted[6]);  // both distant from position 3
  auto z = encode_semantic<double>(ids, params, cfg, nullptr);
  auto z2 = encode_semantic<double>(permuted, params, cfg, nullptr);
  double delta = 0;
  for (int c = 0; c < cfg.d_model; ++c) {
    const double d = z.at(3, c) - z2.at(3, c);
    delta += d * d;
  }
  CHECK(std::sqrt(delta) > 0.0);
}

TEST_CASE("relative position logits are shift-invariant at clip 8") {
  const int clip = 8, dh = 8;
  Rng rng(23);
  auto q = random_tensor(6, dh, rng);
  auto k = random_tensor(6, dh, rng);
  auto rel = random_tensor(2 * clip + 1, dh, rng);
  auto logits = attention_logits(q, k, rel, clip, no_tape);

  // Prepend 3 rows of padding to q and k.
  auto pad = random_tensor(3, dh, rng);
  auto q2 = concat<double>({pad, q}, 0, no_tape);
  auto k2 = concat<double>({pad, k}, 0, no_tape);
  auto logits2 = attention_logits(q2, k2, rel, clip, no_tape);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      CHECK(logits.at(i, j) == logits2.at(i + 3, j + 3));
    }
  }
}

TEST_CASE("offsets beyond the clip distance share one relative embedding") {
  const int clip = 2, dh = 4;
  Rng rng(24);
  auto q = random_tensor(8, dh, rng);
  auto k = random_tensor(8, dh, rng);
  auto rel = random_tensor(2 * clip + 1, dh, rng);
  auto logits = attention_logits(q, k, rel, clip, no_tape);
  // For query 0, keys at offsets 2..7 all clamp to +clip: the positional
  // term is the same, so differences reduce to the content term.
  auto content = matmul(q, transpose(k, no_tape), no_tape);
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int j = 2; j < 8; ++j) {
    const double positional = logits.at(0, j) - content.at(0, j) * inv;
    const double positional2 = logits.at(0, 2) - content.at(0, 2) * inv;
    CHECK(positional == doctest::Approx(positional2).epsilon(1e-12));
  }
}

TEST_CASE("linguistic encoder: fusion uses semantics and validates shapes") {
  EncoderConfig cfg = small_config();
  Rng rng(25);
  ParameterStore<double> params;
  create_encoder_params(params, "lin", cfg, cfg.linguistic_layers, rng);

  auto p = random_tensor(5, cfg.d_model, rng);
  auto s = random_tensor(5, cfg.d_model, rng);
  auto g = encode_linguistic(p, s, params, cfg, no_tape);
  CHECK(g.rows() == 5);
  CHECK(g.cols() == cfg.d_model);

  // Zeroing s' changes the output: fusion actually reads the semantics.
  auto zeros = Tensor<double>::zeros(5, cfg.d_model);
  auto g2 = encode_linguistic(p, zeros, params, cfg, no_tape);
  CHECK_FALSE(g.same_values(g2));

  auto empty = Tensor<double>::zeros(0, cfg.d_model);
  CHECK_THROWS_AS(encode_linguistic(empty, empty, params, cfg, no_tape), Error);
  auto wrong = random_tensor(4, cfg.d_model, rng);
  CHECK_THROWS_AS(encode_linguistic(p, wrong, params, cfg, no_tape),
                  ShapeError);
}

TEST_CASE("pronunciation embeddings: mean pooling and sharing") {
  Dictionary dict = tiny_dict();
  Vocab phonemes = Vocab::phonemes_from(dict);
  Rng rng(26);
  auto table = random_tensor(phonemes.size(), 6, rng);

  // Mean of one phoneme is that phoneme's embedding row.
  const CharacterRecord& a = dict.lookup("a");
  auto ea = pronunciation_embedding(a.entries[0].pron, table, phonemes, no_tape);
  const int a1 = phonemes.id("A1");
  for (int c = 0; c < 6; ++c) CHECK(ea.at(0, c) == table.at(a1, c));

  // Two characters sharing the same pronunciation share the embedding.
  const CharacterRecord& c_rec = dict.lookup("c");
  auto ec = pronunciation_embedding(c_rec.entries[0].pron, table, phonemes,
                                    no_tape);
  CHECK(ec.same_values(ea));

  // Mean of two known vectors is the elementwise average.
  const CharacterRecord& b = dict.lookup("b");
  auto eb = pronunciation_embedding(b.entries[0].pron, table, phonemes, no_tape);
  const int b1 = phonemes.id("B1"), b2 = phonemes.id("B2");
  for (int c = 0; c < 6; ++c) {
    CHECK(eb.at(0, c) ==
          doctest::Approx((table.at(b1, c) + table.at(b2, c)) / 2.0));
  }

  Pronunciation unknown{{"NOPE"}, 0};
  CHECK_THROWS_AS(pronunciation_embedding(unknown, table, phonemes, no_tape),
                  OovError);
}

TEST_CASE("trainable key store ties rows across identical tokens") {
  Dictionary dict = tiny_dict();
  Vocab chars = Vocab::characters_from(dict);
  auto store = KeyStore<double>::trainable(dict, chars, 6);
  Rng rng(27);
  auto gloss_table = random_tensor(chars.size(), 6, rng);

  // "b" pron 1 gloss is "c c a": rows 0 and 1 must be identical.
  const int b_idx = dict.record_index("b");
  auto rows = store.rows(b_idx, gloss_table, no_tape);
  const CharKeys<double>& layout = store.keys_for(b_idx);
  REQUIRE(layout.row_count() == rows.rows());
  int first_c = -1, second_c = -1;
  for (int r = 0; r < layout.row_count(); ++r) {
    auto [j, k] = layout.index_map[r];
    if (j == 1 && k == 0) first_c = r;
    if (j == 1 && k == 1) second_c = r;
  }
  REQUIRE(first_c >= 0);
  REQUIRE(second_c >= 0);
  for (int c = 0; c < 6; ++c) {
    CHECK(rows.at(first_c, c) == rows.at(second_c, c));
  }
  // And they equal the gloss table row for "c".
  const int cid = chars.id("c");
  for (int c = 0; c < 6; ++c) CHECK(rows.at(first_c, c) == gloss_table.at(cid, c));
}

TEST_CASE("imported key store round trips a 3-row file exactly") {
  const std::string path = "/tmp/dictg2p_test_keys3.dkey";
  std::vector<KeyRow> rows = {
      {"a", 0, 0, {0.5f, -1.0f, 2.25f}},
      {"a", 0, 1, {0.0f, 3.5f, -0.125f}},
      {"b", 1, 0, {1.0f, 1.0f, 1.0f}},
  };
  write_dkey(path, 3, rows);
  auto [d, loaded] = read_dkey(path);
  CHECK(d == 3);
  CHECK(loaded == rows);
  std::remove(path.c_str());
}

TEST_CASE("imported key store rejects missing rows and width mismatches") {
  Dictionary dict = tiny_dict();
  const std::string path = "/tmp/dictg2p_test_keys_bad.dkey";
  // Only covers character "a"; the rest of the dictionary is missing.
  write_dkey(path, 4, {{"a", 0, 0, {1, 2, 3, 4}}, {"a", 0, 1, {5, 6, 7, 8}}});
  CHECK_THROWS_WITH_AS(KeyStore<double>::imported(dict, path),
                       doctest::Contains("missing key row"), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("frozen-oracle keys equal class vectors plus declared noise") {
  ToyParams params;
  params.n_chars = 20;
  params.n_polyphones = 4;
  params.n_classes = 3;
  params.d_model = 12;
  params.seed = 31;

  // Zero noise: rows exactly equal class vectors.
  params.key_noise = 0.0;
  ToyLanguageSpec spec0 = generate_spec(params);
  for (const auto& row : emit_oracle_keys(spec0)) {
    const ToyCharacter& ch = spec0.character(row.character);
    const int cls = ch.prons[row.pron_index].governing_class;
    for (int c = 0; c < params.d_model; ++c) {
      const double base = cls >= 0 ? spec0.class_vectors[cls][c] : 0.0;
      CHECK(row.values[c] == doctest::Approx(base).epsilon(1e-6));
    }
  }

  // Default noise: rows stay within a few sigma of the class vector.
  params.key_noise = 0.05;
  ToyLanguageSpec spec = generate_spec(params);
  bool any_nonzero_noise = false;
  for (const auto& row : emit_oracle_keys(spec)) {
    const ToyCharacter& ch = spec.character(row.character);
    const int cls = ch.prons[row.pron_index].governing_class;
    for (int c = 0; c < params.d_model; ++c) {
      const double base = cls >= 0 ? spec.class_vectors[cls][c] : 0.0;
      const double diff = row.values[c] - base;
      CHECK(std::fabs(diff) < 6.0 * params.key_noise);
      if (std::fabs(diff) > 1e-9) any_nonzero_noise = true;
    }
  }
  CHECK(any_nonzero_noise);
}

TEST_CASE("imported key store rows are bit-stable constants") {
  ToyParams params;
  params.n_chars = 16;
  params.n_polyphones = 3;
  params.n_classes = 3;
  params.d_model = 8;
  params.seed = 33;
  ToyLanguageSpec spec = generate_spec(params);
  Dictionary dict = emit_oracle_dictionary(spec);
  const std::string path = "/tmp/dictg2p_test_frozen.dkey";
  write_dkey(path, params.d_model, emit_oracle_keys(spec));
  auto store = KeyStore<double>::imported(dict, path);
  std::remove(path.c_str());

  auto none = Tensor<double>::zeros(1, 1);
  auto before = store.rows(0, none, no_tape);
  std::vector<double> snapshot(before.data(), before.data() + before.size());

  // Run tape ops over the rows; the stored constants must not move.
  Tape<double> tape;
  auto z = Tensor<double>::full(1, params.d_model, 0.3, true);
  auto scores = matmul(z, transpose(before, &tape), &tape);
  auto loss = mse_loss(scores, Tensor<double>::zeros(1, before.rows()), &tape);
  tape.backward(loss);

  auto after = store.rows(0, none, no_tape);
  CHECK(std::vector<double>(after.data(), after.data() + after.size()) ==
        snapshot);
}
