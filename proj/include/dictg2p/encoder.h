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
#include <vector>

#include "dictg2p/dictionary.h"
#include "dictg2p/optim.h"
#include "dictg2p/tensor.h"
#include "dictg2p/vocab.h"

namespace dictg2p {

// Feed-forward transformer stacks with relative position encoding. Desk-scale
// defaults; the paper-scale sizes (192 wide, 4+4 layers) are reachable by
// config.
struct EncoderConfig {
  int d_model = 64;
  int heads = 2;
  int semantic_layers = 2;
  int linguistic_layers = 2;
  int conv_kernel = 5;
  int ffn_mult = 4;
  int rel_clip = 8;

  int head_dim() const { return d_model / heads; }
  int ffn_dim() const { return d_model * ffn_mult; }
  void validate() const;
};

// Creates the parameters of one encoder stack under `prefix`
// ("<prefix>.<layer>.attn.wq", ".attn.rel_k", ".ffn.w1", ".ln1.gamma", ...).
template <typename T>
void create_encoder_params(ParameterStore<T>& params, const std::string& prefix,
                           const EncoderConfig& cfg, int layers, Rng& rng);

// Runs the stack. x is l x d_model; output has the same shape.
template <typename T>
Tensor<T> encoder_stack_forward(const Tensor<T>& x, ParameterStore<T>& params,
                                const std::string& prefix,
                                const EncoderConfig& cfg, int layers,
                                Tape<T>* tape);

// Pairwise self-attention logits with clipped relative position offsets:
// logits[i][j] = (q_i . k_j + q_i . rel[clip + clamp(j - i, -clip, clip)])
//               / sqrt(head_dim).
// Exposed separately so the position-shift property is directly testable.
template <typename T>
Tensor<T> attention_logits(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& rel_k, int clip, Tape<T>* tape);

// Semantic contexts z for a character-id sequence: embedding lookup through
// the "sem" stack. Requires params "char_emb" and "sem.*".
template <typename T>
Tensor<T> encode_semantic(const std::vector<int>& token_ids,
                          ParameterStore<T>& params, const EncoderConfig& cfg,
                          Tape<T>* tape);

// Fuses retrieved pronunciation and semantic sequences (elementwise add) and
// runs the "lin" stack. Both inputs are l x d_model.
template <typename T>
Tensor<T> encode_linguistic(const Tensor<T>& pron_seq, const Tensor<T>& sem_seq,
                            ParameterStore<T>& params, const EncoderConfig& cfg,
                            Tape<T>* tape);

// Mean of the pronunciation's phoneme-token embeddings (1 x d_model), so
// identical pronunciations share one embedding across characters.
// Throws OovError on a phoneme missing from the vocabulary.
template <typename T>
Tensor<T> pronunciation_embedding(const Pronunciation& pron,
                                  const Tensor<T>& phoneme_table,
                                  const Vocab& phoneme_vocab, Tape<T>* tape);

}  // namespace dictg2p
