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

#include "dictg2p/encoder.h"

#include <cmath>

#include "dictg2p/error.h"

namespace dictg2p {

void EncoderConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || semantic_layers <= 0 ||
      linguistic_layers <= 0 || conv_kernel <= 0 || ffn_mult <= 0 ||
      rel_clip <= 0) {
    throw ConfigError("encoder config fields must be positive");
  }
  if (d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " not divisible by heads " + std::to_string(heads));
  }
}

namespace {

const double kLnEps = 1e-5;

std::string layer_prefix(const std::string& prefix, int layer) {
  return prefix + "." + std::to_string(layer) + ".";
}

}  // namespace

template <typename T>
void create_encoder_params(ParameterStore<T>& params, const std::string& prefix,
                           const EncoderConfig& cfg, int layers, Rng& rng) {
  cfg.validate();
  const int d = cfg.d_model;
  const int f = cfg.ffn_dim();
  const int k = cfg.conv_kernel;
  for (int layer = 0; layer < layers; ++layer) {
    const std::string lp = layer_prefix(prefix, layer);
    for (const char* name : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      init_xavier(params.create(lp + name, d, d), d, d, rng);
    }
    for (const char* name : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
      params.create(lp + name, 1, d);
    }
    init_normal(params.create(lp + "attn.rel_k", 2 * cfg.rel_clip + 1,
                              cfg.head_dim()),
                0.02, rng);
    params.create(lp + "ln1.gamma", 1, d) = Tensor<T>::full(1, d, T(1), true);
    params.create(lp + "ln1.beta", 1, d);
    init_xavier(params.create(lp + "ffn.w1", k * d, f), k * d, f, rng);
    params.create(lp + "ffn.b1", 1, f);
    init_xavier(params.create(lp + "ffn.w2", k * f, d), k * f, d, rng);
    params.create(lp + "ffn.b2", 1, d);
    params.create(lp + "ln2.gamma", 1, d) = Tensor<T>::full(1, d, T(1), true);
    params.create(lp + "ln2.beta", 1, d);
  }
}

template <typename T>
Tensor<T> attention_logits(const Tensor<T>& q, const Tensor<T>& k,
                           const Tensor<T>& rel_k, int clip, Tape<T>* tape) {
  check_shape(q.cols() == k.cols() && q.rows() == k.rows(), "attention_logits",
              q, k);
  check_shape(rel_k.rows() == 2 * clip + 1 && rel_k.cols() == q.cols(),
              "attention_logits", q, rel_k);
  const int len = q.rows();
  Tensor<T> content = matmul(q, transpose(k, tape), tape);
  Tensor<T> by_offset = matmul(q, transpose(rel_k, tape), tape);
  Tensor<T> positional = relative_gather(by_offset, clip, len, tape);
  const T inv_sqrt_d =
      T(1) / static_cast<T>(std::sqrt(static_cast<double>(q.cols())));
  return scale(add(content, positional, tape), inv_sqrt_d, tape);
}

namespace {

template <typename T>
Tensor<T> self_attention(const Tensor<T>& x, ParameterStore<T>& params,
                         const std::string& lp, const EncoderConfig& cfg,
                         Tape<T>* tape) {
  Tensor<T> q = add_bias(matmul(x, params.get(lp + "attn.wq"), tape),
                         params.get(lp + "attn.bq"), tape);
  Tensor<T> k = add_bias(matmul(x, params.get(lp + "attn.wk"), tape),
                         params.get(lp + "attn.bk"), tape);
  Tensor<T> v = add_bias(matmul(x, params.get(lp + "attn.wv"), tape),
                         params.get(lp + "attn.bv"), tape);
  const int dh = cfg.head_dim();
  std::vector<Tensor<T>> head_outputs;
  head_outputs.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h) {
    Tensor<T> qh = slice_cols(q, h * dh, dh, tape);
    Tensor<T> kh = slice_cols(k, h * dh, dh, tape);
    Tensor<T> vh = slice_cols(v, h * dh, dh, tape);
    Tensor<T> logits = attention_logits(qh, kh, params.get(lp + "attn.rel_k"),
                                        cfg.rel_clip, tape);
    Tensor<T> weights = softmax_lastdim(logits, tape);
    head_outputs.push_back(matmul(weights, vh, tape));
  }
  Tensor<T> merged = concat(head_outputs, 1, tape);
  return add_bias(matmul(merged, params.get(lp + "attn.wo"), tape),
                  params.get(lp + "attn.bo"), tape);
}

template <typename T>
Tensor<T> conv_ffn(const Tensor<T>& x, ParameterStore<T>& params,
                   const std::string& lp, const EncoderConfig& cfg,
                   Tape<T>* tape) {
  Tensor<T> h = conv1d_same(x, params.get(lp + "ffn.w1"),
                            params.get(lp + "ffn.b1"), cfg.conv_kernel, tape);
  h = relu(h, tape);
  return conv1d_same(h, params.get(lp + "ffn.w2"), params.get(lp + "ffn.b2"),
                     cfg.conv_kernel, tape);
}

}  // namespace

template <typename T>
Tensor<T> encoder_stack_forward(const Tensor<T>& x, ParameterStore<T>& params,
                                const std::string& prefix,
                                const EncoderConfig& cfg, int layers,
                                Tape<T>* tape) {
  Tensor<T> h = x;
  for (int layer = 0; layer < layers; ++layer) {
    const std::string lp = layer_prefix(prefix, layer);
    Tensor<T> attn = self_attention(h, params, lp, cfg, tape);
    h = layer_norm(add(h, attn, tape), params.get(lp + "ln1.gamma"),
                   params.get(lp + "ln1.beta"), static_cast<T>(kLnEps), tape);
    Tensor<T> ffn = conv_ffn(h, params, lp, cfg, tape);
    h = layer_norm(add(h, ffn, tape), params.get(lp + "ln2.gamma"),
                   params.get(lp + "ln2.beta"), static_cast<T>(kLnEps), tape);
  }
  return h;
}

template <typename T>
Tensor<T> encode_semantic(const std::vector<int>& token_ids,
                          ParameterStore<T>& params, const EncoderConfig& cfg,
                          Tape<T>* tape) {
  if (token_ids.empty()) throw Error("encode_semantic: empty input");
  Tensor<T> x = embedding_lookup(params.get("char_emb"), token_ids, tape);
  return encoder_stack_forward(x, params, "sem", cfg, cfg.semantic_layers,
                               tape);
}

template <typename T>
Tensor<T> encode_linguistic(const Tensor<T>& pron_seq, const Tensor<T>& sem_seq,
                            ParameterStore<T>& params, const EncoderConfig& cfg,
                            Tape<T>* tape) {
  if (pron_seq.rows() == 0) throw Error("encode_linguistic: empty input");
  check_shape(pron_seq.rows() == sem_seq.rows() &&
                  pron_seq.cols() == sem_seq.cols(),
              "encode_linguistic", pron_seq, sem_seq);
  Tensor<T> fused = add(pron_seq, sem_seq, tape);
  return encoder_stack_forward(fused, params, "lin", cfg,
                               cfg.linguistic_layers, tape);
}

template <typename T>
Tensor<T> pronunciation_embedding(const Pronunciation& pron,
                                  const Tensor<T>& phoneme_table,
                                  const Vocab& phoneme_vocab, Tape<T>* tape) {
  std::vector<int> ids;
  ids.reserve(pron.phoneme_tokens.size());
  for (const auto& tok : pron.phoneme_tokens) ids.push_back(phoneme_vocab.id(tok));
  Tensor<T> rows = embedding_lookup(phoneme_table, ids, tape);
  const int n = static_cast<int>(ids.size());
  Tensor<T> averager = Tensor<T>::full(1, n, T(1) / static_cast<T>(n));
  return matmul(averager, rows, tape);
}

#define DICTG2P_INSTANTIATE(T)                                                 \
  template void create_encoder_params<T>(ParameterStore<T>&,                   \
                                         const std::string&,                   \
                                         const EncoderConfig&, int, Rng&);     \
  template Tensor<T> encoder_stack_forward<T>(                                 \
      const Tensor<T>&, ParameterStore<T>&, const std::string&,                \
      const EncoderConfig&, int, Tape<T>*);                                    \
  template Tensor<T> attention_logits<T>(const Tensor<T>&, const Tensor<T>&,   \
                                         const Tensor<T>&, int, Tape<T>*);     \
  template Tensor<T> encode_semantic<T>(const std::vector<int>&,               \
                                        ParameterStore<T>&,                    \
                                        const EncoderConfig&, Tape<T>*);       \
  template Tensor<T> encode_linguistic<T>(const Tensor<T>&, const Tensor<T>&,  \
                                          ParameterStore<T>&,                  \
                                          const EncoderConfig&, Tape<T>*);     \
  template Tensor<T> pronunciation_embedding<T>(                               \
      const Pronunciation&, const Tensor<T>&, const Vocab&, Tape<T>*);

DICTG2P_INSTANTIATE(float)
DICTG2P_INSTANTIATE(double)

#undef DICTG2P_INSTANTIATE

}  // namespace dictg2p
