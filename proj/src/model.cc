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

#include "dictg2p/model.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dictg2p/io_util.h"

namespace dictg2p {

namespace {

constexpr char kCkptMagic[4] = {'D', 'G', 'P', 'C'};
constexpr uint32_t kCkptVersion = 1;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double ModelConfig::effective_attn_scale() const {
  return attn_scale > 0.0 ? attn_scale
                          : std::sqrt(static_cast<double>(encoder.d_model));
}

void ModelConfig::validate() const {
  encoder.validate();
  if (acoustic_dim <= 0) throw ConfigError("acoustic_dim must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (warmup_steps <= 0) throw ConfigError("warmup_steps must be positive");
  if (lr_mult <= 0.0) throw ConfigError("lr_mult must be positive");
  if (tau.tau0 <= 0.0 || tau.tau_min <= 0.0 || tau.rate < 0.0 ||
      tau.update_every <= 0) {
    throw ConfigError("bad tau schedule");
  }
  if (attn_scale < 0.0) throw ConfigError("attn_scale must be >= 0");
  if (log_every <= 0 || checkpoint_every <= 0 || eval_every < 0) {
    throw ConfigError("bad logging cadence");
  }
}

void ModelConfig::apply_line(const std::string& key, const std::string& value) {
  try {
    if (key == "d_model") encoder.d_model = std::stoi(value);
    else if (key == "heads") encoder.heads = std::stoi(value);
    else if (key == "semantic_layers") encoder.semantic_layers = std::stoi(value);
    else if (key == "linguistic_layers") encoder.linguistic_layers = std::stoi(value);
    else if (key == "conv_kernel") encoder.conv_kernel = std::stoi(value);
    else if (key == "ffn_mult") encoder.ffn_mult = std::stoi(value);
    else if (key == "rel_clip") encoder.rel_clip = std::stoi(value);
    else if (key == "acoustic_dim") acoustic_dim = std::stoi(value);
    else if (key == "batch_size") batch_size = std::stoi(value);
    else if (key == "max_steps") max_steps = std::stoll(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "warmup_steps") warmup_steps = std::stoll(value);
    else if (key == "lr_mult") lr_mult = std::stod(value);
    else if (key == "tau0") tau.tau0 = std::stod(value);
    else if (key == "tau_min") tau.tau_min = std::stod(value);
    else if (key == "tau_rate") tau.rate = std::stod(value);
    else if (key == "tau_update_every") tau.update_every = std::stoll(value);
    else if (key == "key_store_mode") key_store_mode = key_store_mode_from_string(value);
    else if (key == "gumbel_hard") gumbel_hard = (value == "true" || value == "1");
    else if (key == "attn_scale") attn_scale = std::stod(value);
    else if (key == "log_every") log_every = std::stoll(value);
    else if (key == "checkpoint_every") checkpoint_every = std::stoll(value);
    else if (key == "eval_every") eval_every = std::stoll(value);
    else throw ConfigError("unknown config key: " + key);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": " + value);
  }
}

ModelConfig ModelConfig::parse(std::istream& is) {
  ModelConfig cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key=value, got: " + line);
    }
    cfg.apply_line(line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config: " + path);
  return parse(is);
}

std::string ModelConfig::serialize() const {
  std::ostringstream os;
  os << "d_model=" << encoder.d_model << "\n"
     << "heads=" << encoder.heads << "\n"
     << "semantic_layers=" << encoder.semantic_layers << "\n"
     << "linguistic_layers=" << encoder.linguistic_layers << "\n"
     << "conv_kernel=" << encoder.conv_kernel << "\n"
     << "ffn_mult=" << encoder.ffn_mult << "\n"
     << "rel_clip=" << encoder.rel_clip << "\n"
     << "acoustic_dim=" << acoustic_dim << "\n"
     << "batch_size=" << batch_size << "\n"
     << "max_steps=" << max_steps << "\n"
     << "seed=" << seed << "\n"
     << "warmup_steps=" << warmup_steps << "\n"
     << "lr_mult=" << fmt_double(lr_mult) << "\n"
     << "tau0=" << fmt_double(tau.tau0) << "\n"
     << "tau_min=" << fmt_double(tau.tau_min) << "\n"
     << "tau_rate=" << fmt_double(tau.rate) << "\n"
     << "tau_update_every=" << tau.update_every << "\n"
     << "key_store_mode=" << to_string(key_store_mode) << "\n"
     << "gumbel_hard=" << (gumbel_hard ? "true" : "false") << "\n"
     << "attn_scale=" << fmt_double(attn_scale) << "\n"
     << "log_every=" << log_every << "\n"
     << "checkpoint_every=" << checkpoint_every << "\n"
     << "eval_every=" << eval_every << "\n";
  return os.str();
}

uint64_t ModelConfig::hash() const { return fnv1a64(serialize()); }

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  write_magic(os, kCkptMagic);
  write_u32(os, kCkptVersion);
  write_string(os, ckpt.dtype);
  write_string(os, ckpt.config_text);
  write_u64(os, ckpt.config_hash);
  write_u64(os, static_cast<uint64_t>(ckpt.step));
  const bool f32 = ckpt.dtype == "f32";
  write_u32(os, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    write_string(os, p.name);
    write_u32(os, static_cast<uint32_t>(p.rows));
    write_u32(os, static_cast<uint32_t>(p.cols));
    for (double v : p.values) {
      if (f32) write_f32(os, static_cast<float>(v));
      else write_f64(os, v);
    }
  }
  os.put(ckpt.has_optimizer ? 1 : 0);
  if (ckpt.has_optimizer) {
    write_u64(os, static_cast<uint64_t>(ckpt.adam_step));
    for (size_t i = 0; i < ckpt.params.size(); ++i) {
      for (double v : ckpt.adam_m[i]) {
        if (f32) write_f32(os, static_cast<float>(v));
        else write_f64(os, v);
      }
      for (double v : ckpt.adam_v[i]) {
        if (f32) write_f32(os, static_cast<float>(v));
        else write_f64(os, v);
      }
    }
  }
  write_u32(os, static_cast<uint32_t>(ckpt.history.size()));
  for (const auto& e : ckpt.history) {
    write_u64(os, static_cast<uint64_t>(e.step));
    write_f64(os, e.loss);
    write_f64(os, e.tau);
    write_f64(os, e.lr);
    write_f64(os, e.eval_accuracy);
  }
  if (!os) throw FormatError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  expect_magic(is, kCkptMagic, kCkptVersion);
  Checkpoint ckpt;
  ckpt.dtype = read_string(is);
  if (ckpt.dtype != "f32" && ckpt.dtype != "f64") {
    throw FormatError("bad checkpoint dtype: " + ckpt.dtype);
  }
  ckpt.config_text = read_string(is);
  ckpt.config_hash = read_u64(is);
  ckpt.step = static_cast<int64_t>(read_u64(is));
  const bool f32 = ckpt.dtype == "f32";
  const uint32_t n_params = read_u32(is);
  for (uint32_t i = 0; i < n_params; ++i) {
    CheckpointEntry e;
    e.name = read_string(is);
    e.rows = static_cast<int>(read_u32(is));
    e.cols = static_cast<int>(read_u32(is));
    e.values.resize(static_cast<size_t>(e.rows) * e.cols);
    for (double& v : e.values) v = f32 ? read_f32(is) : read_f64(is);
    ckpt.params.push_back(std::move(e));
  }
  int opt_flag = is.get();
  if (opt_flag == EOF) throw FormatError("truncated checkpoint: " + path);
  ckpt.has_optimizer = opt_flag != 0;
  if (ckpt.has_optimizer) {
    ckpt.adam_step = static_cast<int64_t>(read_u64(is));
    ckpt.adam_m.resize(ckpt.params.size());
    ckpt.adam_v.resize(ckpt.params.size());
    for (size_t i = 0; i < ckpt.params.size(); ++i) {
      const size_t n = ckpt.params[i].values.size();
      ckpt.adam_m[i].resize(n);
      ckpt.adam_v[i].resize(n);
      for (double& v : ckpt.adam_m[i]) v = f32 ? read_f32(is) : read_f64(is);
      for (double& v : ckpt.adam_v[i]) v = f32 ? read_f32(is) : read_f64(is);
    }
  }
  const uint32_t n_hist = read_u32(is);
  for (uint32_t i = 0; i < n_hist; ++i) {
    MetricsEntry e;
    e.step = static_cast<int64_t>(read_u64(is));
    e.loss = read_f64(is);
    e.tau = read_f64(is);
    e.lr = read_f64(is);
    e.eval_accuracy = read_f64(is);
    ckpt.history.push_back(e);
  }
  return ckpt;
}

template <>
const char* dtype_name<float>() {
  return "f32";
}
template <>
const char* dtype_name<double>() {
  return "f64";
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::shared_ptr<const Dictionary> dict,
                std::shared_ptr<const KeyStore<T>> keys)
    : cfg_(cfg), dict_(std::move(dict)), keys_(std::move(keys)) {
  cfg_.validate();
  if (keys_->d_model() != cfg_.encoder.d_model) {
    throw ConfigError("key store width " + std::to_string(keys_->d_model()) +
                      " does not match d_model " +
                      std::to_string(cfg_.encoder.d_model));
  }
  if ((keys_->mode() == KeyStoreMode::kImported) !=
      (cfg_.key_store_mode == KeyStoreMode::kImported)) {
    throw ConfigError("key store mode does not match config");
  }
  char_vocab_ = Vocab::characters_from(*dict_);
  phoneme_vocab_ = Vocab::phonemes_from(*dict_);

  Rng rng(cfg_.seed ^ 0x1817ull);
  const int d = cfg_.encoder.d_model;
  init_normal(params_.create("char_emb", char_vocab_.size(), d), 0.1, rng);
  init_normal(params_.create("phoneme_emb", phoneme_vocab_.size(), d), 0.1,
              rng);
  if (cfg_.key_store_mode == KeyStoreMode::kTrainable) {
    init_normal(params_.create("gloss_emb", char_vocab_.size(), d), 0.1, rng);
  }
  create_encoder_params(params_, "sem", cfg_.encoder,
                        cfg_.encoder.semantic_layers, rng);
  create_encoder_params(params_, "lin", cfg_.encoder,
                        cfg_.encoder.linguistic_layers, rng);
  init_xavier(params_.create("dec.w", d, cfg_.acoustic_dim), d,
              cfg_.acoustic_dim, rng);
  params_.create("dec.b", 1, cfg_.acoustic_dim);
}

template <typename T>
Tensor<T> Model<T>::pron_matrix(const CharacterRecord& rec, Tape<T>* tape) {
  std::vector<Tensor<T>> rows;
  rows.reserve(rec.entries.size());
  for (const auto& entry : rec.entries) {
    rows.push_back(pronunciation_embedding(entry.pron,
                                           params_.get("phoneme_emb"),
                                           phoneme_vocab_, tape));
  }
  if (rows.size() == 1) return rows[0];
  return concat(rows, 0, tape);
}

template <typename T>
typename Model<T>::ForwardResult Model<T>::forward(
    const std::vector<std::string>& tokens, Tape<T>* tape, SampleMode mode,
    T tau, Rng* noise_rng, const RuleSet* rules, bool ablate_pronunciation,
    bool ablate_semantics) {
  if (tokens.empty()) throw Error("forward: empty sentence");
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(char_vocab_.id_or(tok, 0));

  Tensor<T> contexts = encode_semantic(ids, params_, cfg_.encoder, tape);
  const T attn_scale = static_cast<T>(cfg_.effective_attn_scale());
  const Tensor<T>* gloss_table = nullptr;
  if (cfg_.key_store_mode == KeyStoreMode::kTrainable) {
    gloss_table = &params_.get("gloss_emb");
  }
  static const Tensor<T> kNoTable = Tensor<T>::zeros(1, 1);

  ForwardResult result;
  std::vector<Tensor<T>> pron_rows, sem_rows;
  pron_rows.reserve(tokens.size());
  sem_rows.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int rec_idx = dict_->record_index(tokens[i]);
    const CharacterRecord& rec =
        rec_idx >= 0 ? dict_->records()[rec_idx] : Dictionary::unknown_record();
    const CharKeys<T>& layout = keys_->keys_for(rec_idx);
    Tensor<T> keys = keys_->rows(rec_idx, gloss_table ? *gloss_table : kNoTable,
                                 tape);
    Tensor<T> z_i = embedding_lookup(contexts, {static_cast<int>(i)}, tape);
    AttentionResult<T> attn = attention_scores(z_i, keys, attn_scale, tape);
    Tensor<T> retrieved = retrieve_semantics(attn, keys, tape);
    Tensor<T> prons = pron_matrix(rec, tape);

    const int m = rec.pron_count();
    Tensor<T> weights, sampled;
    bool forced = false;
    int chosen = 0;
    if (m == 1) {
      weights = Tensor<T>::one_hot(1, 0);  // independent of all parameters
      sampled = weights;
    } else {
      weights = aggregate_pron_weights(attn, layout.aggregation, tape);
      std::optional<int> forced_index;
      if (rules != nullptr) {
        weights = apply_rules(weights, tokens, i, *rules, &forced_index);
      }
      if (forced_index.has_value()) {
        forced = true;
        chosen = *forced_index;
        sampled = Tensor<T>::one_hot(m, chosen);
      } else if (mode == SampleMode::kArgmax) {
        chosen = argmax_row(weights);
        sampled = Tensor<T>::one_hot(m, chosen);
      } else {
        std::vector<T> noise;
        if (noise_rng != nullptr) {
          noise.resize(m);
          for (T& g : noise) g = static_cast<T>(noise_rng->gumbel());
        }
        sampled = gumbel_softmax_sample(weights, tau, noise, cfg_.gumbel_hard,
                                        tape);
        chosen = argmax_row(sampled);
      }
    }
    Tensor<T> mixed = mix_pronunciation(sampled, prons, tape);
    if (ablate_pronunciation) {
      mixed = Tensor<T>::zeros(1, cfg_.encoder.d_model);
    }
    if (ablate_semantics) {
      retrieved = Tensor<T>::zeros(1, cfg_.encoder.d_model);
    }
    pron_rows.push_back(mixed);
    sem_rows.push_back(retrieved);
    result.chosen.push_back(chosen);

    CharDiag diag;
    diag.character = tokens[i];
    diag.pron_count = m;
    diag.chosen = chosen;
    diag.forced = forced;
    diag.w.assign(weights.data(), weights.data() + m);
    diag.sampled.assign(sampled.data(), sampled.data() + m);
    diag.attn.assign(attn.norm.data(), attn.norm.data() + attn.norm.cols());
    diag.legend = layout.index_map;
    diag.retrieved.assign(retrieved.data(),
                          retrieved.data() + retrieved.cols());
    result.diag.chars.push_back(std::move(diag));
  }

  Tensor<T> pron_seq =
      pron_rows.size() == 1 ? pron_rows[0] : concat(pron_rows, 0, tape);
  Tensor<T> sem_seq =
      sem_rows.size() == 1 ? sem_rows[0] : concat(sem_rows, 0, tape);
  Tensor<T> fused =
      encode_linguistic(pron_seq, sem_seq, params_, cfg_.encoder, tape);
  result.prediction = add_bias(matmul(fused, params_.get("dec.w"), tape),
                               params_.get("dec.b"), tape);
  return result;
}

template <typename T>
typename Model<T>::InferenceResult Model<T>::infer(
    const std::vector<std::string>& tokens, const RuleSet* rules,
    bool sample_gumbel, Rng* rng) {
  const T tau = static_cast<T>(anneal_tau(step_, cfg_.tau));
  ForwardResult fwd =
      forward(tokens, nullptr,
              sample_gumbel ? SampleMode::kGumbel : SampleMode::kArgmax, tau,
              rng, rules);
  InferenceResult result;
  result.chosen = fwd.chosen;
  result.diag = std::move(fwd.diag);
  for (size_t i = 0; i < tokens.size(); ++i) {
    const CharacterRecord& rec = dict_->lookup_or_unknown(tokens[i]);
    result.pronunciations.push_back(rec.entries[fwd.chosen[i]].pron);
  }
  return result;
}

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, const AdamState<T>* opt,
                           const std::vector<MetricsEntry>& history) {
  Checkpoint ckpt;
  ckpt.dtype = dtype_name<T>();
  ckpt.config_text = model.config().serialize();
  ckpt.config_hash = model.config().hash();
  ckpt.step = model.step();
  const ParameterStore<T>& params = model.params();
  for (size_t i = 0; i < params.count(); ++i) {
    const Tensor<T>& t = params.tensor(i);
    CheckpointEntry e;
    e.name = params.name(i);
    e.rows = t.rows();
    e.cols = t.cols();
    e.values.assign(t.data(), t.data() + t.size());
    ckpt.params.push_back(std::move(e));
  }
  if (opt != nullptr) {
    ckpt.has_optimizer = true;
    ckpt.adam_step = opt->step;
    ckpt.adam_m.resize(params.count());
    ckpt.adam_v.resize(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
      ckpt.adam_m[i].assign(opt->m[i].begin(), opt->m[i].end());
      ckpt.adam_v[i].assign(opt->v[i].begin(), opt->v[i].end());
    }
  }
  ckpt.history = history;
  return ckpt;
}

template <typename T>
bool Model<T>::restore(const Checkpoint& ckpt, AdamState<T>* opt) {
  if (ckpt.dtype != dtype_name<T>()) {
    throw ConfigError("checkpoint dtype " + ckpt.dtype +
                      " does not match model dtype " + dtype_name<T>());
  }
  if (ckpt.params.size() != params_.count()) {
    throw ConfigError("checkpoint has " + std::to_string(ckpt.params.size()) +
                      " parameters, model has " +
                      std::to_string(params_.count()));
  }
  for (size_t i = 0; i < params_.count(); ++i) {
    const CheckpointEntry& e = ckpt.params[i];
    Tensor<T>& t = params_.tensor(i);
    if (e.name != params_.name(i) || e.rows != t.rows() || e.cols != t.cols()) {
      throw ConfigError("checkpoint parameter " + e.name + " [" +
                        std::to_string(e.rows) + ", " +
                        std::to_string(e.cols) + "] does not match model " +
                        params_.name(i) + " " + t.shape_str());
    }
    for (int64_t k = 0; k < t.size(); ++k) {
      t.data()[k] = static_cast<T>(e.values[k]);
    }
  }
  if (opt != nullptr && ckpt.has_optimizer) {
    *opt = AdamState<T>::init(params_);
    opt->step = ckpt.adam_step;
    for (size_t i = 0; i < params_.count(); ++i) {
      for (size_t k = 0; k < ckpt.adam_m[i].size(); ++k) {
        opt->m[i][k] = static_cast<T>(ckpt.adam_m[i][k]);
        opt->v[i][k] = static_cast<T>(ckpt.adam_v[i][k]);
      }
    }
  }
  step_ = ckpt.step;
  return ckpt.config_hash == cfg_.hash();
}

template <typename T>
Model<T> Model<T>::from_checkpoint(const Checkpoint& ckpt,
                                   std::shared_ptr<const Dictionary> dict,
                                   std::shared_ptr<const KeyStore<T>> keys) {
  std::istringstream is(ckpt.config_text);
  ModelConfig cfg = ModelConfig::parse(is);
  Model model(cfg, std::move(dict), std::move(keys));
  model.restore(ckpt, nullptr);
  return model;
}

template <typename T>
typename Model<T>::InferenceResult infer_pronunciations(
    Model<T>& model, const std::vector<std::string>& tokens,
    const RuleSet* rules, bool sample_gumbel, Rng* rng) {
  return model.infer(tokens, rules, sample_gumbel, rng);
}

template <typename T>
TrainingBatch<T> assemble_batch(const Corpus& corpus,
                                const std::vector<size_t>& indices,
                                int acoustic_dim) {
  TrainingBatch<T> batch;
  for (size_t idx : indices) {
    batch.max_len = std::max(
        batch.max_len,
        static_cast<int>(corpus.sentences.at(idx).tokens.size()));
  }
  const int b = static_cast<int>(indices.size());
  batch.padded_targets =
      Tensor<T>::zeros(b * batch.max_len, acoustic_dim);
  batch.row_mask.assign(static_cast<size_t>(b) * batch.max_len, T(0));
  for (int s = 0; s < b; ++s) {
    const CorpusSentence& sent = corpus.sentences.at(indices[s]);
    batch.tokens.push_back(sent.tokens);
    batch.labels_eval_only.push_back(sent.labels);
    for (size_t p = 0; p < sent.tokens.size(); ++p) {
      const int row = s * batch.max_len + static_cast<int>(p);
      batch.row_mask[row] = T(1);
      ++batch.valid_rows;
      for (int c = 0; c < acoustic_dim; ++c) {
        batch.padded_targets.at(row, c) = static_cast<T>(sent.targets[p][c]);
      }
    }
  }
  return batch;
}

template <typename T>
Tensor<T> batch_loss(Model<T>& model, const TrainingBatch<T>& batch,
                     Tape<T>* tape, T tau, Rng* noise_rng) {
  const int f = model.config().acoustic_dim;
  Tensor<T> total;
  int64_t valid_elements = 0;
  for (size_t s = 0; s < batch.tokens.size(); ++s) {
    typename Model<T>::ForwardResult fwd = model.forward(
        batch.tokens[s], tape, SampleMode::kGumbel, tau, noise_rng, nullptr);
    // Valid target rows for this sentence, gathered from the padded block.
    std::vector<int> rows;
    const int base = static_cast<int>(s) * batch.max_len;
    for (size_t p = 0; p < batch.tokens[s].size(); ++p) {
      rows.push_back(base + static_cast<int>(p));
    }
    Tensor<T> target = embedding_lookup(batch.padded_targets, rows,
                                        static_cast<Tape<T>*>(nullptr));
    Tensor<T> sse = sse_loss(fwd.prediction, target, tape);
    total = total.defined() ? add(total, sse, tape) : sse;
    valid_elements += static_cast<int64_t>(rows.size()) * f;
  }
  return scale(total, T(1) / static_cast<T>(valid_elements), tape);
}

template <typename T>
bool verify_label_isolation(Model<T>& model, const Corpus& corpus,
                            const std::vector<size_t>& indices, T tau,
                            uint64_t noise_seed) {
  auto run = [&](const Corpus& c) {
    model.params().zero_grads();
    Tape<T> tape;
    Rng noise(noise_seed);
    TrainingBatch<T> batch =
        assemble_batch<T>(c, indices, model.config().acoustic_dim);
    Tensor<T> loss = batch_loss(model, batch, &tape, tau, &noise);
    tape.backward(loss);
    std::vector<std::vector<T>> grads;
    for (size_t i = 0; i < model.params().count(); ++i) {
      model.params().tensor(i).ensure_grad();
      grads.push_back(model.params().tensor(i).grad_values());
    }
    return grads;
  };
  auto with_labels = run(corpus);
  Corpus stripped = corpus;
  for (auto& sent : stripped.sentences) sent.labels.clear();
  auto without_labels = run(stripped);
  model.params().zero_grads();
  return with_labels == without_labels;
}

template <typename T>
double eval_polyphone_accuracy(Model<T>& model, const Corpus& corpus,
                               const RuleSet* rules) {
  size_t total = 0, correct = 0;
  for (const auto& sent : corpus.sentences) {
    if (sent.labels.empty()) continue;
    typename Model<T>::InferenceResult inf = model.infer(sent.tokens, rules);
    for (size_t p = 0; p < sent.tokens.size(); ++p) {
      const CharacterRecord& rec = model.dict().lookup_or_unknown(sent.tokens[p]);
      if (rec.pron_count() <= 1) continue;
      ++total;
      if (inf.chosen[p] == sent.labels[p]) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

template <typename T>
TrainResult train_loop(Model<T>& model, AdamState<T>& opt, const Corpus& corpus,
                       int64_t steps, const Corpus* eval_corpus,
                       std::ostream* metrics_log) {
  const ModelConfig& cfg = model.config();
  if (corpus.sentences.empty()) throw Error("train: empty corpus");
  if (corpus.acoustic_dim != cfg.acoustic_dim) {
    throw ConfigError("corpus acoustic_dim " +
                      std::to_string(corpus.acoustic_dim) +
                      " does not match config " +
                      std::to_string(cfg.acoustic_dim));
  }

  TrainResult result;
  Rng data_rng(cfg.seed ^ 0xDA7Aull);
  Rng noise_rng(cfg.seed ^ 0x6018ull);

  result.last_good = make_checkpoint(model, &opt, result.history);

  auto log_entry = [&](const MetricsEntry& e) {
    result.history.push_back(e);
    if (metrics_log != nullptr) {
      (*metrics_log) << e.step << ' ' << fmt_double(e.loss) << ' '
                     << fmt_double(e.tau) << ' ' << fmt_double(e.lr) << ' ';
      if (e.eval_accuracy >= 0.0) {
        (*metrics_log) << fmt_double(e.eval_accuracy);
      } else {
        (*metrics_log) << '-';
      }
      (*metrics_log) << '\n';
    }
  };

  const int64_t first = model.step() + 1;
  const int64_t last = model.step() + steps;
  for (int64_t step = first; step <= last; ++step) {
    const double tau = anneal_tau(step, cfg.tau);
    const double lr = cfg.lr_mult * noam_lr(step, cfg.warmup_steps,
                                            cfg.encoder.d_model);
    std::vector<size_t> indices;
    indices.reserve(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
      indices.push_back(static_cast<size_t>(data_rng.uniform_int(
          0, static_cast<int>(corpus.sentences.size()) - 1)));
    }
    TrainingBatch<T> batch =
        assemble_batch<T>(corpus, indices, cfg.acoustic_dim);

    Tape<T> tape;
    Tensor<T> loss =
        batch_loss(model, batch, &tape, static_cast<T>(tau), &noise_rng);
    const double loss_value = static_cast<double>(loss.data()[0]);
    if (!std::isfinite(loss_value) || loss_value > kDivergenceCeiling) {
      result.diverged = true;
      result.message = "loss diverged at step " + std::to_string(step) + ": " +
                       fmt_double(loss_value);
      return result;
    }
    tape.backward(loss);
    try {
      adam_step(model.params(), opt, lr);
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.message = std::string(e.what()) + " at step " +
                       std::to_string(step);
      return result;
    }
    model.params().zero_grads();
    model.set_step(step);

    const bool is_logged =
        step == first || step == last || step % cfg.log_every == 0;
    if (is_logged) {
      MetricsEntry e;
      e.step = step;
      e.loss = loss_value;
      e.tau = tau;
      e.lr = lr;
      if (eval_corpus != nullptr && cfg.eval_every > 0 &&
          (step % cfg.eval_every == 0 || step == last)) {
        e.eval_accuracy = eval_polyphone_accuracy(model, *eval_corpus);
      }
      log_entry(e);
    }
    if (step % cfg.checkpoint_every == 0) {
      result.last_good = make_checkpoint(model, &opt, result.history);
    }
  }
  result.last_good = make_checkpoint(model, &opt, result.history);
  return result;
}

#define DICTG2P_INSTANTIATE(T)                                                 \
  template class Model<T>;                                                     \
  template Checkpoint make_checkpoint<T>(const Model<T>&, const AdamState<T>*, \
                                         const std::vector<MetricsEntry>&);    \
  template typename Model<T>::InferenceResult infer_pronunciations<T>(         \
      Model<T>&, const std::vector<std::string>&, const RuleSet*, bool,        \
      Rng*);                                                                   \
  template struct TrainingBatch<T>;                                            \
  template TrainingBatch<T> assemble_batch<T>(const Corpus&,                   \
                                              const std::vector<size_t>&, int);\
  template Tensor<T> batch_loss<T>(Model<T>&, const TrainingBatch<T>&,         \
                                   Tape<T>*, T, Rng*);                         \
  template bool verify_label_isolation<T>(Model<T>&, const Corpus&,            \
                                          const std::vector<size_t>&, T,       \
                                          uint64_t);                           \
  template TrainResult train_loop<T>(Model<T>&, AdamState<T>&, const Corpus&,  \
                                     int64_t, const Corpus*, std::ostream*);   \
  template double eval_polyphone_accuracy<T>(Model<T>&, const Corpus&,         \
                                             const RuleSet*);

DICTG2P_INSTANTIATE(float)
DICTG2P_INSTANTIATE(double)

#undef DICTG2P_INSTANTIATE

}  // namespace dictg2p
