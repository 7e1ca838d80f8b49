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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dictg2p/corpus.h"
#include "dictg2p/dictionary.h"
#include "dictg2p/encoder.h"
#include "dictg2p/key_store.h"
#include "dictg2p/optim.h"
#include "dictg2p/rng.h"
#include "dictg2p/s2pa.h"
#include "dictg2p/tensor.h"
#include "dictg2p/vocab.h"

namespace dictg2p {

struct ModelConfig {
  EncoderConfig encoder;
  int acoustic_dim = 8;
  int batch_size = 8;
  int64_t max_steps = 1000;
  uint64_t seed = 0;
  int64_t warmup_steps = 500;
  double lr_mult = 1.0;
  TauSchedule tau;
  KeyStoreMode key_store_mode = KeyStoreMode::kImported;
  bool gumbel_hard = false;    // straight-through variant, off by default
  double attn_scale = 0.0;     // 0 selects sqrt(d_model)
  int64_t log_every = 50;
  int64_t checkpoint_every = 500;
  int64_t eval_every = 0;      // 0 disables in-loop accuracy eval

  double effective_attn_scale() const;
  void validate() const;

  // Plain-text key=value config; unknown keys are errors.
  static ModelConfig parse(std::istream& is);
  static ModelConfig load(const std::string& path);
  void apply_line(const std::string& key, const std::string& value);
  std::string serialize() const;  // canonical text, also used for hashing
  uint64_t hash() const;
};

struct MetricsEntry {
  int64_t step = 0;
  double loss = 0.0;
  double tau = 0.0;
  double lr = 0.0;
  double eval_accuracy = -1.0;  // < 0 means not evaluated

  bool operator==(const MetricsEntry&) const = default;
};

// In-memory checkpoint. Values are held as doubles, which represents both
// f32 and f64 parameters exactly; the file writes native-width values.
struct CheckpointEntry {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
};

struct Checkpoint {
  std::string dtype;  // "f32" or "f64"
  std::string config_text;
  uint64_t config_hash = 0;
  int64_t step = 0;
  std::vector<CheckpointEntry> params;
  bool has_optimizer = false;
  int64_t adam_step = 0;
  std::vector<std::vector<double>> adam_m;
  std::vector<std::vector<double>> adam_v;
  std::vector<MetricsEntry> history;
};

// Binary format: magic "DGPC", u32 version, then the fields above.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

enum class SampleMode {
  kGumbel,  // training-style differentiable sampling
  kArgmax,  // deployment-style noise-free decisions
};

// Per-character S2PA diagnostics, recorded on every forward pass.
struct CharDiag {
  std::string character;
  int pron_count = 1;
  int chosen = 0;
  bool forced = false;
  std::vector<double> w;        // aggregated pronunciation weights (post rules)
  std::vector<double> sampled;  // gumbel sample / one-hot
  std::vector<double> attn;     // flat normalized scores a'
  std::vector<std::pair<int, int>> legend;  // row -> (pron j, token k)
  std::vector<double> retrieved;            // s'
};

struct SentenceDiag {
  std::vector<CharDiag> chars;
};

// End-to-end model: semantic encoder -> S2PA -> linguistic encoder -> linear
// acoustic decoder (one projection per character position).
template <typename T>
class Model {
 public:
  Model(const ModelConfig& cfg, std::shared_ptr<const Dictionary> dict,
        std::shared_ptr<const KeyStore<T>> keys);

  static Model from_checkpoint(const Checkpoint& ckpt,
                               std::shared_ptr<const Dictionary> dict,
                               std::shared_ptr<const KeyStore<T>> keys);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }
  const Dictionary& dict() const { return *dict_; }
  const KeyStore<T>& key_store() const { return *keys_; }
  const Vocab& char_vocab() const { return char_vocab_; }
  const Vocab& phoneme_vocab() const { return phoneme_vocab_; }
  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }

  struct ForwardResult {
    Tensor<T> prediction;  // l x acoustic_dim
    SentenceDiag diag;
    std::vector<int> chosen;  // pron index per position
  };

  // One sentence. rng == nullptr under kGumbel means zero noise (test mode).
  // Ablation flags replace p' or s' with zeros to probe the fusion paths.
  ForwardResult forward(const std::vector<std::string>& tokens, Tape<T>* tape,
                        SampleMode mode, T tau, Rng* noise_rng,
                        const RuleSet* rules,
                        bool ablate_pronunciation = false,
                        bool ablate_semantics = false);

  struct InferenceResult {
    std::vector<Pronunciation> pronunciations;
    std::vector<int> chosen;
    SentenceDiag diag;
  };

  // Argmax decisions by default; sample_gumbel reproduces the sampled
  // behavior with noise from rng ("--sample-gumbel").
  InferenceResult infer(const std::vector<std::string>& tokens,
                        const RuleSet* rules, bool sample_gumbel = false,
                        Rng* rng = nullptr);

  // Restores parameter values (and optionally optimizer state) from a
  // checkpoint. Returns false when the config hash differs (caller may
  // warn); throws on shape or dtype mismatches.
  bool restore(const Checkpoint& ckpt, AdamState<T>* opt);

 private:
  Tensor<T> pron_matrix(const CharacterRecord& rec, Tape<T>* tape);

  ModelConfig cfg_;
  std::shared_ptr<const Dictionary> dict_;
  std::shared_ptr<const KeyStore<T>> keys_;
  Vocab char_vocab_;
  Vocab phoneme_vocab_;
  ParameterStore<T> params_;
  int64_t step_ = 0;
};

template <typename T>
const char* dtype_name();

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, const AdamState<T>* opt,
                           const std::vector<MetricsEntry>& history);

// Spec'd inference entry point: pronunciations plus diagnostics for a
// sentence, with dictionary fallback for out-of-vocabulary characters.
template <typename T>
typename Model<T>::InferenceResult infer_pronunciations(
    Model<T>& model, const std::vector<std::string>& tokens,
    const RuleSet* rules = nullptr, bool sample_gumbel = false,
    Rng* rng = nullptr);

// --- Training ---

// Padded batch per the data contract: ragged sentences padded to the batch
// maximum with a 0/1 row mask; masked rows carry zero targets and contribute
// zero loss. Labels ride along for evaluation only.
template <typename T>
struct TrainingBatch {
  std::vector<std::vector<std::string>> tokens;  // ragged views
  int max_len = 0;
  Tensor<T> padded_targets;  // (B * max_len) x F
  std::vector<T> row_mask;   // B * max_len
  std::vector<std::vector<int>> labels_eval_only;
  int64_t valid_rows = 0;
};

template <typename T>
TrainingBatch<T> assemble_batch(const Corpus& corpus,
                                const std::vector<size_t>& indices,
                                int acoustic_dim);

// Mean squared error over the valid rows of the batch (reconstruction loss).
template <typename T>
Tensor<T> batch_loss(Model<T>& model, const TrainingBatch<T>& batch,
                     Tape<T>* tape, T tau, Rng* noise_rng);

// Bitwise gradient comparison with and without ground-truth labels present;
// true when every gradient is identical (labels are outside the graph).
template <typename T>
bool verify_label_isolation(Model<T>& model, const Corpus& corpus,
                            const std::vector<size_t>& indices, T tau,
                            uint64_t noise_seed);

struct TrainResult {
  bool diverged = false;
  std::string message;
  std::vector<MetricsEntry> history;
  Checkpoint last_good;
};

// Runs `steps` optimizer steps from the model's current step. Aborts with
// diverged=true (last_good carries the most recent snapshot) when the loss
// leaves [0, 1e6] or goes non-finite.
template <typename T>
TrainResult train_loop(Model<T>& model, AdamState<T>& opt, const Corpus& corpus,
                       int64_t steps, const Corpus* eval_corpus,
                       std::ostream* metrics_log);

// Fraction of polyphone (m > 1) positions whose argmax pronunciation matches
// the corpus labels; used for the in-loop metrics log and `eval`.
template <typename T>
double eval_polyphone_accuracy(Model<T>& model, const Corpus& corpus,
                               const RuleSet* rules = nullptr);

inline constexpr double kDivergenceCeiling = 1e6;

}  // namespace dictg2p
