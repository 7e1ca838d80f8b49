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
#include <optional>
#include <string>
#include <vector>

#include "dictg2p/tensor.h"

namespace dictg2p {

// Semantics-to-pronunciation attention for one character occurrence.
// Scores are flat over (pronunciation j, gloss token k); the normalized
// scores are a single softmax over all rows, so they form one probability
// vector per character.

// Clamp applied to pronunciation weights before the log inside the
// Gumbel-Softmax, keeping forced/degenerate weights finite.
inline constexpr double kWeightClamp = 1e-10;

template <typename T>
struct AttentionResult {
  Tensor<T> raw;   // 1 x R, K . z / scale
  Tensor<T> norm;  // 1 x R, softmax over all (j, k) jointly
  T scale = T(1);
};

// z: 1 x d query (a semantic context row), keys: R x d gloss-token vectors.
// Throws on an empty key store row set or width mismatch.
template <typename T>
AttentionResult<T> attention_scores(const Tensor<T>& z, const Tensor<T>& keys,
                                    T scale_factor, Tape<T>* tape);

// s' = a' . K  (1 x d).
template <typename T>
Tensor<T> retrieve_semantics(const AttentionResult<T>& result,
                             const Tensor<T>& keys, Tape<T>* tape);

// w_j = sum_k a'_{j,k} via the 0/1 aggregation matrix (R x m). Summing
// post-softmax scores makes w a probability vector, so log(w) is defined.
template <typename T>
Tensor<T> aggregate_pron_weights(const AttentionResult<T>& result,
                                 const Tensor<T>& aggregation, Tape<T>* tape);

// softmax((log(max(w, 1e-10)) + g) / tau). Empty noise means g = 0 (the
// no-noise test mode). hard = straight-through one-hot. Throws on tau <= 0.
template <typename T>
Tensor<T> gumbel_softmax_sample(const Tensor<T>& w, T tau,
                                const std::vector<T>& noise, bool hard,
                                Tape<T>* tape);

// p' = sum_j weight_j . pron_embedding_j; pron_embeddings is m x d.
template <typename T>
Tensor<T> mix_pronunciation(const Tensor<T>& sampled_weights,
                            const Tensor<T>& pron_embeddings, Tape<T>* tape);

// --- Expert rules (closed predicate set, serializable) ---

enum class RulePredicate {
  kPrevIn,        // preceding token is one of the arguments
  kNextIn,        // following token is one of the arguments
  kSentInitial,   // occurrence is the first token
  kSentFinal,     // occurrence is the last token
  kAlways,
};

RulePredicate rule_predicate_from_string(const std::string& s);
std::string to_string(RulePredicate p);

struct Rule {
  std::string character;
  RulePredicate predicate = RulePredicate::kAlways;
  std::vector<std::string> args;  // token set for kPrevIn / kNextIn
  int forced_pron_index = 0;
};

// First matching rule wins; at most one fires per occurrence.
class RuleSet {
 public:
  void add(Rule rule) { rules_.push_back(std::move(rule)); }
  bool empty() const { return rules_.empty(); }
  size_t size() const { return rules_.size(); }
  const std::vector<Rule>& rules() const { return rules_; }

  std::optional<int> match(const std::vector<std::string>& tokens,
                           size_t pos) const;

  // Line format: character <TAB> predicate <TAB> argument <TAB> pron_index.
  // The argument is a comma-separated token list, or "-" when unused.
  static RuleSet parse(std::istream& is);
  static RuleSet load(const std::string& path);
  void write(std::ostream& os) const;

 private:
  std::vector<Rule> rules_;
};

// If a rule matches this occurrence, returns an exact one-hot (detached
// constant) at the forced index and sets *forced_index; otherwise returns w
// unchanged. Throws RuleError when the forced index is out of range.
template <typename T>
Tensor<T> apply_rules(const Tensor<T>& w,
                      const std::vector<std::string>& tokens, size_t pos,
                      const RuleSet& rules, std::optional<int>* forced_index);

}  // namespace dictg2p
