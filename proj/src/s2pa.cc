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

#include "dictg2p/s2pa.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dictg2p/error.h"

namespace dictg2p {

template <typename T>
AttentionResult<T> attention_scores(const Tensor<T>& z, const Tensor<T>& keys,
                                    T scale_factor, Tape<T>* tape) {
  if (keys.rows() == 0) {
    throw ShapeError("attention_scores: empty key store row set");
  }
  check_shape(z.rows() == 1 && z.cols() == keys.cols(), "attention_scores", z,
              keys);
  if (scale_factor <= T(0)) {
    throw Error("attention_scores: scale must be positive");
  }
  AttentionResult<T> result;
  result.scale = scale_factor;
  Tensor<T> scores = matmul(z, transpose(keys, tape), tape);
  result.raw = scale(scores, T(1) / scale_factor, tape);
  result.norm = softmax_lastdim(result.raw, tape);
  return result;
}

template <typename T>
Tensor<T> retrieve_semantics(const AttentionResult<T>& result,
                             const Tensor<T>& keys, Tape<T>* tape) {
  return matmul(result.norm, keys, tape);
}

template <typename T>
Tensor<T> aggregate_pron_weights(const AttentionResult<T>& result,
                                 const Tensor<T>& aggregation, Tape<T>* tape) {
  check_shape(aggregation.rows() == result.norm.cols(),
              "aggregate_pron_weights", result.norm, aggregation);
  return matmul(result.norm, aggregation, tape);
}

template <typename T>
Tensor<T> gumbel_softmax_sample(const Tensor<T>& w, T tau,
                                const std::vector<T>& noise, bool hard,
                                Tape<T>* tape) {
  if (tau <= T(0)) {
    throw Error("gumbel_softmax_sample: tau must be positive, got " +
                std::to_string(static_cast<double>(tau)));
  }
  if (!noise.empty() && noise.size() != static_cast<size_t>(w.cols())) {
    throw ShapeError("gumbel_softmax_sample: noise size " +
                     std::to_string(noise.size()) + " for " + w.shape_str());
  }
  Tensor<T> logits = log(clamp_min(w, static_cast<T>(kWeightClamp), tape), tape);
  if (!noise.empty()) {
    Tensor<T> g = Tensor<T>::from_data(1, w.cols(), noise);
    logits = add(logits, g, tape);
  }
  Tensor<T> soft = softmax_lastdim(scale(logits, T(1) / tau, tape), tape);
  if (hard) return hard_onehot_st(soft, tape);
  return soft;
}

template <typename T>
Tensor<T> mix_pronunciation(const Tensor<T>& sampled_weights,
                            const Tensor<T>& pron_embeddings, Tape<T>* tape) {
  check_shape(sampled_weights.cols() == pron_embeddings.rows(),
              "mix_pronunciation", sampled_weights, pron_embeddings);
  return matmul(sampled_weights, pron_embeddings, tape);
}

RulePredicate rule_predicate_from_string(const std::string& s) {
  if (s == "prev_in") return RulePredicate::kPrevIn;
  if (s == "next_in") return RulePredicate::kNextIn;
  if (s == "sent_initial") return RulePredicate::kSentInitial;
  if (s == "sent_final") return RulePredicate::kSentFinal;
  if (s == "always") return RulePredicate::kAlways;
  throw RuleError("unknown rule predicate: " + s);
}

std::string to_string(RulePredicate p) {
  switch (p) {
    case RulePredicate::kPrevIn: return "prev_in";
    case RulePredicate::kNextIn: return "next_in";
    case RulePredicate::kSentInitial: return "sent_initial";
    case RulePredicate::kSentFinal: return "sent_final";
    case RulePredicate::kAlways: return "always";
  }
  return "always";
}

namespace {

bool predicate_holds(const Rule& rule, const std::vector<std::string>& tokens,
                     size_t pos) {
  switch (rule.predicate) {
    case RulePredicate::kPrevIn: {
      if (pos == 0) return false;
      const std::string& prev = tokens[pos - 1];
      for (const auto& a : rule.args)
        if (a == prev) return true;
      return false;
    }
    case RulePredicate::kNextIn: {
      if (pos + 1 >= tokens.size()) return false;
      const std::string& next = tokens[pos + 1];
      for (const auto& a : rule.args)
        if (a == next) return true;
      return false;
    }
    case RulePredicate::kSentInitial:
      return pos == 0;
    case RulePredicate::kSentFinal:
      return pos + 1 == tokens.size();
    case RulePredicate::kAlways:
      return true;
  }
  return false;
}

}  // namespace

std::optional<int> RuleSet::match(const std::vector<std::string>& tokens,
                                  size_t pos) const {
  const std::string& ch = tokens.at(pos);
  for (const auto& rule : rules_) {
    if (rule.character != ch) continue;
    if (predicate_holds(rule, tokens, pos)) return rule.forced_pron_index;
  }
  return std::nullopt;
}

RuleSet RuleSet::parse(std::istream& is) {
  RuleSet rules;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
      if (c == '\t') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    fields.push_back(cur);
    if (fields.size() != 4) {
      throw ParseError(line_no, "rule needs 4 tab-separated fields");
    }
    Rule rule;
    rule.character = fields[0];
    rule.predicate = rule_predicate_from_string(fields[1]);
    if (fields[2] != "-") {
      std::stringstream ss(fields[2]);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) rule.args.push_back(tok);
      }
    }
    try {
      rule.forced_pron_index = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad pron_index: " + fields[3]);
    }
    if (rule.forced_pron_index < 0) {
      throw ParseError(line_no, "pron_index must be non-negative");
    }
    rules.add(std::move(rule));
  }
  return rules;
}

RuleSet RuleSet::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open rule file: " + path);
  return parse(is);
}

void RuleSet::write(std::ostream& os) const {
  for (const auto& rule : rules_) {
    std::string arg;
    for (size_t i = 0; i < rule.args.size(); ++i) {
      if (i > 0) arg += ',';
      arg += rule.args[i];
    }
    if (arg.empty()) arg = "-";
    os << rule.character << '\t' << to_string(rule.predicate) << '\t' << arg
       << '\t' << rule.forced_pron_index << '\n';
  }
}

template <typename T>
Tensor<T> apply_rules(const Tensor<T>& w,
                      const std::vector<std::string>& tokens, size_t pos,
                      const RuleSet& rules, std::optional<int>* forced_index) {
  std::optional<int> forced = rules.match(tokens, pos);
  if (forced_index != nullptr) *forced_index = forced;
  if (!forced.has_value()) return w;
  if (*forced >= w.cols()) {
    throw RuleError("rule forces pronunciation " + std::to_string(*forced) +
                    " but " + tokens.at(pos) + " has only " +
                    std::to_string(w.cols()));
  }
  return Tensor<T>::one_hot(w.cols(), *forced);
}

#define DICTG2P_INSTANTIATE(T)                                                 \
  template struct AttentionResult<T>;                                          \
  template AttentionResult<T> attention_scores<T>(const Tensor<T>&,            \
                                                  const Tensor<T>&, T,         \
                                                  Tape<T>*);                   \
  template Tensor<T> retrieve_semantics<T>(const AttentionResult<T>&,          \
                                           const Tensor<T>&, Tape<T>*);        \
  template Tensor<T> aggregate_pron_weights<T>(const AttentionResult<T>&,      \
                                               const Tensor<T>&, Tape<T>*);    \
  template Tensor<T> gumbel_softmax_sample<T>(const Tensor<T>&, T,             \
                                              const std::vector<T>&, bool,     \
                                              Tape<T>*);                       \
  template Tensor<T> mix_pronunciation<T>(const Tensor<T>&, const Tensor<T>&,  \
                                          Tape<T>*);                           \
  template Tensor<T> apply_rules<T>(const Tensor<T>&,                          \
                                    const std::vector<std::string>&, size_t,   \
                                    const RuleSet&, std::optional<int>*);

DICTG2P_INSTANTIATE(float)
DICTG2P_INSTANTIATE(double)

#undef DICTG2P_INSTANTIATE

}  // namespace dictg2p
