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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dictg2p/corpus.h"
#include "dictg2p/dictionary.h"
#include "dictg2p/io_util.h"
#include "dictg2p/key_store.h"
#include "dictg2p/metrics.h"
#include "dictg2p/model.h"
#include "dictg2p/toy_language.h"

namespace fs = std::filesystem;
using namespace dictg2p;

namespace {

std::string find_dict_path(const std::string& corpus_dir) {
  if (fs::exists(corpus_dir + "/dict.bin")) return corpus_dir + "/dict.bin";
  if (fs::exists(corpus_dir + "/dict.txt")) return corpus_dir + "/dict.txt";
  throw FormatError("no dict.bin or dict.txt in " + corpus_dir);
}

template <typename T>
std::shared_ptr<const KeyStore<T>> make_key_store(const ModelConfig& cfg,
                                                  const Dictionary& dict,
                                                  const std::string& keys_path) {
  if (cfg.key_store_mode == KeyStoreMode::kImported) {
    if (keys_path.empty()) {
      throw ConfigError("imported key store mode needs a keys file");
    }
    return std::make_shared<const KeyStore<T>>(
        KeyStore<T>::imported(dict, keys_path));
  }
  return std::make_shared<const KeyStore<T>>(KeyStore<T>::trainable(
      dict, Vocab::characters_from(dict), cfg.encoder.d_model));
}

template <typename T>
struct LoadedModel {
  std::shared_ptr<const Dictionary> dict;
  std::shared_ptr<const KeyStore<T>> keys;
  std::unique_ptr<Model<T>> model;
};

template <typename T>
LoadedModel<T> load_model(const Checkpoint& ckpt, const std::string& dict_path,
                          const std::string& keys_path) {
  LoadedModel<T> out;
  out.dict = std::make_shared<const Dictionary>(load_dictionary_any(dict_path));
  std::istringstream is(ckpt.config_text);
  ModelConfig cfg = ModelConfig::parse(is);
  out.keys = make_key_store<T>(cfg, *out.dict, keys_path);
  out.model = std::make_unique<Model<T>>(
      Model<T>::from_checkpoint(ckpt, out.dict, out.keys));
  return out;
}

std::vector<std::vector<std::string>> gather_sentences(
    const std::string& text, const std::string& in_path) {
  std::vector<std::vector<std::string>> sentences;
  if (!text.empty()) {
    sentences.push_back(tokenize_text(text));
    return sentences;
  }
  std::ifstream is(in_path);
  if (!is) throw FormatError("cannot open: " + in_path);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    sentences.push_back(tokenize_text(line));
  }
  return sentences;
}

int cmd_build_dict(const std::string& in, const std::string& out, int u_max) {
  std::ifstream is(in);
  if (!is) throw FormatError("cannot open: " + in);
  ParseOptions opts;
  opts.u_max = u_max;
  Dictionary dict = parse_dictionary(is, opts);
  save_dictionary(dict, out);
  DictionaryStats stats = dictionary_stats(dict);
  std::cout << "characters: " << stats.size
            << "\npolyphones: " << stats.polyphone_count
            << "\nmax pronunciations: " << stats.max_pron_count
            << "\nmax gloss tokens: " << stats.max_gloss_tokens
            << "\nphoneme inventory: " << stats.phoneme_inventory_size
            << "\nsnapshot: " << out << "\n";
  return 0;
}

int cmd_gen_corpus(const ToyParams& params, int n, int n_heldout,
                   const std::string& out_dir) {
  ToyLanguageSpec spec = generate_spec(params);
  GeneratedCorpus corpus =
      generate_corpus(spec, n, n_heldout, params.seed ^ 0xC0A9ull);
  fs::create_directories(out_dir);
  write_corpus_dir(spec, corpus, out_dir);
  size_t poly_occurrences = 0;
  for (const auto& sent : corpus.train.sentences) {
    for (const auto& tok : sent.tokens) {
      if (spec.character(tok).polyphone) ++poly_occurrences;
    }
  }
  std::cout << "characters: " << spec.characters.size()
            << "\npolyphones: " << params.n_polyphones
            << "\nclasses: " << params.n_classes
            << "\ntrain sentences: " << corpus.train.sentences.size()
            << "\nheldout sentences: " << corpus.heldout.sentences.size()
            << "\ntrain polyphone occurrences: " << poly_occurrences
            << "\nwrote: " << out_dir << "\n";
  return 0;
}

template <typename T>
int run_train(ModelConfig cfg, const std::string& corpus_dir,
              const std::string& out_path, const std::string& metrics_path,
              std::optional<int64_t> steps_override) {
  auto dict = std::make_shared<const Dictionary>(
      load_dictionary_any(find_dict_path(corpus_dir)));
  auto keys = make_key_store<T>(cfg, *dict, corpus_dir + "/keys.dkey");
  Corpus train = load_corpus_split(corpus_dir, "train");
  Corpus heldout;
  const bool has_heldout = fs::exists(corpus_dir + "/heldout.txt");
  if (has_heldout) heldout = load_corpus_split(corpus_dir, "heldout");

  Model<T> model(cfg, dict, keys);
  AdamState<T> opt = AdamState<T>::init(model.params());

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path);
    if (!metrics) throw FormatError("cannot open: " + metrics_path);
  }
  const int64_t steps = steps_override.value_or(cfg.max_steps);
  TrainResult result =
      train_loop(model, opt, train, steps, has_heldout ? &heldout : nullptr,
                 metrics.is_open() ? &metrics : nullptr);
  if (result.diverged) {
    save_checkpoint(result.last_good, out_path);
    std::cerr << "training diverged: " << result.message
              << "\nlast good checkpoint written to " << out_path << "\n";
    return 3;
  }
  Checkpoint ckpt = make_checkpoint(model, &opt, result.history);
  save_checkpoint(ckpt, out_path);
  std::cout << "steps: " << model.step()
            << "\nfinal loss: " << result.history.back().loss << "\n";
  if (has_heldout && !heldout.sentences.empty() &&
      !heldout.sentences[0].labels.empty()) {
    std::cout << "heldout polyphone accuracy: "
              << eval_polyphone_accuracy(model, heldout) << "\n";
  }
  std::cout << "checkpoint: " << out_path << "\n";
  return 0;
}

template <typename T>
int run_g2p(const Checkpoint& ckpt, const std::string& dict_path,
            const std::string& keys_path, const std::string& text,
            const std::string& in_path, const std::string& rules_path,
            bool sample_gumbel, uint64_t seed, bool verbose) {
  LoadedModel<T> lm = load_model<T>(ckpt, dict_path, keys_path);
  RuleSet rules;
  if (!rules_path.empty()) rules = RuleSet::load(rules_path);
  Rng rng(seed);
  for (const auto& tokens : gather_sentences(text, in_path)) {
    auto inf = lm.model->infer(tokens, rules.empty() ? nullptr : &rules,
                               sample_gumbel, &rng);
    std::string out;
    for (const auto& pron : inf.pronunciations) {
      for (const auto& ph : pron.phoneme_tokens) {
        if (!out.empty()) out += ' ';
        out += ph;
      }
    }
    std::cout << out << "\n";
    if (verbose) {
      for (size_t i = 0; i < tokens.size(); ++i) {
        const CharDiag& d = inf.diag.chars[i];
        std::cerr << tokens[i] << " -> pron " << d.chosen;
        if (d.forced) std::cerr << " (rule-forced)";
        if (d.pron_count > 1) {
          std::cerr << " w=[";
          for (size_t j = 0; j < d.w.size(); ++j) {
            if (j > 0) std::cerr << ", ";
            std::cerr << d.w[j];
          }
          std::cerr << "]";
        }
        std::cerr << "\n";
      }
    }
  }
  return 0;
}

template <typename T>
int run_eval(const Checkpoint& ckpt, const std::string& corpus_dir,
             const std::string& split, const std::string& rules_path,
             const std::string& out_path) {
  LoadedModel<T> lm = load_model<T>(ckpt, find_dict_path(corpus_dir),
                                    corpus_dir + "/keys.dkey");
  Corpus corpus = load_corpus_split(corpus_dir, split);
  if (corpus.sentences.empty() || corpus.sentences[0].labels.empty()) {
    throw Error("eval needs a labels sidecar for split " + split);
  }
  RuleSet rules;
  if (!rules_path.empty()) rules = RuleSet::load(rules_path);
  const RuleSet* rules_ptr = rules.empty() ? nullptr : &rules;

  EvalReport report;
  std::vector<PhonemeSeq> predicted, reference;
  size_t poly_total = 0, poly_correct = 0, all_total = 0, all_correct = 0;
  for (const auto& sent : corpus.sentences) {
    auto inf = lm.model->infer(sent.tokens, rules_ptr);
    PhonemeSeq pred_seq, ref_seq;
    for (size_t i = 0; i < sent.tokens.size(); ++i) {
      const CharacterRecord& rec = lm.dict->lookup_or_unknown(sent.tokens[i]);
      const auto& pred_pron = rec.entries[inf.chosen[i]].pron.phoneme_tokens;
      const auto& ref_pron = rec.entries[sent.labels[i]].pron.phoneme_tokens;
      pred_seq.insert(pred_seq.end(), pred_pron.begin(), pred_pron.end());
      ref_seq.insert(ref_seq.end(), ref_pron.begin(), ref_pron.end());
      ++all_total;
      if (inf.chosen[i] == sent.labels[i]) ++all_correct;
      if (rec.pron_count() > 1) {
        ++poly_total;
        if (inf.chosen[i] == sent.labels[i]) ++poly_correct;
        report.confusions[sent.tokens[i]][{sent.labels[i], inf.chosen[i]}] += 1;
      }
    }
    predicted.push_back(std::move(pred_seq));
    reference.push_back(std::move(ref_seq));
  }
  report.per = per(predicted, reference);
  report.ser = ser(predicted, reference);
  report.sample_count = corpus.sentences.size();
  report.overall_accuracy =
      all_total == 0 ? -1.0 : static_cast<double>(all_correct) / all_total;
  report.polyphone_accuracy =
      poly_total == 0 ? -1.0 : static_cast<double>(poly_correct) / poly_total;

  const std::string json = report.to_json();
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw FormatError("cannot open: " + out_path);
    os << json << "\n";
  }
  std::cout << json << "\n";
  return 0;
}

template <typename T>
int run_export_attn(const Checkpoint& ckpt, const std::string& dict_path,
                    const std::string& keys_path, const std::string& text,
                    const std::string& in_path, const std::string& rules_path,
                    const std::string& out_path) {
  LoadedModel<T> lm = load_model<T>(ckpt, dict_path, keys_path);
  RuleSet rules;
  if (!rules_path.empty()) rules = RuleSet::load(rules_path);
  std::vector<SentenceDiag> diags;
  for (const auto& tokens : gather_sentences(text, in_path)) {
    auto inf = lm.model->infer(tokens, rules.empty() ? nullptr : &rules);
    diags.push_back(std::move(inf.diag));
  }
  export_attention(diags, out_path);
  std::cout << "wrote " << diags.size() << " sentences to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dictg2p: dictionary-grounded grapheme-to-phoneme engine"};
  app.require_subcommand(1);

  std::string dtype = "f32";
  bool deterministic = false;  // execution is always single-threaded

  // build-dict
  auto* build = app.add_subcommand("build-dict",
                                   "parse a text dictionary, write a snapshot");
  std::string bd_in, bd_out;
  int bd_umax = 64;
  build->add_option("--in", bd_in, "text dictionary (dictg2p-dict v1)")
      ->required();
  build->add_option("--out", bd_out, "binary snapshot path")->required();
  build->add_option("--u-max", bd_umax, "gloss token cap per pronunciation");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus",
                                 "generate a synthetic-language corpus");
  ToyParams gp;
  int gen_n = 5000, gen_heldout = 500;
  std::string gen_out;
  bool gen_no_punct = false;
  std::optional<uint64_t> gen_seed;
  gen->add_option("--chars", gp.n_chars, "character inventory size");
  gen->add_option("--polyphones", gp.n_polyphones, "polyphone count");
  gen->add_option("--classes", gp.n_classes, "context class count");
  gen->add_option("--n", gen_n, "training sentences");
  gen->add_option("--n-heldout", gen_heldout, "held-out sentences");
  gen->add_option("--d-model", gp.d_model, "class/key vector width");
  gen->add_option("--acoustic-dim", gp.acoustic_dim, "acoustic feature width");
  gen->add_option("--key-noise", gp.key_noise, "key vector noise stddev");
  gen->add_option("--target-noise", gp.target_noise, "target noise stddev");
  gen->add_option("--m-min", gp.m_min, "min pronunciations per polyphone");
  gen->add_option("--m-max", gp.m_max, "max pronunciations per polyphone");
  gen->add_option("--sent-min", gp.sent_min, "min sentence length");
  gen->add_option("--sent-max", gp.sent_max, "max sentence length");
  gen->add_option("--polyphone-rate", gp.polyphone_rate,
                  "polyphone placement probability");
  gen->add_flag("--no-punct", gen_no_punct, "omit the punctuation token");
  gen->add_option("--seed", gen_seed, "generation seed (required)");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train from a corpus directory");
  std::string tr_corpus, tr_out, tr_config, tr_metrics;
  std::optional<uint64_t> tr_seed;
  std::optional<int64_t> tr_steps;
  train->add_option("--corpus", tr_corpus, "corpus directory")->required();
  train->add_option("--out", tr_out, "checkpoint output path")->required();
  train->add_option("--config", tr_config, "key=value config file");
  train->add_option("--seed", tr_seed, "training seed (required)");
  train->add_option("--steps", tr_steps, "override max_steps");
  train->add_option("--metrics-log", tr_metrics, "metrics log path");
  train->add_option("--dtype", dtype, "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));
  train->add_flag("--deterministic", deterministic,
                  "single-threaded deterministic mode (always on)");

  // g2p
  auto* g2p = app.add_subcommand("g2p", "convert sentences to phonemes");
  std::string g_ckpt, g_dict, g_keys, g_text, g_in, g_rules;
  bool g_sample = false, g_verbose = false;
  uint64_t g_seed = 0;
  g2p->add_option("--ckpt", g_ckpt, "checkpoint path")->required();
  g2p->add_option("--dict", g_dict, "dictionary (text or snapshot)")
      ->required();
  g2p->add_option("--keys", g_keys, "DKEY file (imported key store mode)");
  g2p->add_option("--text", g_text, "one sentence");
  g2p->add_option("--in", g_in, "file with one sentence per line");
  g2p->add_option("--rules", g_rules, "expert rule file");
  g2p->add_flag("--sample-gumbel", g_sample,
                "sample pronunciations with Gumbel noise instead of argmax");
  g2p->add_option("--seed", g_seed, "noise seed for --sample-gumbel");
  g2p->add_flag("--verbose", g_verbose, "per-character weights on stderr");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate against corpus labels");
  std::string e_ckpt, e_corpus, e_split = "heldout", e_rules, e_out;
  eval->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
  eval->add_option("--corpus", e_corpus, "corpus directory")->required();
  eval->add_option("--split", e_split, "train or heldout");
  eval->add_option("--rules", e_rules, "expert rule file");
  eval->add_option("--out", e_out, "report JSON path");

  // export-attn
  auto* attn = app.add_subcommand("export-attn",
                                  "export S2PA attention matrices");
  std::string a_ckpt, a_dict, a_keys, a_text, a_in, a_rules, a_out;
  attn->add_option("--ckpt", a_ckpt, "checkpoint path")->required();
  attn->add_option("--dict", a_dict, "dictionary (text or snapshot)")
      ->required();
  attn->add_option("--keys", a_keys, "DKEY file (imported key store mode)");
  attn->add_option("--text", a_text, "one sentence");
  attn->add_option("--in", a_in, "file with one sentence per line");
  attn->add_option("--rules", a_rules, "expert rule file");
  attn->add_option("--out", a_out, "export path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build_dict(bd_in, bd_out, bd_umax);

    if (gen->parsed()) {
      if (!gen_seed.has_value()) {
        std::cerr << "gen-corpus: --seed is required\n";
        return 2;
      }
      gp.seed = *gen_seed;
      gp.include_punct = !gen_no_punct;
      return cmd_gen_corpus(gp, gen_n, gen_heldout, gen_out);
    }

    if (train->parsed()) {
      if (!tr_seed.has_value()) {
        std::cerr << "train: --seed is required\n";
        return 2;
      }
      ModelConfig cfg =
          tr_config.empty() ? ModelConfig{} : ModelConfig::load(tr_config);
      cfg.seed = *tr_seed;
      cfg.validate();
      if (dtype == "f64") {
        return run_train<double>(cfg, tr_corpus, tr_out, tr_metrics, tr_steps);
      }
      return run_train<float>(cfg, tr_corpus, tr_out, tr_metrics, tr_steps);
    }

    if (g2p->parsed()) {
      if (g_text.empty() == g_in.empty()) {
        std::cerr << "g2p: pass exactly one of --text or --in\n";
        return 2;
      }
      Checkpoint ckpt = load_checkpoint(g_ckpt);
      if (ckpt.dtype == "f64") {
        return run_g2p<double>(ckpt, g_dict, g_keys, g_text, g_in, g_rules,
                               g_sample, g_seed, g_verbose);
      }
      return run_g2p<float>(ckpt, g_dict, g_keys, g_text, g_in, g_rules,
                            g_sample, g_seed, g_verbose);
    }

    if (eval->parsed()) {
      Checkpoint ckpt = load_checkpoint(e_ckpt);
      if (ckpt.dtype == "f64") {
        return run_eval<double>(ckpt, e_corpus, e_split, e_rules, e_out);
      }
      return run_eval<float>(ckpt, e_corpus, e_split, e_rules, e_out);
    }

    if (attn->parsed()) {
      if (a_text.empty() == a_in.empty()) {
        std::cerr << "export-attn: pass exactly one of --text or --in\n";
        return 2;
      }
      Checkpoint ckpt = load_checkpoint(a_ckpt);
      if (ckpt.dtype == "f64") {
        return run_export_attn<double>(ckpt, a_dict, a_keys, a_text, a_in,
                                       a_rules, a_out);
      }
      return run_export_attn<float>(ckpt, a_dict, a_keys, a_text, a_in,
                                    a_rules, a_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
