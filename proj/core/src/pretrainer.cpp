// Copyright 2026 The entlm Authors.
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

#include "entlm/pretrainer.h"

#include <cmath>

#include "entlm/error.h"

namespace entlm {
namespace {

LossTerm labeled_loss(Graph& g, Var vectors, std::span<const int> labels,
                      const std::function<Var(Var)>& logits_of) {
  if (vectors.value().rows() != labels.size()) {
    throw DimensionError("loss: " + std::to_string(vectors.value().rows()) +
                         " vectors but " + std::to_string(labels.size()) +
                         " labels");
  }
  std::vector<int> rows, targets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    rows.push_back(static_cast<int>(i));
    targets.push_back(labels[i]);
  }
  LossTerm term;
  term.count = static_cast<int>(rows.size());
  if (rows.empty()) {
    term.loss = g.constant(Tensor::scalar(0.0));
    return term;
  }
  term.skipped = false;
  Var logits = logits_of(gather_rows(vectors, rows));
  term.loss = cross_entropy(logits, targets, Reduction::kMean);
  return term;
}

bool has_prefix(const std::string& name, const std::string& prefix) {
  return name.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

LossTerm mlm_loss(Graph& g, Var word_vectors, std::span<const int> labels,
                  const MlmHead& head) {
  return labeled_loss(g, word_vectors, labels,
                      [&](Var h) { return head.logits(g, h); });
}

LossTerm mep_loss(Graph& g, Var entity_vectors, std::span<const int> labels,
                  const MepHead& head) {
  return labeled_loss(g, entity_vectors, labels,
                      [&](Var h) { return head.logits(g, h); });
}

std::vector<std::string> default_stage1_trainable() {
  return {"entity_embeddings.", "mep."};
}

void TrainConfig::validate() const {
  schedule.validate();
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ValidationError("train: adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0.0)) throw ValidationError("train: adam eps must be > 0");
  if (!(adam.weight_decay >= 0.0)) {
    throw ValidationError("train: weight_decay must be >= 0");
  }
  if (!(sampling_alpha > 0.0 && sampling_alpha <= 1.0)) {
    throw ValidationError("train: sampling alpha must be in (0, 1]");
  }
  if (!(max_grad_norm >= 0.0)) {
    throw ValidationError("train: max_grad_norm must be >= 0");
  }
  if (checkpoint_interval < 0 || log_interval < 0) {
    throw ValidationError("train: intervals must be >= 0");
  }
  try {
    masking.validate();
  } catch (const ContractError& e) {
    throw ValidationError(e.what());
  }
}

PretrainData PretrainData::from_documents(
    const std::vector<AnnotatedDocument>& docs, const WordVocab& words,
    const EntityVocab& entities, int max_positions,
    const SequenceOptions& options) {
  const int reserved = options.add_special_tokens ? 2 : 0;
  if (max_positions - reserved < 1) {
    throw ValidationError("pretrain data: max_positions too small");
  }
  PretrainData data;
  std::map<std::string, int> language_index;
  for (const auto& doc : docs) {
    auto [it, inserted] = language_index.emplace(
        doc.language, static_cast<int>(language_index.size()));
    if (inserted) data.languages.push_back(doc.language);
    for (const auto& piece : split_sequences(doc, max_positions - reserved)) {
      if (piece.tokens.empty()) continue;
      data.sequences.push_back(encode_document(piece, words, entities, options));
      data.language_of.push_back(it->second);
    }
  }
  return data;
}

std::vector<double> PretrainData::language_counts() const {
  std::vector<double> counts(languages.size(), 0.0);
  for (int l : language_of) counts[l] += 1.0;
  return counts;
}

// ---------------------------------------------------------------------------

namespace {

CategoricalSampler make_language_sampler(const PretrainData& data,
                                         double alpha) {
  if (data.sequences.empty()) {
    throw ValidationError("pretrain: no training sequences");
  }
  auto counts = data.language_counts();
  // Languages whose documents produced no sequences get probability 0.
  std::vector<double> present;
  for (double c : counts) {
    if (c > 0) present.push_back(c);
  }
  const auto p = language_distribution({present, alpha});
  std::vector<double> full(counts.size(), 0.0);
  for (std::size_t i = 0, k = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) full[i] = p[k++];
  }
  return CategoricalSampler(full);
}

}  // namespace

Pretrainer::Pretrainer(Model& model, const PretrainData& data,
                       TrainConfig config)
    : model_(model),
      data_(data),
      config_(std::move(config)),
      language_sampler_(
          (config_.validate(),
           make_language_sampler(data, config_.sampling_alpha))),
      optimizer_(config_.adam),
      master_(Rng::substream(config_.seed, "train")) {
  by_language_.resize(data.languages.size());
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    by_language_[data.language_of[i]].push_back(static_cast<int>(i));
  }
}

bool Pretrainer::trainable(const std::string& name) const {
  if (config_.schedule.stage_of(step_) == 1) return true;
  for (const auto& prefix : config_.stage1_trainable) {
    if (has_prefix(name, prefix)) return true;
  }
  return false;
}

void Pretrainer::restore(const Checkpoint& ckpt) {
  for (const auto& [name, t] : ckpt.tensors) {
    Parameter* p = model_.params.find(name);
    if (p == nullptr || p->value.shape() != t.shape()) {
      throw ValidationError("resume: checkpoint tensor '" + name +
                            "' does not match the model");
    }
    p->value = t;
  }
  optimizer_.slots() = ckpt.optimizer;
  step_ = ckpt.step;
  master_.set_state(ckpt.rng_state);
}

Checkpoint Pretrainer::checkpoint() const {
  Checkpoint ckpt = Checkpoint::from_model(model_);
  ckpt.optimizer = optimizer_.slots();
  ckpt.step = step_;
  ckpt.rng_state = master_.state();
  return ckpt;
}

StepResult Pretrainer::step() {
  if (done()) throw ContractError("pretrainer: schedule already finished");
  // The master stream advances only when the step commits.
  Rng saved = master_;
  try {
    StepResult r = run_batch(step_, true);
    ++step_;
    return r;
  } catch (...) {
    master_ = saved;
    throw;
  }
}

StepResult Pretrainer::evaluate_batch(std::int64_t step) {
  Rng saved = master_;
  StepResult r = run_batch(step, false);
  master_ = saved;
  return r;
}

StepResult Pretrainer::run_batch(std::int64_t step, bool update) {
  StepResult result;
  result.step = step;
  result.stage = config_.schedule.stage_of(step);
  result.lr = lr_at(step, config_.schedule);

  Encoder encoder(model_.config, model_.params);
  MlmHead mlm(model_.params);
  MepHead mep(model_.params);
  Rng dropout_rng(master_.next_u64());
  ForwardOptions fwd;
  fwd.training = true;
  fwd.dropout_rng = &dropout_rng;

  Graph g;
  std::vector<Var> word_rows, entity_rows;
  std::vector<int> word_labels, entity_labels;
  for (int b = 0; b < config_.batch_size; ++b) {
    const auto example =
        static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(config_.batch_size) +
        static_cast<std::uint64_t>(b);
    Rng pick = Rng::substream(config_.seed, "corpus", example);
    const auto& pool = by_language_[language_sampler_.sample(pick)];
    const int seq_id = pool[pick.uniform_int(pool.size())];
    Rng mask_rng = Rng::substream(config_.seed, "masking", example);
    const MaskedBatch masked = mask_batch(data_.sequences[seq_id], mask_rng,
                                          model_.config.word_vocab_size,
                                          config_.masking);
    EncoderVars out = encoder.forward(g, masked.input, fwd);

    std::vector<int> rows;
    for (std::size_t i = 0; i < masked.word_labels.size(); ++i) {
      if (masked.word_labels[i] == kIgnoreLabel) continue;
      rows.push_back(static_cast<int>(i));
      word_labels.push_back(masked.word_labels[i]);
    }
    if (!rows.empty()) word_rows.push_back(gather_rows(out.word_vectors, rows));
    rows.clear();
    for (std::size_t j = 0; j < masked.entity_labels.size(); ++j) {
      if (masked.entity_labels[j] == kIgnoreLabel) continue;
      rows.push_back(static_cast<int>(j));
      entity_labels.push_back(masked.entity_labels[j]);
    }
    if (!rows.empty()) entity_rows.push_back(gather_rows(out.entity_vectors, rows));
  }

  // Every gathered row is labeled, so the generic losses see no ignores.
  LossTerm mlm_term, mep_term;
  mlm_term.loss = mep_term.loss = g.constant(Tensor::scalar(0.0));
  if (!word_rows.empty()) {
    mlm_term = mlm_loss(g, concat_rows(word_rows), word_labels, mlm);
  }
  if (!entity_rows.empty()) {
    mep_term = mep_loss(g, concat_rows(entity_rows), entity_labels, mep);
  }
  Var total = add(mlm_term.loss, mep_term.loss);
  result.mlm_loss = mlm_term.loss.value().item();
  result.mep_loss = mep_term.loss.value().item();
  result.mlm_skipped = mlm_term.skipped;
  result.mep_skipped = mep_term.skipped;

  if (!std::isfinite(total.value().item())) {
    const auto where = g.first_non_finite();
    throw NumericError("pretrain: non-finite loss at step " +
                       std::to_string(step) +
                       (where ? " (first at " + *where + ")" : ""));
  }
  if (!update) return result;

  model_.params.zero_grad();
  g.backward(total);
  double norm_sq = 0.0;
  for (auto& [name, p] : model_.params) {
    if (!trainable(name)) continue;
    for (double v : p.grad.data()) norm_sq += v * v;
  }
  if (!std::isfinite(norm_sq)) {
    throw NumericError("pretrain: non-finite gradient at step " +
                       std::to_string(step));
  }
  if (config_.max_grad_norm > 0.0) {
    const double norm = std::sqrt(norm_sq);
    if (norm > config_.max_grad_norm) {
      const double s = config_.max_grad_norm / norm;
      for (auto& [_, p] : model_.params) {
        for (double& v : p.grad.data()) v *= s;
      }
    }
  }
  optimizer_.step(model_.params, result.lr,
                  [this](const std::string& name) { return trainable(name); });
  return result;
}

// ---------------------------------------------------------------------------

Checkpoint train(Model& model, const PretrainData& data,
                 const TrainConfig& config, const TrainOptions& options) {
  Pretrainer trainer(model, data, config);
  if (options.resume_from != nullptr) trainer.restore(*options.resume_from);
  const std::int64_t end = options.stop_after
                               ? std::min(*options.stop_after,
                                          config.schedule.total_steps)
                               : config.schedule.total_steps;
  auto snapshot = [&] {
    Checkpoint ckpt = trainer.checkpoint();
    ckpt.metadata = options.metadata;
    return ckpt;
  };
  if (options.log != nullptr && trainer.current_step() == 0) {
    *options.log << "step\tstage\tlr\tmlm_loss\tmep_loss\n";
  }
  while (trainer.current_step() < end) {
    const StepResult r = trainer.step();
    const std::int64_t done = trainer.current_step();
    if (options.log != nullptr && config.log_interval > 0 &&
        (done % config.log_interval == 0 || done == end)) {
      *options.log << r.step << '\t' << (r.stage + 1) << '\t' << r.lr << '\t'
                   << r.mlm_loss << '\t' << r.mep_loss << '\n';
    }
    if (options.checkpoint_path && config.checkpoint_interval > 0 &&
        done % config.checkpoint_interval == 0 && done != end) {
      snapshot().save(*options.checkpoint_path);
    }
  }
  Checkpoint final_ckpt = snapshot();
  if (options.checkpoint_path) final_ckpt.save(*options.checkpoint_path);
  return final_ckpt;
}

MepAccuracy mep_top1_accuracy(const Model& model,
                              const std::vector<EncodedSequence>& sequences) {
  auto& params = inference_params(model);
  Encoder encoder(model.config, params);
  MepHead head(params);
  MepAccuracy acc;
  for (const auto& seq : sequences) {
    for (std::size_t j = 0; j < seq.entity_count(); ++j) {
      const int gold = seq.entity_ids[j];
      if (gold < EntityVocab::kSpecialCount) continue;
      EncodedSequence input = seq;
      input.entity_ids[j] = EntityVocab::kMaskId;
      Graph g(false);
      EncoderVars out = encoder.forward(g, input);
      const int row = static_cast<int>(j);
      Var logits = head.logits(g, gather_rows(out.entity_vectors, {&row, 1}));
      const auto scores = logits.value().data();
      int best = 0;
      for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k] > scores[best]) best = static_cast<int>(k);
      }
      ++acc.total;
      if (best == gold) ++acc.correct;
    }
  }
  return acc;
}

}  // namespace entlm
