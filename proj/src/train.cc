// Copyright 2026 The Negotiator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "negotiator/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace negotiator {

void SupervisedConfig::Validate() const {
  if (batch_size < 1 || !(learning_rate > 0.0) || momentum < 0.0 ||
      !(clip > 0.0) || epochs < 1 || !(anneal_factor > 0.0) || alpha < 0.0 ||
      init_range < 0.0) {
    throw std::invalid_argument("supervised config: invalid value");
  }
}

void RlConfig::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("rl config: gamma must be in (0, 1]");
  }
  if (!(learning_rate > 0.0) || !(clip > 0.0) || interleave_period < 0 ||
      sup_batch_size < 1 || !(sup_learning_rate > 0.0) || !(sup_clip > 0.0) ||
      alpha < 0.0 || !(temperature > 0.0) || episodes < 0) {
    throw std::invalid_argument("rl config: invalid value");
  }
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : learning_rate_(learning_rate), momentum_(momentum) {}

void SgdOptimizer::Step(ParamStore& store) {
  const auto& params = store.params();
  if (momentum_ > 0.0 && velocity_.empty()) {
    for (const Var& p : params) velocity_.emplace_back(p.shape());
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Node* n = params[i].node();
    if (!n->has_grad) continue;
    double* value = n->value.data();
    const double* g = n->grad.data();
    const size_t size = n->value.size();
    if (momentum_ > 0.0) {
      double* v = velocity_[i].data();
      for (size_t j = 0; j < size; ++j) {
        v[j] = momentum_ * v[j] + g[j];
        value[j] -= learning_rate_ * (g[j] + momentum_ * v[j]);
      }
    } else {
      for (size_t j = 0; j < size; ++j) value[j] -= learning_rate_ * g[j];
    }
  }
}

void WriteTrainReport(std::ostream& out, const TrainReport& r) {
  char buf[128];
  for (const EpochRecord& e : r.epochs) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6g\n", e.epoch,
                  e.train_loss, e.valid_ppl, e.learning_rate);
    out << buf;
  }
}

Var MinibatchLoss(const NegotiationModel& model,
                  std::span<const EncodedExample* const> batch, double alpha) {
  if (batch.empty()) throw std::invalid_argument("empty minibatch");
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  std::vector<Var> token_terms;
  std::vector<Var> output_terms;
  size_t tokens = 0;
  for (const EncodedExample* ex : batch) {
    TeacherForced f = model.Forward(ex->goal, ex->tokens);
    token_terms.push_back(model.SequenceNll(f, ex->tokens));
    tokens += ex->tokens.size();
    if (ex->output && alpha > 0.0) {
      ChoicePrediction c = model.PredictChoice(ex->tokens, f.states, f.goal_h);
      for (int i = 0; i < kNumOutputFields; ++i) {
        output_terms.push_back(Pick(c.log_probs[i], (*ex->output)[i]));
      }
    }
  }
  Var loss = Scale(AddN(token_terms), 1.0 / static_cast<double>(tokens));
  if (output_terms.empty()) return loss;
  return Sub(loss, Scale(AddN(output_terms),
                         alpha / static_cast<double>(output_terms.size())));
}

double SupervisedStep(NegotiationModel& model,
                      std::span<const EncodedExample* const> batch,
                      double alpha, double clip, SgdOptimizer& opt) {
  model.params().ZeroGrad();
  Var loss = MinibatchLoss(model, batch, alpha);
  const double value = loss.item();
  if (!std::isfinite(value)) return value;
  Backward(loss);
  ClipGlobalNorm(model.params(), clip);
  opt.Step(model.params());
  return value;
}

TrainReport TrainSupervised(NegotiationModel& model,
                            std::span<const EncodedExample> train,
                            std::span<const EncodedExample> valid,
                            const SupervisedConfig& cfg,
                            std::mt19937_64& rng) {
  cfg.Validate();
  if (train.empty() || valid.empty()) {
    throw std::invalid_argument("train supervised: empty train or valid set");
  }
  SgdOptimizer opt(cfg.learning_rate, cfg.momentum);
  TrainReport report;
  ParamStore best = model.params().Clone();
  bool have_best = false;
  bool annealing = false;

  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<const EncodedExample*> batch;
      for (size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
      const double loss =
          SupervisedStep(model, batch, cfg.alpha, cfg.clip, opt);
      if (!std::isfinite(loss)) {
        throw std::runtime_error(
            "train supervised: non-finite loss at epoch " +
            std::to_string(epoch) + ", batch starting at example " +
            std::to_string(start));
      }
      loss_sum += loss;
      ++batches;
    }
    const double ppl = Perplexity(model, valid).perplexity;
    if (!std::isfinite(ppl)) {
      throw std::runtime_error("train supervised: non-finite validation "
                               "perplexity at epoch " +
                               std::to_string(epoch));
    }
    report.epochs.push_back(EpochRecord{
        epoch, loss_sum / batches, ppl,
        opt.learning_rate()});
    if (!have_best || ppl < report.best_valid_ppl) {
      have_best = true;
      report.best_valid_ppl = ppl;
      report.best_epoch = epoch;
      best.CopyValuesFrom(model.params());
    } else {
      annealing = true;
    }
    if (cfg.stop_below_ppl > 0.0 && ppl < cfg.stop_below_ppl) break;
    if (annealing) {
      opt.set_learning_rate(opt.learning_rate() / cfg.anneal_factor);
    }
  }
  model.params().CopyValuesFrom(best);
  return report;
}

void BaselineState::Update(double reward) {
  ++count;
  mean += (reward - mean) / static_cast<double>(count);
}

std::vector<double> ComputeReturns(std::span<const int> positions, int last,
                                   double reward, BaselineState& baseline,
                                   double gamma) {
  std::vector<double> out;
  out.reserve(positions.size());
  const double advantage = reward - baseline.mean;
  for (int t : positions) {
    if (t < 0 || t > last) {
      throw std::invalid_argument("return position outside the dialogue");
    }
    out.push_back(std::pow(gamma, last - t) * advantage);
  }
  baseline.Update(reward);
  return out;
}

Var ReinforceSurrogate(const NegotiationModel& model, const Goal& goal,
                       std::span<const TokenId> tokens,
                       std::span<const int> positions,
                       std::span<const double> returns) {
  if (positions.size() != returns.size()) {
    throw std::invalid_argument("reinforce: positions and returns differ");
  }
  if (positions.empty()) throw std::invalid_argument("reinforce: no tokens");
  TeacherForced f = model.Forward(goal, tokens);
  std::vector<Var> terms;
  terms.reserve(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    const int t = positions[i];
    terms.push_back(Scale(Pick(f.log_probs[t], tokens[t]), -returns[i]));
  }
  return AddN(terms);
}

bool ReinforceUpdate(NegotiationModel& model, const Goal& goal,
                     std::span<const TokenId> tokens,
                     std::span<const int> positions,
                     std::span<const double> returns, double learning_rate,
                     double clip) {
  if (positions.empty()) return false;
  model.params().ZeroGrad();
  Var loss = ReinforceSurrogate(model, goal, tokens, positions, returns);
  Backward(loss);
  ClipGlobalNorm(model.params(), clip);
  SgdOptimizer(learning_rate, 0.0).Step(model.params());
  return true;
}

bool SupervisedUpdateDue(int n, int period) {
  return period > 0 && n > 0 && n % period == 0;
}

RlReport TrainRl(NegotiationModel& learner, const NegotiationModel& partner,
                 const ScenarioSource& scenarios,
                 std::span<const EncodedExample> supervised,
                 const RlConfig& cfg, std::mt19937_64& rng,
                 const std::function<void(int, const RlReport&)>& progress) {
  cfg.Validate();
  if (cfg.interleave_period > 0 && supervised.empty()) {
    throw std::invalid_argument("train rl: interleaving needs supervised data");
  }
  ModelForward learner_fwd(learner);
  ModelForward partner_fwd(partner);
  Policy policy;
  policy.temperature = cfg.temperature;
  SgdOptimizer sup_opt(cfg.sup_learning_rate, 0.0);
  BaselineState baseline;
  RlReport report;
  int updates = 0;
  std::uniform_int_distribution<size_t> pick(
      0, supervised.empty() ? 0 : supervised.size() - 1);

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const Scenario s = scenarios(rng);
    const bool learner_first = episode % 2 == 0;
    const uint64_t seed_a = rng();
    const uint64_t seed_b = rng();
    const Goal goal_a = MakeGoal(s.pool, s.valuation_a);
    const Goal goal_b = MakeGoal(s.pool, s.valuation_b);
    AgentSession a(learner_first ? static_cast<const ForwardModel&>(learner_fwd)
                                 : partner_fwd,
                   goal_a, policy, seed_a, cfg.engine);
    AgentSession b(learner_first ? static_cast<const ForwardModel&>(partner_fwd)
                                 : learner_fwd,
                   goal_b, policy, seed_b, cfg.engine);
    const Transcript tr = RunDialogue(a, b, s, cfg.engine);

    const Speaker side = learner_first ? Speaker::kA : Speaker::kB;
    const Owner mine = learner_first ? Owner::kA : Owner::kB;
    const std::vector<TokenId> tokens = tr.Perspective(side);
    std::vector<int> positions;
    for (size_t t = 0; t < tokens.size(); ++t) {
      if (tr.owners[t] == mine) positions.push_back(static_cast<int>(t));
    }
    const int reward =
        learner_first ? tr.outcome.reward_a : tr.outcome.reward_b;
    const int partner_reward =
        learner_first ? tr.outcome.reward_b : tr.outcome.reward_a;
    report.episodes.push_back(
        EpisodeRecord{reward, partner_reward, tr.outcome.agreed, learner_first});

    const std::vector<double> returns =
        ComputeReturns(positions, static_cast<int>(tokens.size()) - 1, reward,
                       baseline, cfg.gamma);
    if (!ReinforceUpdate(learner, learner_first ? goal_a : goal_b, tokens,
                         positions, returns, cfg.learning_rate, cfg.clip)) {
      ++report.skipped_updates;
    } else {
      ++updates;
      if (SupervisedUpdateDue(updates, cfg.interleave_period)) {
        std::vector<const EncodedExample*> batch;
        for (int i = 0; i < cfg.sup_batch_size; ++i) {
          batch.push_back(&supervised[pick(rng)]);
        }
        SupervisedStep(learner, batch, cfg.alpha, cfg.sup_clip, sup_opt);
        ++report.supervised_updates;
      }
    }
    if (progress) progress(episode + 1, report);
  }
  return report;
}

}  // namespace negotiator
