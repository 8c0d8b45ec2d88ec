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

#ifndef NEGOTIATOR_TRAIN_H_
#define NEGOTIATOR_TRAIN_H_

#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "negotiator/agents.h"
#include "negotiator/model.h"

namespace negotiator {

struct SupervisedConfig {
  int batch_size = 16;
  double learning_rate = 1.0;
  double momentum = 0.1;
  double clip = 0.5;
  int epochs = 30;
  double anneal_factor = 5.0;
  double alpha = 0.5;
  // Below about 0.2 the attention and output-encoder gradients vanish at
  // desk dimensions and the output head stays at the majority class.
  double init_range = 0.3;
  // Stops after the first epoch whose validation perplexity is below this.
  double stop_below_ppl = 0.0;

  void Validate() const;
};

struct RlConfig {
  double learning_rate = 0.1;
  double clip = 1.0;
  double gamma = 0.95;
  int interleave_period = 4;
  int sup_batch_size = 16;
  double sup_learning_rate = 0.5;
  double sup_clip = 1.0;
  double alpha = 0.5;
  double temperature = 0.5;
  int episodes = 4086;
  EngineConfig engine;

  void Validate() const;
};

// SGD with optional Nesterov momentum: v = m v + g, p -= lr (g + m v).
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);
  void Step(ParamStore& store);
  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }

 private:
  double learning_rate_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // Mean minibatch loss.
  double valid_ppl = 0.0;
  double learning_rate = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_valid_ppl = 0.0;
  bool operator==(const TrainReport&) const = default;
};

// One line per epoch: "epoch train_loss valid_ppl lr".
void WriteTrainReport(std::ostream& out, const TrainReport& r);

// Leaves the model holding the best-validation snapshot. Throws
// std::runtime_error naming the epoch and batch on a non-finite loss.
TrainReport TrainSupervised(NegotiationModel& model,
                            std::span<const EncodedExample> train,
                            std::span<const EncodedExample> valid,
                            const SupervisedConfig& cfg, std::mt19937_64& rng);

// Token NLL averaged over the batch's tokens plus alpha times the output NLL
// averaged over the batch's trainable output fields.
Var MinibatchLoss(const NegotiationModel& model,
                  std::span<const EncodedExample* const> batch, double alpha);

// One clipped optimizer step on MinibatchLoss. Returns the loss, or a
// non-finite value without stepping.
double SupervisedStep(NegotiationModel& model,
                      std::span<const EncodedExample* const> batch,
                      double alpha, double clip, SgdOptimizer& opt);

struct BaselineState {
  double mean = 0.0;
  long count = 0;
  void Update(double reward);
};

// R(x_t) = gamma^(T - t) (r - mean) for each position, using the mean before
// this episode; then folds r into the baseline.
std::vector<double> ComputeReturns(std::span<const int> positions, int last,
                                   double reward, BaselineState& baseline,
                                   double gamma);

// Descends -sum_t R_t log p(x_t | x_<t, g) over `positions` of `tokens`.
// Returns false, leaving parameters untouched, when `positions` is empty.
bool ReinforceUpdate(NegotiationModel& model, const Goal& goal,
                     std::span<const TokenId> tokens,
                     std::span<const int> positions,
                     std::span<const double> returns, double learning_rate,
                     double clip);
// The surrogate loss whose gradient ReinforceUpdate follows.
Var ReinforceSurrogate(const NegotiationModel& model, const Goal& goal,
                       std::span<const TokenId> tokens,
                       std::span<const int> positions,
                       std::span<const double> returns);

// True when RL update number n (1-based) is followed by a supervised update.
bool SupervisedUpdateDue(int n, int period);

struct EpisodeRecord {
  int reward = 0;          // Learner's reward.
  int partner_reward = 0;
  bool agreed = false;
  bool learner_first = true;
};

struct RlReport {
  std::vector<EpisodeRecord> episodes;
  int supervised_updates = 0;
  int skipped_updates = 0;  // Episodes with no learner tokens.
};

using ScenarioSource = std::function<Scenario(std::mt19937_64&)>;

// Self-play against a frozen partner; only `learner` changes. The learner
// speaks first on even episodes and second on odd ones.
RlReport TrainRl(NegotiationModel& learner, const NegotiationModel& partner,
                 const ScenarioSource& scenarios,
                 std::span<const EncodedExample> supervised,
                 const RlConfig& cfg, std::mt19937_64& rng,
                 const std::function<void(int, const RlReport&)>& progress =
                     nullptr);

}  // namespace negotiator

#endif  // NEGOTIATOR_TRAIN_H_
