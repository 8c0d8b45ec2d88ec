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

#ifndef NEGOTIATOR_AGENTS_H_
#define NEGOTIATOR_AGENTS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "negotiator/corpus.h"
#include "negotiator/env.h"
#include "negotiator/model.h"

namespace negotiator {

// Per-field probabilities over the output classes (counts 0..4, then
// no-agreement).
using ChoiceDistribution =
    std::array<std::array<double, kNumOutputClasses>, kNumOutputFields>;

// One agent's view of a dialogue under some forward model. History tokens are
// in the agent's own perspective.
class DialogueState {
 public:
  virtual ~DialogueState() = default;
  virtual std::unique_ptr<DialogueState> Clone() const = 0;
  virtual void Append(TokenId token) = 0;
  // Log-probabilities of the next token given the history.
  virtual std::span<const double> NextLogProbs() const = 0;
  virtual ChoiceDistribution Choice() const = 0;
  virtual const std::vector<TokenId>& history() const = 0;
};

class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual std::unique_ptr<DialogueState> Start(const Goal& goal) const = 0;
  virtual int vocab_size() const = 0;
  // Ids that are never sampled, on top of the per-turn marker mask.
  virtual std::vector<TokenId> NeverSample() const { return {}; }
};

// Adapts a NegotiationModel. The model must outlive every state; states read
// the current parameter values, so they see later training updates.
class ModelForward : public ForwardModel {
 public:
  explicit ModelForward(const NegotiationModel& model) : model_(&model) {}
  std::unique_ptr<DialogueState> Start(const Goal& goal) const override;
  int vocab_size() const override { return model_->vocab_size(); }
  std::vector<TokenId> NeverSample() const override;
  const NegotiationModel& model() const { return *model_; }

 private:
  const NegotiationModel* model_;
};

struct ChoiceResult {
  Selection selection = Selection::NoAgreement();
  double probability = 0.0;  // Joint probability of the returned output.
};

// Argmax over feasible outputs of the product of per-field probabilities.
// The first maximum in enumeration order wins; no-agreement wins only when
// its product is strictly larger than every feasible product.
ChoiceResult ChooseFromDistribution(const ChoiceDistribution& dist,
                                    const ItemPool& pool);

struct EngineConfig {
  int turn_cap = 20;
  int token_cap = 100;
};

struct RolloutConfig {
  int candidates = 10;
  int samples = 5;
  int max_length = 400;
  // Samples the partner's simulated turns; the agent's own model when null.
  const ForwardModel* simulator = nullptr;
};

enum class PolicyKind { kLikelihood, kRollout };

struct Policy {
  PolicyKind kind = PolicyKind::kLikelihood;
  RolloutConfig rollout;
  double temperature = 0.5;

  // "likelihood", "rollout" or "rollout:C,S".
  static Policy Parse(const std::string& text);
  std::string ToString() const;
};

struct WrittenTurn {
  std::vector<TokenId> tokens;
  std::vector<bool> forced;  // Emitted by the engine rather than sampled.
};

struct RolloutPlan {
  std::vector<std::vector<TokenId>> candidates;
  std::vector<double> estimates;
  int chosen = -1;
};

// Mixes a master seed and an index into an independent stream seed.
uint64_t DeriveSeed(uint64_t master, uint64_t index);

class AgentSession {
 public:
  AgentSession(const ForwardModel& model, const Goal& goal, Policy policy,
               uint64_t seed, EngineConfig engine = {});

  WrittenTurn WriteTurn();
  WrittenTurn WriteTurnLikelihood();
  WrittenTurn WriteTurnRollout();
  // `tokens` is the partner's turn in the partner's perspective.
  void ReadTurn(std::span<const TokenId> tokens);

  ChoiceResult Choose() const;

  const Goal& goal() const { return goal_; }
  const Policy& policy() const { return policy_; }
  const std::vector<TokenId>& history() const { return state_->history(); }
  const DialogueState& state() const { return *state_; }
  int turns() const { return turns_; }
  const RolloutPlan& last_plan() const { return last_plan_; }

 private:
  void BeginOwnTurn(WrittenTurn& turn);

  const ForwardModel* model_;
  Goal goal_;
  Policy policy_;
  EngineConfig engine_;
  std::mt19937_64 rng_;
  std::unique_ptr<DialogueState> state_;
  int turns_ = 0;
  RolloutPlan last_plan_;
};

// Samples one turn into `state`, which must already end with the turn's
// start marker (or be empty for the opening turn of the dialogue). `own`
// selects the marker mask: own turns stop on read:, simulated partner turns
// stop on write:. A turn that reaches `token_cap` sampled tokens is closed
// with the stop marker, recorded as forced.
WrittenTurn SampleTurn(DialogueState& state, bool own, double temperature,
                       int token_cap, std::span<const TokenId> never_sample,
                       std::mt19937_64& rng);

// Reward times joint probability of the argmax output at the end of the
// dialogue in `state`. Zero for no-agreement.
double ScoreTerminal(const DialogueState& state, const Goal& goal);

// Simulates `samples` continuations from `after_candidate` (which ends with
// read: or <choose>) and returns the mean of ScoreTerminal over them.
// `turns_done` counts turns including the candidate; continuations that
// would pass the turn cap or `max_length` tokens score zero.
double EstimateCandidate(const DialogueState& after_candidate,
                         const Goal& goal, int turns_done, int samples,
                         double temperature, const EngineConfig& engine,
                         const RolloutConfig& rollout,
                         std::span<const TokenId> never_sample,
                         std::mt19937_64& rng);

enum class Owner { kA, kB, kEngine };

struct Transcript {
  Scenario scenario;
  std::vector<TokenId> tokens;  // Agent A's perspective.
  std::vector<Owner> owners;
  std::vector<int> turn_of;     // Turn index of each token.
  int num_turns = 0;
  bool forced_termination = false;
  Selection selection_a = Selection::NoAgreement();
  Selection selection_b = Selection::NoAgreement();
  DealOutcome outcome;

  // Tokens in the given side's perspective.
  std::vector<TokenId> Perspective(Speaker side) const;
};

// Runs turns until <choose> or the turn cap. A speaks first.
Transcript RunDialogue(AgentSession& a, AgentSession& b,
                       const Scenario& scenario,
                       const EngineConfig& engine = {});

// Two corpus-format perspective lines and an "#outcome" trailer.
void DumpTranscript(std::ostream& out, const Transcript& t,
                    const Vocabulary& vocab);

}  // namespace negotiator

#endif  // NEGOTIATOR_AGENTS_H_
