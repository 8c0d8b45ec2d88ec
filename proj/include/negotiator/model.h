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

#ifndef NEGOTIATOR_MODEL_H_
#define NEGOTIATOR_MODEL_H_

// Goal-conditioned dialogue model.
//
// A goal encoder summarizes the six goal integers. A word-level recurrent
// language model reads the dialogue with the goal summary appended to every
// input embedding. An output head runs two recurrent passes over the
// dialogue, attends over positions, and predicts one class per output field:
// the item count (0..4) or the no-agreement class.

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "negotiator/autodiff.h"
#include "negotiator/corpus.h"
#include "negotiator/params.h"

namespace negotiator {

inline constexpr int kMaxGoalCount = 7;
// Counts 0..7 map to ids 0..7; values 0..10 map to ids 8..18.
inline constexpr int kNumGoalTokens = kMaxGoalCount + 1 + kMaxItemValue + 1;
inline constexpr int kMaxClassCount = 4;
inline constexpr int kNoAgreementClass = kMaxClassCount + 1;
inline constexpr int kNumOutputClasses = kMaxClassCount + 2;
inline constexpr int kNumOutputFields = 2 * kNumItemTypes;

struct ModelConfig {
  int goal_embed = 64;
  int word_embed = 256;
  int goal_hidden = 64;
  int lm_hidden = 128;
  int sel_hidden = 256;
  int summary = 256;
  int attention = 256;
  // 1: the summary attends over output-GRU states h^o_t instead of h_t.
  int attend_output = 0;

  // Reduced dimensions for single-core experiments.
  static ModelConfig Desk();

  // Throws std::invalid_argument on a non-positive dimension.
  void Validate() const;
  std::string ToString() const;
  static ModelConfig FromString(const std::string& line);
  bool operator==(const ModelConfig&) const = default;
};

int GoalToken(int field, int value);

// Six output-field classes; count fields above kMaxClassCount are not
// representable.
using OutputClasses = std::array<int, kNumOutputFields>;

struct EncodedExample {
  Goal goal{};
  std::vector<TokenId> tokens;
  std::optional<OutputClasses> output;  // Absent when not trainable.
};

EncodedExample EncodeExample(const Vocabulary& vocab,
                             const TrainingExample& ex);

// Recurrent state after consuming some prefix.
struct LmState {
  Var h;
};

struct LmStepResult {
  LmState state;     // Hidden state after reading the input token.
  Var log_probs;     // Next-token log-probabilities.
};

struct TeacherForced {
  Var goal_h;
  std::vector<Var> states;      // states[t] has read tokens[0..t].
  std::vector<Var> log_probs;   // log_probs[t] scores tokens[t].
};

struct ChoicePrediction {
  std::array<Var, kNumOutputFields> log_probs;
  Var attention;
};

class NegotiationModel {
 public:
  NegotiationModel(const ModelConfig& config, Vocabulary vocab);

  NegotiationModel(const NegotiationModel&) = delete;
  NegotiationModel& operator=(const NegotiationModel&) = delete;
  NegotiationModel(NegotiationModel&&) = default;
  NegotiationModel& operator=(NegotiationModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  int vocab_size() const { return vocab_.size(); }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  void InitUniform(double range, std::mt19937_64& rng);
  std::unique_ptr<NegotiationModel> Clone() const;

  // Throws std::invalid_argument on an out-of-range goal entry.
  Var EncodeGoal(const Goal& goal) const;
  // Reads the start token from the learned initial state.
  LmStepResult Start(const Var& goal_h) const;
  LmStepResult Step(const LmState& state, TokenId input,
                    const Var& goal_h) const;

  TeacherForced Forward(const Goal& goal,
                        std::span<const TokenId> tokens) const;
  // `states[t]` is the language-model state after reading `tokens[t]`.
  ChoicePrediction PredictChoice(std::span<const TokenId> tokens,
                                 std::span<const Var> states,
                                 const Var& goal_h) const;

  // Summed negative log-likelihood of every token.
  Var SequenceNll(const TeacherForced& f,
                  std::span<const TokenId> tokens) const;
  // Token NLL plus alpha times the output NLL when the output is trainable.
  // Throws std::invalid_argument if alpha < 0.
  Var TotalLoss(const EncodedExample& ex, double alpha) const;

  void Save(std::ostream& out) const;
  static NegotiationModel Load(std::istream& in);
  void SaveFile(const std::string& path) const;
  static NegotiationModel LoadFile(const std::string& path);

 private:
  Var Embed(TokenId token) const;

  ModelConfig config_;
  Vocabulary vocab_;
  ParamStore params_;

  Var goal_embed_;
  GruWeights goal_gru_;
  Var word_embed_;
  Var lm_h0_;
  GruWeights lm_gru_;
  Var lm_proj_;
  GruWeights sel_fwd_;
  GruWeights sel_bwd_;
  Var attn_inner_;
  Var attn_outer_;
  Var attn_score_;
  Var summary_;
  std::array<Var, kNumOutputFields> choice_;
};

// Samples from softmax(log_probs / temperature) over ids not in `masked`.
// Throws std::invalid_argument if temperature <= 0 or every id is masked.
TokenId SampleToken(std::span<const double> log_probs, double temperature,
                    std::mt19937_64& rng,
                    std::span<const TokenId> masked = {});
std::vector<double> TemperatureProbs(std::span<const double> log_probs,
                                     double temperature,
                                     std::span<const TokenId> masked = {});

struct PerplexityResult {
  double perplexity = 0.0;
  double nll = 0.0;
  long tokens = 0;
};

// exp of the mean token NLL over every token of every example.
PerplexityResult Perplexity(const NegotiationModel& model,
                            std::span<const EncodedExample> data);

}  // namespace negotiator

#endif  // NEGOTIATOR_MODEL_H_
