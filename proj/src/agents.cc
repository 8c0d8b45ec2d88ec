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

#include "negotiator/agents.h"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace negotiator {

namespace {

TokenId FlipMarkerId(TokenId t) {
  if (t == kWriteId) return kReadId;
  if (t == kReadId) return kWriteId;
  return t;
}

class ModelState : public DialogueState {
 public:
  ModelState(const NegotiationModel& model, const Goal& goal) : model_(&model) {
    NoGradGuard no_grad;
    goal_h_ = model.EncodeGoal(goal);
    LmStepResult step = model.Start(goal_h_);
    current_ = step.state;
    next_ = step.log_probs;
  }

  std::unique_ptr<DialogueState> Clone() const override {
    return std::make_unique<ModelState>(*this);
  }

  void Append(TokenId token) override {
    NoGradGuard no_grad;
    LmStepResult step = model_->Step(current_, token, goal_h_);
    current_ = step.state;
    next_ = step.log_probs;
    tokens_.push_back(token);
    states_.push_back(step.state.h);
  }

  std::span<const double> NextLogProbs() const override {
    return next_.value().values();
  }

  ChoiceDistribution Choice() const override {
    NoGradGuard no_grad;
    ChoicePrediction p = model_->PredictChoice(tokens_, states_, goal_h_);
    ChoiceDistribution d;
    for (int i = 0; i < kNumOutputFields; ++i) {
      for (int c = 0; c < kNumOutputClasses; ++c) {
        d[i][c] = std::exp(p.log_probs[i].value()[c]);
      }
    }
    return d;
  }

  const std::vector<TokenId>& history() const override { return tokens_; }

 private:
  const NegotiationModel* model_;
  Var goal_h_;
  LmState current_;
  Var next_;
  std::vector<TokenId> tokens_;
  std::vector<Var> states_;
};

bool EndsTurn(TokenId t, bool own) {
  return t == kChooseId || t == (own ? kReadId : kWriteId);
}

}  // namespace

std::unique_ptr<DialogueState> ModelForward::Start(const Goal& goal) const {
  return std::make_unique<ModelState>(*model_, goal);
}

std::vector<TokenId> ModelForward::NeverSample() const {
  return {kPadId, kNoAgreementId};
}

ChoiceResult ChooseFromDistribution(const ChoiceDistribution& dist,
                                    const ItemPool& pool) {
  ChoiceResult best;
  double best_p = -1.0;
  for (const Allocation& own : EnumerateAllocations(pool)) {
    const Allocation other = Complement(pool, own);
    double p = 1.0;
    for (int i = 0; i < kNumItemTypes; ++i) {
      if (own.take[i] > kMaxClassCount || other.take[i] > kMaxClassCount) {
        p = 0.0;
        break;
      }
      p *= dist[i][own.take[i]] * dist[kNumItemTypes + i][other.take[i]];
    }
    if (p > best_p) {
      best_p = p;
      best.selection = Selection::Claim(own);
      best.probability = p;
    }
  }
  double none = 1.0;
  for (int i = 0; i < kNumOutputFields; ++i) none *= dist[i][kNoAgreementClass];
  if (none > best_p) {
    best.selection = Selection::NoAgreement();
    best.probability = none;
  }
  return best;
}

Policy Policy::Parse(const std::string& text) {
  Policy p;
  if (text == "likelihood") return p;
  if (text == "rollout") {
    p.kind = PolicyKind::kRollout;
    return p;
  }
  const std::string prefix = "rollout:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string args = text.substr(prefix.size());
    const size_t comma = args.find(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("policy '" + text + "': expected rollout:C,S");
    }
    size_t used_c = 0;
    size_t used_s = 0;
    const std::string c = args.substr(0, comma);
    const std::string s = args.substr(comma + 1);
    try {
      p.rollout.candidates = std::stoi(c, &used_c);
      p.rollout.samples = std::stoi(s, &used_s);
    } catch (const std::exception&) {
      throw std::invalid_argument("policy '" + text + "': bad number");
    }
    if (used_c != c.size() || used_s != s.size() ||
        p.rollout.candidates < 1 || p.rollout.samples < 1) {
      throw std::invalid_argument("policy '" + text +
                                  "': C and S must be positive integers");
    }
    p.kind = PolicyKind::kRollout;
    return p;
  }
  throw std::invalid_argument("unknown policy '" + text + "'");
}

std::string Policy::ToString() const {
  if (kind == PolicyKind::kLikelihood) return "likelihood";
  return "rollout:" + std::to_string(rollout.candidates) + "," +
         std::to_string(rollout.samples);
}

uint64_t DeriveSeed(uint64_t master, uint64_t index) {
  // splitmix64 finalizer over a combination of both inputs.
  uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

WrittenTurn SampleTurn(DialogueState& state, bool own, double temperature,
                       int token_cap, std::span<const TokenId> never_sample,
                       std::mt19937_64& rng) {
  std::vector<TokenId> masked(never_sample.begin(), never_sample.end());
  masked.push_back(own ? kWriteId : kReadId);
  WrittenTurn turn;
  for (int n = 0; n < token_cap; ++n) {
    const TokenId t =
        SampleToken(state.NextLogProbs(), temperature, rng, masked);
    state.Append(t);
    turn.tokens.push_back(t);
    turn.forced.push_back(false);
    if (EndsTurn(t, own)) return turn;
  }
  const TokenId close = own ? kReadId : kWriteId;
  state.Append(close);
  turn.tokens.push_back(close);
  turn.forced.push_back(true);
  return turn;
}

double ScoreTerminal(const DialogueState& state, const Goal& goal) {
  const ChoiceResult c = ChooseFromDistribution(state.Choice(), GoalPool(goal));
  if (!c.selection.is_claim()) return 0.0;
  return Score(GoalValuation(goal), c.selection.take()) * c.probability;
}

double EstimateCandidate(const DialogueState& after_candidate,
                         const Goal& goal, int turns_done, int samples,
                         double temperature, const EngineConfig& engine,
                         const RolloutConfig& rollout,
                         std::span<const TokenId> never_sample,
                         std::mt19937_64& rng) {
  if (samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (!after_candidate.history().empty() &&
      after_candidate.history().back() == kChooseId) {
    return ScoreTerminal(after_candidate, goal);
  }
  std::vector<TokenId> sim_never;
  if (rollout.simulator) sim_never = rollout.simulator->NeverSample();
  double total = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::unique_ptr<DialogueState> state = after_candidate.Clone();
    // A distinct simulator keeps its own state over the same history.
    std::unique_ptr<DialogueState> sim;
    if (rollout.simulator) {
      sim = rollout.simulator->Start(goal);
      for (TokenId t : after_candidate.history()) sim->Append(t);
    }
    int turns = turns_done;
    bool own = false;
    bool finished = false;
    while (turns < engine.turn_cap &&
           static_cast<int>(state->history().size()) < rollout.max_length) {
      WrittenTurn w;
      if (!own && sim) {
        w = SampleTurn(*sim, false, temperature, engine.token_cap, sim_never,
                       rng);
        for (TokenId t : w.tokens) state->Append(t);
      } else {
        w = SampleTurn(*state, own, temperature, engine.token_cap,
                       never_sample, rng);
        if (sim) {
          for (TokenId t : w.tokens) sim->Append(t);
        }
      }
      ++turns;
      if (w.tokens.back() == kChooseId) {
        finished = true;
        break;
      }
      own = !own;
    }
    if (finished) total += ScoreTerminal(*state, goal);
  }
  return total / samples;
}

AgentSession::AgentSession(const ForwardModel& model, const Goal& goal,
                           Policy policy, uint64_t seed, EngineConfig engine)
    : model_(&model),
      goal_(goal),
      policy_(policy),
      engine_(engine),
      rng_(seed),
      state_(model.Start(goal)) {
  if (!(policy_.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  if (policy_.rollout.candidates < 1 || policy_.rollout.samples < 1) {
    throw std::invalid_argument("rollout C and S must be >= 1");
  }
}

void AgentSession::BeginOwnTurn(WrittenTurn& turn) {
  const auto& h = state_->history();
  if (h.empty() || h.back() != kWriteId) {
    state_->Append(kWriteId);
    turn.tokens.push_back(kWriteId);
    turn.forced.push_back(true);
  }
}

WrittenTurn AgentSession::WriteTurn() {
  return policy_.kind == PolicyKind::kRollout ? WriteTurnRollout()
                                              : WriteTurnLikelihood();
}

WrittenTurn AgentSession::WriteTurnLikelihood() {
  WrittenTurn turn;
  BeginOwnTurn(turn);
  WrittenTurn body = SampleTurn(*state_, true, policy_.temperature,
                                engine_.token_cap, model_->NeverSample(), rng_);
  turn.tokens.insert(turn.tokens.end(), body.tokens.begin(), body.tokens.end());
  turn.forced.insert(turn.forced.end(), body.forced.begin(), body.forced.end());
  ++turns_;
  return turn;
}

WrittenTurn AgentSession::WriteTurnRollout() {
  const int c_count = policy_.rollout.candidates;
  if (c_count == 1) return WriteTurnLikelihood();

  WrittenTurn turn;
  BeginOwnTurn(turn);
  const std::vector<TokenId> never = model_->NeverSample();
  last_plan_ = RolloutPlan{};
  std::unique_ptr<DialogueState> best_state;
  WrittenTurn best_body;
  double best_r = -1.0;
  for (int c = 0; c < c_count; ++c) {
    std::unique_ptr<DialogueState> cand = state_->Clone();
    WrittenTurn body = SampleTurn(*cand, true, policy_.temperature,
                                  engine_.token_cap, never, rng_);
    const double r = EstimateCandidate(
        *cand, goal_, turns_ + 1, policy_.rollout.samples, policy_.temperature,
        engine_, policy_.rollout, never, rng_);
    last_plan_.candidates.push_back(body.tokens);
    last_plan_.estimates.push_back(r);
    if (r > best_r) {
      best_r = r;
      best_state = std::move(cand);
      best_body = std::move(body);
      last_plan_.chosen = c;
    }
  }
  state_ = std::move(best_state);
  turn.tokens.insert(turn.tokens.end(), best_body.tokens.begin(),
                     best_body.tokens.end());
  turn.forced.insert(turn.forced.end(), best_body.forced.begin(),
                     best_body.forced.end());
  ++turns_;
  return turn;
}

void AgentSession::ReadTurn(std::span<const TokenId> tokens) {
  for (TokenId t : tokens) state_->Append(FlipMarkerId(t));
  ++turns_;
}

ChoiceResult AgentSession::Choose() const {
  return ChooseFromDistribution(state_->Choice(), GoalPool(goal_));
}

std::vector<TokenId> Transcript::Perspective(Speaker side) const {
  if (side == Speaker::kA) return tokens;
  std::vector<TokenId> out(tokens.size());
  std::transform(tokens.begin(), tokens.end(), out.begin(), FlipMarkerId);
  return out;
}

Transcript RunDialogue(AgentSession& a, AgentSession& b,
                       const Scenario& scenario, const EngineConfig& engine) {
  Transcript tr;
  tr.scenario = scenario;
  AgentSession* speaker = &a;
  AgentSession* listener = &b;
  bool a_speaks = true;
  for (int turn = 0; turn < engine.turn_cap; ++turn) {
    WrittenTurn w = speaker->WriteTurn();
    listener->ReadTurn(w.tokens);
    for (size_t i = 0; i < w.tokens.size(); ++i) {
      tr.tokens.push_back(a_speaks ? w.tokens[i] : FlipMarkerId(w.tokens[i]));
      tr.owners.push_back(w.forced[i] ? Owner::kEngine
                                      : (a_speaks ? Owner::kA : Owner::kB));
      tr.turn_of.push_back(turn);
    }
    ++tr.num_turns;
    if (w.tokens.back() == kChooseId) {
      tr.selection_a = a.Choose().selection;
      tr.selection_b = b.Choose().selection;
      tr.outcome = Resolve(scenario.pool, tr.selection_a, tr.selection_b,
                           scenario.valuation_a, scenario.valuation_b);
      return tr;
    }
    std::swap(speaker, listener);
    a_speaks = !a_speaks;
  }
  tr.forced_termination = true;
  tr.outcome = Resolve(scenario.pool, tr.selection_a, tr.selection_b,
                       scenario.valuation_a, scenario.valuation_b);
  return tr;
}

void DumpTranscript(std::ostream& out, const Transcript& t,
                    const Vocabulary& vocab) {
  TrainingExample ex;
  ex.goal = MakeGoal(t.scenario.pool, t.scenario.valuation_a);
  ex.partner_goal = MakeGoal(t.scenario.pool, t.scenario.valuation_b);
  ex.dialogue = Decode(vocab, t.tokens);
  if (t.forced_termination) ex.dialogue.emplace_back(kChoose);
  if (t.outcome.agreed) {
    const Allocation own = t.selection_a.take();
    const Allocation other = Complement(t.scenario.pool, own);
    Output o{};
    for (int i = 0; i < kNumItemTypes; ++i) {
      o[i] = own.take[i];
      o[kNumItemTypes + i] = other.take[i];
    }
    ex.output = o;
    ex.trainable_output = true;
  }
  out << FormatRecord(ex) << '\n' << FormatRecord(FlipPerspective(ex)) << '\n';
  out << "#outcome agreed=" << (t.outcome.agreed ? 1 : 0)
      << " ra=" << t.outcome.reward_a << " rb=" << t.outcome.reward_b
      << " pareto=";
  if (t.outcome.pareto_optimal) {
    out << (*t.outcome.pareto_optimal ? 1 : 0);
  } else {
    out << '-';
  }
  out << '\n';
}

}  // namespace negotiator
