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

// Reference implementations used only by tests. Each is written from the
// definitions and shares no code path with the implementation it checks.

#ifndef NEGOTIATOR_TESTS_ORACLES_H_
#define NEGOTIATOR_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "negotiator/agents.h"
#include "negotiator/autodiff.h"
#include "negotiator/env.h"

namespace negotiator::oracle {

// Nested loops over every split; dominance checked pointwise.
inline bool BruteForcePareto(const Scenario& s, const Allocation& a) {
  const auto& c = s.pool.counts;
  auto points = [&](int b, int h, int l, const Valuation& v) {
    return b * v.values[0] + h * v.values[1] + l * v.values[2];
  };
  const int ra = points(a.take[0], a.take[1], a.take[2], s.valuation_a);
  const int rb = points(c[0] - a.take[0], c[1] - a.take[1], c[2] - a.take[2],
                        s.valuation_b);
  for (int b = 0; b <= c[0]; ++b) {
    for (int h = 0; h <= c[1]; ++h) {
      for (int l = 0; l <= c[2]; ++l) {
        const int xa = points(b, h, l, s.valuation_a);
        const int xb = points(c[0] - b, c[1] - h, c[2] - l, s.valuation_b);
        if (xa >= ra && xb >= rb && (xa > ra || xb > rb)) return false;
      }
    }
  }
  return true;
}

struct OracleChoice {
  std::optional<Allocation> take;  // nullopt is no agreement.
  double probability = 0.0;
};

// Argmax of the joint product, first maximum in (book, hat, ball) order.
inline OracleChoice BruteForceChoice(const ChoiceDistribution& d,
                                     const ItemPool& pool) {
  OracleChoice best;
  best.probability = -1.0;
  const auto& c = pool.counts;
  for (int b = 0; b <= c[0]; ++b) {
    for (int h = 0; h <= c[1]; ++h) {
      for (int l = 0; l <= c[2]; ++l) {
        const int own[3] = {b, h, l};
        double p = 1.0;
        for (int i = 0; i < 3; ++i) {
          const int other = c[i] - own[i];
          const double po = own[i] <= 4 ? d[i][own[i]] : 0.0;
          const double pp = other <= 4 ? d[3 + i][other] : 0.0;
          p *= po * pp;
        }
        if (p > best.probability) {
          best.probability = p;
          best.take = Allocation{{b, h, l}};
        }
      }
    }
  }
  double none = 1.0;
  for (int i = 0; i < 6; ++i) none *= d[i][5];
  if (none > best.probability) {
    best.take.reset();
    best.probability = none;
  }
  return best;
}

// GRU cell composed from primitive ops.
inline Var ComposedGru(const GruWeights& p, const Var& h, const Var& x) {
  auto affine = [](const Var& w, const Var& u, const Var& b, const Var& xi,
                   const Var& hi) {
    return Add(Add(MatVec(w, xi), MatVec(u, hi)), b);
  };
  const Var z = Sigmoid(affine(p.w_z, p.u_z, p.b_z, x, h));
  const Var r = Sigmoid(affine(p.w_r, p.u_r, p.b_r, x, h));
  const Var c = Tanh(affine(p.w_h, p.u_h, p.b_h, x, Mul(r, h)));
  const Var one_minus_z = Sub(Constant(Tensor(z.shape(), 1.0)), z);
  return Add(Mul(one_minus_z, h), Mul(z, c));
}

// Central difference of a scalar function of one tensor element.
inline double NumericDerivative(const std::function<double()>& f,
                                double& element, double eps = 1e-5) {
  const double saved = element;
  element = saved + eps;
  const double up = f();
  element = saved - eps;
  const double down = f();
  element = saved;
  return (up - down) / (2.0 * eps);
}

// A hand-built forward model whose sampler sees five tokens: both markers,
// <choose> and word ids 6 and 7.
// Every next-token distribution is a fixed function of the history length
// and last token, and the dialogue is forced to <choose> within a few turns,
// so the outcome tree is small enough to enumerate exhaustively.
class ToyModel : public ForwardModel {
 public:
  static constexpr int kVocab = 8;
  static constexpr TokenId kWordA = 6;
  static constexpr TokenId kWordB = 7;

  class State : public DialogueState {
   public:
    std::unique_ptr<DialogueState> Clone() const override {
      return std::make_unique<State>(*this);
    }
    void Append(TokenId t) override {
      history_.push_back(t);
      Recompute();
    }
    std::span<const double> NextLogProbs() const override { return next_; }
    ChoiceDistribution Choice() const override {
      ChoiceDistribution d{};
      int a = 0, b = 0;
      for (TokenId t : history_) {
        a += t == kWordA;
        b += t == kWordB;
      }
      // Own book count leans towards the number of A words; the partner's
      // towards the rest; no-agreement mass grows with B words.
      for (int i = 0; i < 6; ++i) {
        double total = 0.0;
        for (int c = 0; c < 6; ++c) {
          const int target = i < 3 ? std::min(a, 1) : 1 - std::min(a, 1);
          double w = c == target ? 3.0 + a : 1.0;
          if (c == 5) w = 0.5 + b;
          if (i % 3 != 0 && c == 0) w += 4.0;
          d[i][c] = w;
          total += w;
        }
        for (int c = 0; c < 6; ++c) d[i][c] /= total;
      }
      return d;
    }
    const std::vector<TokenId>& history() const override { return history_; }

    void Recompute() {
      // Words since the last marker.
      int run = 0;
      for (auto it = history_.rbegin(); it != history_.rend(); ++it) {
        if (*it < kNumSpecialTokens) break;
        ++run;
      }
      int markers = 0;
      for (TokenId t : history_) markers += t == kWriteId || t == kReadId;
      std::array<double, kVocab> w{};
      if (markers >= 3) {
        w[kChooseId] = 1.0;
      } else if (run >= 1) {
        // Close the turn or the dialogue.
        w[kWriteId] = 1.0;
        w[kReadId] = 1.0;
        w[kChooseId] = 1.0;
      } else {
        w[kWordA] = 2.0 + static_cast<double>(history_.size() % 2);
        w[kWordB] = 1.0;
        w[kChooseId] = 0.5;
      }
      w[kPadId] = 0.25;  // Never sampled through NeverSample().
      double total = 0.0;
      for (double v : w) total += v;
      for (int i = 0; i < kVocab; ++i) {
        next_[i] = w[i] > 0.0 ? std::log(w[i] / total) : -INFINITY;
      }
    }

   private:
    std::vector<TokenId> history_;
    std::array<double, kVocab> next_{};
    friend class ToyModel;
  };

  std::unique_ptr<DialogueState> Start(const Goal&) const override {
    auto s = std::make_unique<State>();
    s->Recompute();
    return s;
  }
  int vocab_size() const override { return kVocab; }
  std::vector<TokenId> NeverSample() const override { return {kPadId}; }
};

// Exact next-token probabilities under the sampler's masking and
// temperature, from the definition p_i ∝ exp(log p_i / T).
inline std::vector<double> MaskedTemperatureProbs(
    std::span<const double> log_probs, double temperature,
    const std::vector<TokenId>& masked) {
  std::vector<double> p(log_probs.size(), 0.0);
  double max_v = -INFINITY;
  for (size_t i = 0; i < p.size(); ++i) {
    if (std::find(masked.begin(), masked.end(), static_cast<TokenId>(i)) !=
            masked.end() ||
        !std::isfinite(log_probs[i])) {
      continue;
    }
    max_v = std::max(max_v, log_probs[i] / temperature);
  }
  double total = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    if (std::find(masked.begin(), masked.end(), static_cast<TokenId>(i)) !=
            masked.end() ||
        !std::isfinite(log_probs[i])) {
      continue;
    }
    p[i] = std::exp(log_probs[i] / temperature - max_v);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

// Exact expected value of one rollout sample from `state`: the partner
// speaks first, turns alternate, and the value at <choose> is the agent's
// points for its argmax output times that output's probability. Paths that
// exceed the turn cap or the length cap are worth zero.
inline double ExactRolloutValue(const DialogueState& state, const Goal& goal,
                                int turns_done, double temperature,
                                const EngineConfig& engine,
                                const RolloutConfig& rollout,
                                const std::vector<TokenId>& never) {
  const ItemPool pool{{goal[0], goal[2], goal[4]}};
  const Valuation values{{goal[1], goal[3], goal[5]}};
  std::function<double(const DialogueState&, int, bool, int)> expand =
      [&](const DialogueState& s, int turns, bool own, int in_turn) -> double {
    if (!s.history().empty() && s.history().back() == kChooseId) {
      const OracleChoice c = BruteForceChoice(s.Choice(), pool);
      if (!c.take) return 0.0;
      return Score(values, *c.take) * c.probability;
    }
    if (in_turn == 0 &&
        (turns >= engine.turn_cap ||
         static_cast<int>(s.history().size()) >= rollout.max_length)) {
      return 0.0;
    }
    std::vector<TokenId> masked = never;
    masked.push_back(own ? kWriteId : kReadId);
    const auto probs =
        MaskedTemperatureProbs(s.NextLogProbs(), temperature, masked);
    double value = 0.0;
    for (size_t t = 0; t < probs.size(); ++t) {
      if (probs[t] == 0.0) continue;
      auto next = s.Clone();
      next->Append(static_cast<TokenId>(t));
      const bool closes = static_cast<TokenId>(t) == (own ? kReadId : kWriteId);
      if (static_cast<TokenId>(t) == kChooseId) {
        value += probs[t] * expand(*next, turns + 1, own, 0);
      } else if (closes) {
        value += probs[t] * expand(*next, turns + 1, !own, 0);
      } else {
        value += probs[t] * expand(*next, turns, own, in_turn + 1);
      }
    }
    return value;
  };
  return expand(state, turns_done, false, 0);
}

}  // namespace negotiator::oracle

#endif  // NEGOTIATOR_TESTS_ORACLES_H_
