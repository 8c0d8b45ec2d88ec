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

#include "negotiator/eval.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace negotiator {

namespace {

bool IsWordId(TokenId t) { return t >= kNumSpecialTokens || t == kUnkId; }

bool IsWordString(const std::string& w) { return !IsSpecial(w) || w == kUnk; }

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::pair<int, int> CountTurnsAndWords(std::span<const TokenId> tokens) {
  int turns = 0;
  int words = 0;
  int in_turn = 0;
  for (TokenId t : tokens) {
    if (t == kWriteId || t == kReadId || t == kChooseId) {
      if (in_turn > 0) ++turns;
      in_turn = 0;
    } else if (IsWordId(t)) {
      ++in_turn;
      ++words;
    }
  }
  if (in_turn > 0) ++turns;
  return {turns, words};
}

MetricsReport Aggregate(std::span<const DialogueResult> results) {
  MetricsReport r;
  r.n_dialogues = static_cast<int>(results.size());
  if (results.empty()) return r;
  long sum_a = 0, sum_b = 0, agreed = 0, pareto = 0, turns = 0, words = 0;
  for (const DialogueResult& d : results) {
    sum_a += d.reward_a;
    sum_b += d.reward_b;
    turns += d.turns;
    words += d.words;
    if (d.agreed) {
      ++agreed;
      if (d.pareto_optimal.value_or(false)) ++pareto;
    }
  }
  const double n = static_cast<double>(results.size());
  r.score_all_a = sum_a / n;
  r.score_all_b = sum_b / n;
  r.pct_agreed = 100.0 * agreed / n;
  if (agreed > 0) {
    r.score_agreed_a = static_cast<double>(sum_a) / agreed;
    r.score_agreed_b = static_cast<double>(sum_b) / agreed;
    r.pct_pareto = 100.0 * pareto / agreed;
  }
  r.avg_turns = turns / n;
  r.avg_words_per_turn = turns > 0 ? static_cast<double>(words) / turns : 0.0;
  return r;
}

std::vector<DialogueResult> PlayPairing(const AgentSpec& a, const AgentSpec& b,
                                        std::span<const Scenario> scenarios,
                                        const EvalOptions& opts) {
  if (scenarios.empty()) throw std::invalid_argument("no scenarios");
  if (!a.model || !b.model) throw std::invalid_argument("agent without model");
  const size_t per = opts.role_swap ? 2 : 1;
  const size_t total = scenarios.size() * per;
  std::vector<DialogueResult> results(total);

  auto play = [&](size_t i) {
    const Scenario& s = scenarios[i / per];
    const bool swapped = (i % per) == 1;
    const AgentSpec& first = swapped ? b : a;
    const AgentSpec& second = swapped ? a : b;
    const uint64_t seed = DeriveSeed(opts.seed, i);
    AgentSession sa(*first.model, MakeGoal(s.pool, s.valuation_a),
                    first.policy, DeriveSeed(seed, 0), opts.engine);
    AgentSession sb(*second.model, MakeGoal(s.pool, s.valuation_b),
                    second.policy, DeriveSeed(seed, 1), opts.engine);
    const Transcript t = RunDialogue(sa, sb, s, opts.engine);
    DialogueResult& d = results[i];
    d.reward_a = swapped ? t.outcome.reward_b : t.outcome.reward_a;
    d.reward_b = swapped ? t.outcome.reward_a : t.outcome.reward_b;
    d.agreed = t.outcome.agreed;
    if (t.outcome.agreed) {
      d.pareto_optimal = IsParetoOptimal(s, t.selection_a.take());
    }
    std::tie(d.turns, d.words) = CountTurnsAndWords(t.tokens);
  };

  const int threads = std::max(1, opts.threads);
  if (threads == 1) {
    for (size_t i = 0; i < total; ++i) play(i);
    return results;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < total; i = next++) {
        try {
          play(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

MetricsReport EvaluatePairing(const AgentSpec& a, const AgentSpec& b,
                              std::span<const Scenario> scenarios,
                              const EvalOptions& opts) {
  const std::vector<DialogueResult> results =
      PlayPairing(a, b, scenarios, opts);
  return Aggregate(results);
}

CorpusStatsReport CorpusStats(std::span<const TrainingExample> data) {
  if (data.empty()) throw std::invalid_argument("corpus stats: empty dataset");
  // Pair each line with its mirror when present.
  std::map<std::string, int> unpaired;
  std::vector<const TrainingExample*> dialogues;
  for (const TrainingExample& ex : data) {
    const std::string mirror = FormatRecord(FlipPerspective(ex));
    auto it = unpaired.find(mirror);
    if (it != unpaired.end() && it->second > 0) {
      if (--it->second == 0) unpaired.erase(it);
      continue;
    }
    ++unpaired[FormatRecord(ex)];
    dialogues.push_back(&ex);
  }

  CorpusStatsReport r;
  r.dialogues = static_cast<int>(dialogues.size());
  long turns = 0, words = 0, agreed = 0, pareto = 0;
  double points = 0.0;
  for (const TrainingExample* ex : dialogues) {
    int in_turn = 0;
    for (const std::string& w : ex->dialogue) {
      if (IsMarker(w) || w == kChoose) {
        if (in_turn > 0) ++turns;
        in_turn = 0;
      } else if (IsWordString(w)) {
        ++in_turn;
        ++words;
      }
    }
    if (in_turn > 0) ++turns;
    if (ex->output && ex->trainable_output) {
      ++agreed;
      Scenario s{GoalPool(ex->goal), GoalValuation(ex->goal),
                 GoalValuation(ex->partner_goal)};
      Allocation own{{(*ex->output)[0], (*ex->output)[1], (*ex->output)[2]}};
      Allocation other = Complement(s.pool, own);
      points += 0.5 * (Score(s.valuation_a, own) +
                       Score(s.valuation_b, other));
      if (IsParetoOptimal(s, own)) ++pareto;
    }
  }
  const double n = static_cast<double>(r.dialogues);
  r.avg_turns = turns / n;
  r.avg_words_per_turn = turns > 0 ? static_cast<double>(words) / turns : 0.0;
  r.pct_agreed = 100.0 * agreed / n;
  r.avg_score = points / n;
  if (agreed > 0) r.pct_pareto = 100.0 * pareto / agreed;
  return r;
}

void WriteMetricsTable(
    std::ostream& out,
    std::span<const std::pair<std::string, MetricsReport>> rows) {
  size_t width = 8;
  for (const auto& row : rows) width = std::max(width, row.first.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-16s  %8s  %16s  %6s\n",
                static_cast<int>(width), "Pairing", "Score (all)",
                "Score (agreed)", "% Agreed", "% Pareto Optimal", "N");
  out << buf;
  for (const auto& [label, r] : rows) {
    const std::string all =
        Fixed(r.score_all_a, 1) + " vs. " + Fixed(r.score_all_b, 1);
    const std::string agreed =
        r.pct_pareto ? Fixed(r.score_agreed_a, 1) + " vs. " +
                           Fixed(r.score_agreed_b, 1)
                     : std::string("-");
    const std::string pareto = r.pct_pareto ? Fixed(*r.pct_pareto, 1) + "%"
                                            : std::string("-");
    std::snprintf(buf, sizeof buf, "%-*s  %-13s  %-16s  %7s%%  %16s  %6d\n",
                  static_cast<int>(width), label.c_str(), all.c_str(),
                  agreed.c_str(), Fixed(r.pct_agreed, 1).c_str(),
                  pareto.c_str(), r.n_dialogues);
    out << buf;
  }
}

void WriteMetricsKeyValues(std::ostream& out, const std::string& prefix,
                           const MetricsReport& r) {
  auto kv = [&](const char* key, const std::string& value) {
    out << prefix << key << '=' << value << '\n';
  };
  kv("n_dialogues", std::to_string(r.n_dialogues));
  kv("score_all_a", Fixed(r.score_all_a, 4));
  kv("score_all_b", Fixed(r.score_all_b, 4));
  kv("score_agreed_a", Fixed(r.score_agreed_a, 4));
  kv("score_agreed_b", Fixed(r.score_agreed_b, 4));
  kv("pct_agreed", Fixed(r.pct_agreed, 2));
  kv("pct_pareto", r.pct_pareto ? Fixed(*r.pct_pareto, 2) : "-");
  kv("avg_turns", Fixed(r.avg_turns, 3));
  kv("avg_words_per_turn", Fixed(r.avg_words_per_turn, 3));
}

void WriteCorpusStats(std::ostream& out, const CorpusStatsReport& r) {
  out << "dialogues=" << r.dialogues << '\n'
      << "avg_turns=" << Fixed(r.avg_turns, 2) << '\n'
      << "avg_words_per_turn=" << Fixed(r.avg_words_per_turn, 2) << '\n'
      << "pct_agreed=" << Fixed(r.pct_agreed, 1) << '\n'
      << "avg_score=" << Fixed(r.avg_score, 2) << '\n'
      << "pct_pareto=" << (r.pct_pareto ? Fixed(*r.pct_pareto, 1) : "-")
      << '\n';
}

}  // namespace negotiator
