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

#ifndef NEGOTIATOR_EVAL_H_
#define NEGOTIATOR_EVAL_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "negotiator/agents.h"
#include "negotiator/corpus.h"
#include "negotiator/model.h"

namespace negotiator {

// One finished dialogue seen from the two evaluated policies, which may have
// played either side.
struct DialogueResult {
  int reward_a = 0;  // Policy a's points.
  int reward_b = 0;
  bool agreed = false;
  std::optional<bool> pareto_optimal;
  int turns = 0;  // Turns containing at least one word.
  int words = 0;
};

struct MetricsReport {
  double score_all_a = 0.0;
  double score_all_b = 0.0;
  double score_agreed_a = 0.0;
  double score_agreed_b = 0.0;
  double pct_agreed = 0.0;
  std::optional<double> pct_pareto;  // Absent without agreed dialogues.
  double avg_turns = 0.0;
  double avg_words_per_turn = 0.0;
  int n_dialogues = 0;
};

MetricsReport Aggregate(std::span<const DialogueResult> results);

// Counts word-bearing turns and words in a marker-delimited token sequence.
std::pair<int, int> CountTurnsAndWords(std::span<const TokenId> tokens);

struct AgentSpec {
  const ForwardModel* model = nullptr;
  Policy policy;
};

struct EvalOptions {
  bool role_swap = true;
  uint64_t seed = 0;
  EngineConfig engine;
  int threads = 1;
};

// Plays every scenario with a as the first speaker, and again with sides and
// valuations exchanged when role swapping. Dialogue i draws its agents' rng
// streams from DeriveSeed(seed, i), so results do not depend on `threads`.
std::vector<DialogueResult> PlayPairing(const AgentSpec& a, const AgentSpec& b,
                                        std::span<const Scenario> scenarios,
                                        const EvalOptions& opts);
MetricsReport EvaluatePairing(const AgentSpec& a, const AgentSpec& b,
                              std::span<const Scenario> scenarios,
                              const EvalOptions& opts);

struct CorpusStatsReport {
  int dialogues = 0;
  double avg_turns = 0.0;
  double avg_words_per_turn = 0.0;
  double pct_agreed = 0.0;
  double avg_score = 0.0;  // Both agents' points, failures as 0.
  std::optional<double> pct_pareto;
};

// Mirror-perspective lines of one dialogue are counted once. Throws
// std::invalid_argument on an empty dataset.
CorpusStatsReport CorpusStats(std::span<const TrainingExample> data);

// Aligned table with one row per labelled pairing.
void WriteMetricsTable(
    std::ostream& out,
    std::span<const std::pair<std::string, MetricsReport>> rows);
// "key=value" lines, prefixed with `prefix`.
void WriteMetricsKeyValues(std::ostream& out, const std::string& prefix,
                           const MetricsReport& r);
void WriteCorpusStats(std::ostream& out, const CorpusStatsReport& r);

}  // namespace negotiator

#endif  // NEGOTIATOR_EVAL_H_
