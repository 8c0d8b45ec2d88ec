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

// Scripted template negotiators. Each agent opens with a demand meeting its
// target, accepts any offer meeting the current target, otherwise counters
// and concedes toward its floor, and walks away once its patience runs out.

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "negotiator/corpus.h"

namespace negotiator {
namespace {

constexpr std::array<const char*, 5> kNumberWords = {"zero", "one", "two",
                                                     "three", "four"};
constexpr std::array<const char*, 5> kOpeners = {
    "i want", "i need", "give me", "can i have", "how about i get"};
constexpr std::array<const char*, 3> kCounterPrefixes = {"", "no ,",
                                                         "that is not enough ,"};
constexpr std::array<const char*, 3> kSuffixes = {"", ", you get the rest",
                                                  "and you can have the rest"};
constexpr std::array<const char*, 4> kAccepts = {"deal", "ok deal",
                                                 "sounds good", "ok that works"};
constexpr std::array<const char*, 2> kWalkAways = {"no deal",
                                                   "sorry , no deal"};

template <typename Array>
const char* Pick(std::mt19937_64& rng, const Array& options) {
  std::uniform_int_distribution<size_t> d(0, options.size() - 1);
  return options[d(rng)];
}

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void AppendWords(std::vector<std::string>& out, std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) out.push_back(w);
}

std::string ItemPhrase(const Allocation& take) {
  std::vector<std::string> parts;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (take.take[i] == 0) continue;
    std::string item(kItemNames[i]);
    if (take.take[i] > 1) item += 's';
    parts.push_back(std::string(kNumberWords[std::min(take.take[i], 4)]) +
                    " " + item);
  }
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size()) ? " and " : " , ";
    out += parts[i];
  }
  return out;
}

struct ScriptedAgent {
  Valuation values;
  int target = 10;
  int floor = 0;
  int concession = 1;
  int patience = 4;
  int turns_taken = 0;
};

// The cheapest demand meeting the target, preferring fewer items.
Allocation Demand(std::mt19937_64& rng, const ItemPool& pool,
                  const ScriptedAgent& agent) {
  std::vector<Allocation> best;
  int best_score = kTotalValue + 1;
  int best_items = 0;
  for (const Allocation& a : EnumerateAllocations(pool)) {
    const int s = Score(agent.values, a);
    if (s < agent.target) continue;
    const int items = a.take[0] + a.take[1] + a.take[2];
    if (s < best_score || (s == best_score && items < best_items)) {
      best.clear();
      best_score = s;
      best_items = items;
    }
    if (s == best_score && items == best_items) best.push_back(a);
  }
  if (best.empty()) return Allocation{pool.counts};
  std::uniform_int_distribution<size_t> d(0, best.size() - 1);
  return best[d(rng)];
}

enum class Act { kPropose, kAccept, kWalkAway };

}  // namespace

std::vector<DialogueRecord> SynthCorpus(std::mt19937_64& rng, int n,
                                        const SynthStyle& style) {
  std::vector<DialogueRecord> records;
  records.reserve(std::max(n, 0));
  for (int d = 0; d < n; ++d) {
    DialogueRecord rec;
    rec.scenario = SampleScenario(rng, style.scenarios);
    const ItemPool& pool = rec.scenario.pool;
    std::array<ScriptedAgent, 2> agents;
    for (int p = 0; p < 2; ++p) {
      ScriptedAgent& a = agents[p];
      a.values = p == 0 ? rec.scenario.valuation_a : rec.scenario.valuation_b;
      a.target =
          UniformInt(rng, style.min_initial_target, style.max_initial_target);
      a.floor = UniformInt(rng, style.min_floor, style.max_floor);
      a.target = std::max(a.target, a.floor);
      a.concession =
          UniformInt(rng, style.min_concession, style.max_concession);
      a.patience = UniformInt(rng, style.min_patience, style.max_patience);
    }

    // The last proposal on the table, as the proposer's own take.
    std::optional<Allocation> on_table;
    Act last = Act::kPropose;
    int speaker = 0;
    while (true) {
      ScriptedAgent& me = agents[speaker];
      Turn turn;
      turn.speaker = speaker == 0 ? Speaker::kA : Speaker::kB;
      if (on_table && (last == Act::kAccept || last == Act::kWalkAway)) {
        turn.words.emplace_back(kChoose);
        rec.turns.push_back(std::move(turn));
        if (last == Act::kAccept) {
          // The closing speaker made the accepted proposal.
          const Allocation mine = *on_table;
          const Allocation theirs = Complement(pool, mine);
          rec.selection_a = Selection::Claim(speaker == 0 ? mine : theirs);
          rec.selection_b = Selection::Claim(speaker == 0 ? theirs : mine);
        }
        break;
      }

      std::optional<int> offered;
      if (on_table) offered = Score(me.values, Complement(pool, *on_table));
      ++me.turns_taken;

      if (offered && *offered >= me.target) {
        AppendWords(turn.words, Pick(rng, kAccepts));
        last = Act::kAccept;
      } else if (offered && me.turns_taken > me.patience) {
        if (*offered >= me.floor) {
          AppendWords(turn.words, Pick(rng, kAccepts));
          last = Act::kAccept;
        } else {
          AppendWords(turn.words, Pick(rng, kWalkAways));
          last = Act::kWalkAway;
        }
      } else {
        const Allocation demand = Demand(rng, pool, me);
        if (offered) AppendWords(turn.words, Pick(rng, kCounterPrefixes));
        AppendWords(turn.words, Pick(rng, kOpeners));
        AppendWords(turn.words, ItemPhrase(demand));
        if (demand != Allocation{pool.counts}) {
          AppendWords(turn.words, Pick(rng, kSuffixes));
        }
        on_table = demand;
        last = Act::kPropose;
        me.target = std::max(me.floor, me.target - me.concession);
      }
      rec.turns.push_back(std::move(turn));
      speaker = 1 - speaker;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace negotiator
