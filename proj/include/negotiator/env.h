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

#ifndef NEGOTIATOR_ENV_H_
#define NEGOTIATOR_ENV_H_

// The bargaining game: three item types, two agents with private per-item
// values, and a split that is only paid out when both agents declare the same
// division.

#include <array>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace negotiator {

inline constexpr int kNumItemTypes = 3;
inline constexpr int kTotalValue = 10;
inline constexpr int kMaxItemValue = 10;
inline constexpr int kMaxPoolItems = 7;
inline constexpr std::array<std::string_view, kNumItemTypes> kItemNames = {
    "book", "hat", "ball"};

using Counts = std::array<int, kNumItemTypes>;

struct ItemPool {
  Counts counts{};
  int Total() const { return counts[0] + counts[1] + counts[2]; }
  bool operator==(const ItemPool&) const = default;
};

struct Valuation {
  Counts values{};
  bool operator==(const Valuation&) const = default;
};

struct Allocation {
  Counts take{};
  bool operator==(const Allocation&) const = default;
  auto operator<=>(const Allocation&) const = default;
};

struct Scenario {
  ItemPool pool;
  Valuation valuation_a;
  Valuation valuation_b;
  bool operator==(const Scenario&) const = default;
};

// Either a claimed allocation for the declaring agent or no agreement.
class Selection {
 public:
  static Selection Claim(Allocation take) { return Selection(take); }
  static Selection NoAgreement() { return Selection(); }

  bool is_claim() const { return take_.has_value(); }
  const Allocation& take() const { return take_.value(); }
  bool operator==(const Selection&) const = default;

 private:
  Selection() = default;
  explicit Selection(Allocation take) : take_(take) {}
  std::optional<Allocation> take_;
};

struct DealOutcome {
  bool agreed = false;
  int reward_a = 0;
  int reward_b = 0;
  std::optional<bool> pareto_optimal;  // Only set for agreed deals.
  bool operator==(const DealOutcome&) const = default;
};

enum class Violation {
  kNegativeField,
  kValuationATotal,
  kValuationBTotal,
  kItemValuedByNoOne,
  kNoItemValuedByBoth,
  kValueOutOfRange,
};

std::string ViolationToString(Violation v);

// Reports every failed scenario constraint; an empty result means valid.
std::vector<Violation> ValidateScenario(const Scenario& s);

struct ScenarioGeneratorConfig {
  int min_total = 5;
  int max_total = 7;
  int min_per_type = 1;
  int max_per_type = 4;
  int attempt_budget = 10000;
};

// Rejection sampler: uniform pool within the bounds, then each valuation
// uniformly among those totalling 10 against the pool; rejects scenarios
// failing the "valued by someone" / "valued by both" constraints. Throws
// std::runtime_error once the attempt budget is spent.
Scenario SampleScenario(std::mt19937_64& rng,
                        const ScenarioGeneratorConfig& cfg = {});

// All valuations with dot(counts, values) == 10, lexicographic order.
std::vector<Valuation> EnumerateValuations(const ItemPool& pool);

// Every take with 0 <= take[i] <= counts[i], lexicographic order.
std::vector<Allocation> EnumerateAllocations(const ItemPool& pool);

Allocation Complement(const ItemPool& pool, const Allocation& a);
bool IsFeasible(const ItemPool& pool, const Allocation& a);

int Score(const Valuation& v, const Allocation& a);

DealOutcome Resolve(const ItemPool& pool, const Selection& sel_a,
                    const Selection& sel_b, const Valuation& val_a,
                    const Valuation& val_b);

// True iff no feasible split gives one agent strictly more points and the
// other no fewer. Agent B holds the complement of alloc_a.
bool IsParetoOptimal(const Scenario& s, const Allocation& alloc_a);

// "c1 va1 c2 va2 c3 va3 | vb1 vb2 vb3"
std::string FormatScenario(const Scenario& s);
Scenario ParseScenario(std::string_view line);

std::string FormatCounts(const Counts& c);

}  // namespace negotiator

#endif  // NEGOTIATOR_ENV_H_
