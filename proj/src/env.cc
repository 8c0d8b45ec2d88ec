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

#include "negotiator/env.h"

#include <sstream>
#include <stdexcept>

namespace negotiator {

std::string ViolationToString(Violation v) {
  switch (v) {
    case Violation::kNegativeField:
      return "negative count or value";
    case Violation::kValuationATotal:
      return "valuation a does not total 10";
    case Violation::kValuationBTotal:
      return "valuation b does not total 10";
    case Violation::kItemValuedByNoOne:
      return "an item type is valued by no one";
    case Violation::kNoItemValuedByBoth:
      return "no item type is valued by both agents";
    case Violation::kValueOutOfRange:
      return "value exceeds 10";
  }
  return "unknown";
}

namespace {

int Dot(const Counts& a, const Counts& b) {
  int total = 0;
  for (int i = 0; i < kNumItemTypes; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

std::vector<Violation> ValidateScenario(const Scenario& s) {
  std::vector<Violation> out;
  const Counts& c = s.pool.counts;
  const Counts& va = s.valuation_a.values;
  const Counts& vb = s.valuation_b.values;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (c[i] < 0 || va[i] < 0 || vb[i] < 0) {
      out.push_back(Violation::kNegativeField);
      break;
    }
  }
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (va[i] > kMaxItemValue || vb[i] > kMaxItemValue) {
      out.push_back(Violation::kValueOutOfRange);
      break;
    }
  }
  if (Dot(c, va) != kTotalValue) out.push_back(Violation::kValuationATotal);
  if (Dot(c, vb) != kTotalValue) out.push_back(Violation::kValuationBTotal);
  bool some_unvalued = false;
  bool some_shared = false;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (va[i] == 0 && vb[i] == 0) some_unvalued = true;
    if (va[i] > 0 && vb[i] > 0) some_shared = true;
  }
  if (some_unvalued) out.push_back(Violation::kItemValuedByNoOne);
  if (!some_shared) out.push_back(Violation::kNoItemValuedByBoth);
  return out;
}

std::vector<Valuation> EnumerateValuations(const ItemPool& pool) {
  std::vector<Valuation> out;
  const Counts& c = pool.counts;
  for (int v0 = 0; v0 <= kMaxItemValue; ++v0) {
    for (int v1 = 0; v1 <= kMaxItemValue; ++v1) {
      for (int v2 = 0; v2 <= kMaxItemValue; ++v2) {
        if (c[0] * v0 + c[1] * v1 + c[2] * v2 == kTotalValue) {
          out.push_back(Valuation{{v0, v1, v2}});
        }
      }
    }
  }
  return out;
}

Scenario SampleScenario(std::mt19937_64& rng,
                        const ScenarioGeneratorConfig& cfg) {
  if (cfg.min_per_type > cfg.max_per_type || cfg.max_per_type < 0) {
    throw std::invalid_argument("scenario generator: empty per-type range");
  }
  std::uniform_int_distribution<int> count_dist(cfg.min_per_type,
                                                cfg.max_per_type);
  for (int attempt = 0; attempt < cfg.attempt_budget; ++attempt) {
    ItemPool pool;
    for (int& c : pool.counts) c = count_dist(rng);
    const int total = pool.Total();
    if (total < cfg.min_total || total > cfg.max_total) continue;
    const std::vector<Valuation> vals = EnumerateValuations(pool);
    if (vals.empty()) continue;
    std::uniform_int_distribution<size_t> pick(0, vals.size() - 1);
    Scenario s{pool, vals[pick(rng)], vals[pick(rng)]};
    if (ValidateScenario(s).empty()) return s;
  }
  throw std::runtime_error(
      "scenario generator: no valid scenario within the attempt budget of " +
      std::to_string(cfg.attempt_budget));
}

std::vector<Allocation> EnumerateAllocations(const ItemPool& pool) {
  std::vector<Allocation> out;
  const Counts& c = pool.counts;
  out.reserve((c[0] + 1) * (c[1] + 1) * (c[2] + 1));
  for (int a = 0; a <= c[0]; ++a) {
    for (int b = 0; b <= c[1]; ++b) {
      for (int d = 0; d <= c[2]; ++d) out.push_back(Allocation{{a, b, d}});
    }
  }
  return out;
}

Allocation Complement(const ItemPool& pool, const Allocation& a) {
  Allocation out;
  for (int i = 0; i < kNumItemTypes; ++i) {
    out.take[i] = pool.counts[i] - a.take[i];
  }
  return out;
}

bool IsFeasible(const ItemPool& pool, const Allocation& a) {
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (a.take[i] < 0 || a.take[i] > pool.counts[i]) return false;
  }
  return true;
}

int Score(const Valuation& v, const Allocation& a) {
  return Dot(v.values, a.take);
}

DealOutcome Resolve(const ItemPool& pool, const Selection& sel_a,
                    const Selection& sel_b, const Valuation& val_a,
                    const Valuation& val_b) {
  DealOutcome out;
  if (!sel_a.is_claim() || !sel_b.is_claim()) return out;
  const Allocation& ta = sel_a.take();
  const Allocation& tb = sel_b.take();
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (ta.take[i] < 0 || tb.take[i] < 0 ||
        ta.take[i] + tb.take[i] != pool.counts[i]) {
      return out;
    }
  }
  out.agreed = true;
  out.reward_a = Score(val_a, ta);
  out.reward_b = Score(val_b, tb);
  out.pareto_optimal = IsParetoOptimal(Scenario{pool, val_a, val_b}, ta);
  return out;
}

bool IsParetoOptimal(const Scenario& s, const Allocation& alloc_a) {
  const int score_a = Score(s.valuation_a, alloc_a);
  const int score_b = Score(s.valuation_b, Complement(s.pool, alloc_a));
  for (const Allocation& other : EnumerateAllocations(s.pool)) {
    const int a = Score(s.valuation_a, other);
    const int b = Score(s.valuation_b, Complement(s.pool, other));
    if ((a > score_a && b >= score_b) || (b > score_b && a >= score_a)) {
      return false;
    }
  }
  return true;
}

std::string FormatCounts(const Counts& c) {
  return std::to_string(c[0]) + " " + std::to_string(c[1]) + " " +
         std::to_string(c[2]);
}

std::string FormatScenario(const Scenario& s) {
  std::ostringstream os;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (i) os << ' ';
    os << s.pool.counts[i] << ' ' << s.valuation_a.values[i];
  }
  os << " | " << FormatCounts(s.valuation_b.values);
  return os.str();
}

Scenario ParseScenario(std::string_view line) {
  std::istringstream is{std::string(line)};
  Scenario s;
  std::string bar;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (!(is >> s.pool.counts[i] >> s.valuation_a.values[i])) {
      throw std::invalid_argument("scenario: expected count/value pairs in '" +
                                  std::string(line) + "'");
    }
  }
  if (!(is >> bar) || bar != "|") {
    throw std::invalid_argument("scenario: missing '|' in '" +
                                std::string(line) + "'");
  }
  for (int& v : s.valuation_b.values) {
    if (!(is >> v)) {
      throw std::invalid_argument("scenario: expected three partner values");
    }
  }
  std::string extra;
  if (is >> extra) {
    throw std::invalid_argument("scenario: trailing input '" + extra + "'");
  }
  const int total = s.pool.Total();
  if (total < 1 || total > kMaxPoolItems) {
    throw std::invalid_argument("scenario: pool total must be in [1, 7]");
  }
  return s;
}

}  // namespace negotiator
