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

#include <doctest.h>

#include <random>
#include <set>

#include "negotiator/live.h"
#include "oracles.h"

namespace negotiator {
namespace {

using oracle::ToyModel;

const Vocabulary& ToyVocab() {
  static const Vocabulary v({"a", "b"});
  return v;
}

const Scenario kScenario{{{1, 2, 1}}, {{4, 2, 2}}, {{2, 1, 6}}};

std::string ErrorCode(const std::function<void()>& f) {
  try {
    f();
  } catch (const SessionError& e) {
    return e.code();
  }
  return "";
}

bool Allowed(LiveState from, LiveState to) {
  using S = LiveState;
  switch (from) {
    case S::kHumanTurn:
      return to == S::kAgentTurn || to == S::kAwaitingSelections ||
             to == S::kDone;
    case S::kAgentTurn:
      return to == S::kHumanTurn || to == S::kAwaitingSelections ||
             to == S::kDone;
    case S::kAwaitingSelections:
      return to == S::kDone;
    case S::kDone:
      return false;
  }
  return false;
}

TEST_CASE("message normalization") {
  CHECK(NormalizeMessage("  I Want\tTHE  ball \n") ==
        std::vector<std::string>{"i", "want", "the", "ball"});
  CHECK(NormalizeMessage("   ").empty());
}

TEST_CASE("a human choose leads to selection and resolution") {
  const ToyModel toy;
  const Clock::time_point t0{};
  LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, 1, t0);
  CHECK(s.state() == LiveState::kHumanTurn);
  const auto events = s.PostMessage("A b zebra <choose>", t0);
  REQUIRE(events.size() == 2);
  CHECK(events[0].speaker == Speaker::kA);
  CHECK(events[0].text == "a b zebra");
  CHECK(events[1].text == "<choose>");
  CHECK(s.state() == LiveState::kAwaitingSelections);
  CHECK(ErrorCode([&] { s.PostMessage("a", t0); }) == "selection_required");

  try {
    s.PostSelection(Allocation{{2, -1, 1}}, t0);
    FAIL("infeasible selection accepted");
  } catch (const SessionError& e) {
    CHECK(e.code() == "infeasible_selection");
    CHECK(std::string(e.what()) ==
          "book: 2 outside 0..1; hat: -1 outside 0..2");
  }
  CHECK(s.state() == LiveState::kAwaitingSelections);

  const Allocation take{{1, 0, 0}};
  const DealOutcome o = s.PostSelection(take, t0);
  CHECK(s.state() == LiveState::kDone);
  REQUIRE(s.outcome().has_value());
  CHECK(*s.outcome() == o);
  if (o.agreed) {
    CHECK(o.reward_a == Score(kScenario.valuation_a, take));
  } else {
    CHECK(o.reward_a == 0);
    CHECK(o.reward_b == 0);
  }
  CHECK(ErrorCode([&] { s.PostMessage("a", t0); }) == "session_done");
  CHECK(ErrorCode([&] { s.PostSelection(take, t0); }) == "session_done");
}

TEST_CASE("declaring no agreement never scores") {
  const ToyModel toy;
  LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, 2, {});
  s.PostMessage("<choose>", {});
  const DealOutcome o = s.PostSelection(std::nullopt, {});
  CHECK_FALSE(o.agreed);
  CHECK(o.reward_a == 0);
}

TEST_CASE("malformed messages are rejected without a state change") {
  const ToyModel toy;
  LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, 3, {});
  CHECK(ErrorCode([&] { s.PostMessage(" \t", {}); }) == "empty_message");
  std::string long_text;
  for (int i = 0; i <= kMaxMessageTokens; ++i) long_text += "a ";
  CHECK(ErrorCode([&] { s.PostMessage(long_text, {}); }) ==
        "message_too_long");
  CHECK(ErrorCode([&] { s.PostMessage("a <choose> b", {}); }) ==
        "bad_message");
  CHECK(ErrorCode([&] { s.PostSelection(std::nullopt, {}); }) ==
        "wrong_state");
  CHECK(s.state() == LiveState::kHumanTurn);
  CHECK(s.turns() == 0);
  CHECK(s.trajectory().size() == 1);
}

TEST_CASE("the turn cap ends the session without agreement") {
  const ToyModel toy;
  int capped = 0;
  for (uint64_t seed = 0; seed < 40; ++seed) {
    LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, seed, {},
                  EngineConfig{2, 100});
    s.PostMessage("a", {});
    if (s.state() != LiveState::kHumanTurn) continue;
    CHECK(s.turns() == 2);
    CHECK(s.PostMessage("b", {}).empty());
    CHECK(s.state() == LiveState::kDone);
    CHECK_FALSE(s.outcome()->agreed);
    ++capped;
  }
  CHECK(capped > 0);
}

TEST_CASE("idle sessions expire") {
  const ToyModel toy;
  const Clock::time_point t0{};
  LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, 4, t0);
  CHECK_FALSE(s.ExpireIfIdle(t0 + kIdleTimeout - std::chrono::seconds(1)));
  CHECK(s.state() == LiveState::kHumanTurn);
  CHECK(s.ExpireIfIdle(t0 + kIdleTimeout));
  CHECK(s.state() == LiveState::kDone);
  CHECK_FALSE(s.outcome()->agreed);
  CHECK_FALSE(s.ExpireIfIdle(t0 + 2 * kIdleTimeout));
}

TEST_CASE("random interaction keeps the state machine consistent") {
  const ToyModel toy;
  std::mt19937_64 rng(99);
  const std::vector<std::string> messages = {
      "a", "b a", "zebra", "a <choose>", "<choose>", "", "a <choose> b"};
  for (int run = 0; run < 300; ++run) {
    LiveSession s("x", kScenario, toy, ToyVocab(), Policy{}, run, {},
                  EngineConfig{1 + run % 8, 100});
    for (int step = 0; step < 30; ++step) {
      const LiveState before = s.state();
      const size_t traj = s.trajectory().size();
      std::string code;
      if (rng() % 3 == 0) {
        std::optional<Allocation> take;
        if (rng() % 4 != 0) {
          take = Allocation{{static_cast<int>(rng() % 3),
                             static_cast<int>(rng() % 4),
                             static_cast<int>(rng() % 3) - 1}};
        }
        code = ErrorCode([&] { s.PostSelection(take, {}); });
      } else {
        code = ErrorCode(
            [&] { s.PostMessage(messages[rng() % messages.size()], {}); });
      }
      if (!code.empty()) {
        CHECK(s.state() == before);
        CHECK(s.trajectory().size() == traj);
      }
    }
    const auto& t = s.trajectory();
    CHECK(t.front() == LiveState::kHumanTurn);
    for (size_t i = 1; i < t.size(); ++i) CHECK(Allowed(t[i - 1], t[i]));
    CHECK(s.outcome().has_value() == (s.state() == LiveState::kDone));
    CHECK(s.turns() <= 1 + run % 8);
  }
}

struct ManagerFixture {
  ToyModel toy;
  Clock::time_point now{};
  SessionManager Make(int capacity) {
    SessionManagerConfig cfg;
    cfg.capacity = capacity;
    cfg.seed = 5;
    return SessionManager({LiveAgent{"toy", &toy, &ToyVocab(), Policy{}}},
                          cfg, [this] { return now; });
  }
};

TEST_CASE("manager creation, lookup and capacity") {
  ManagerFixture f;
  SessionManager m = f.Make(2);
  const auto a = m.Create("", std::nullopt);
  const auto b = m.Create("toy", 77);
  CHECK(a->id() != b->id());
  CHECK(m.Find(a->id()) == a);
  CHECK(m.Find("nope") == nullptr);
  CHECK(m.LiveCount() == 2);
  CHECK(ErrorCode([&] { m.Create("", std::nullopt); }) == "capacity");
  CHECK(ErrorCode([&] { m.Create("gpt", std::nullopt); }) == "unknown_model");

  // Finishing a session frees its slot.
  a->PostMessage("<choose>", f.now);
  a->PostSelection(std::nullopt, f.now);
  CHECK(m.LiveCount() == 1);
  CHECK_NOTHROW(m.Create("", std::nullopt));

  std::mt19937_64 rng(77);
  CHECK(b->scenario() == SampleScenario(rng));
}

TEST_CASE("manager expires idle sessions and purges finished ones") {
  ManagerFixture f;
  SessionManager m = f.Make(4);
  const auto s = m.Create("", std::nullopt);
  const std::string id = s->id();
  f.now += kIdleTimeout;
  const auto found = m.Find(id);
  REQUIRE(found != nullptr);
  CHECK(found->state() == LiveState::kDone);
  CHECK_FALSE(found->outcome()->agreed);
  m.Create("", std::nullopt);
  CHECK(m.Find(id) == nullptr);
}

TEST_CASE("manager rejects bad construction") {
  CHECK_THROWS_AS(SessionManager({}, {}), std::invalid_argument);
  const ToyModel toy;
  SessionManagerConfig cfg;
  cfg.capacity = 0;
  CHECK_THROWS_AS(
      SessionManager({LiveAgent{"t", &toy, &ToyVocab(), Policy{}}}, cfg),
      std::invalid_argument);
}

}  // namespace
}  // namespace negotiator
