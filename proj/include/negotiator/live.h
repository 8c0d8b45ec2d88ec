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

// Human-versus-agent sessions. The human is side A and speaks first; the
// agent is side B.

#ifndef NEGOTIATOR_LIVE_H_
#define NEGOTIATOR_LIVE_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "negotiator/agents.h"
#include "negotiator/corpus.h"
#include "negotiator/env.h"

namespace negotiator {

using Clock = std::chrono::steady_clock;

inline constexpr int kMaxMessageTokens = 100;
inline constexpr std::chrono::minutes kIdleTimeout{30};

enum class LiveState { kHumanTurn, kAgentTurn, kAwaitingSelections, kDone };

std::string LiveStateName(LiveState s);

// Rejected request. `code` is a stable machine-readable identifier.
class SessionError : public std::runtime_error {
 public:
  SessionError(std::string code, const std::string& detail)
      : std::runtime_error(detail), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct LiveEvent {
  Speaker speaker = Speaker::kA;  // kA is the human.
  std::string text;               // "<choose>" for a selection signal.
};

// Lowercases and splits on whitespace.
std::vector<std::string> NormalizeMessage(const std::string& text);

class LiveSession {
 public:
  LiveSession(std::string id, const Scenario& scenario,
              const ForwardModel& model, const Vocabulary& vocab,
              const Policy& policy, uint64_t seed, Clock::time_point now,
              EngineConfig engine = {});

  // Feeds the human turn and, unless it ends the dialogue, the agent's
  // reply. Returns the events of this exchange.
  std::vector<LiveEvent> PostMessage(const std::string& text,
                                     Clock::time_point now);
  // `take` is the human's claim; nullopt declares no agreement.
  DealOutcome PostSelection(const std::optional<Allocation>& take,
                            Clock::time_point now);
  // Forces no agreement once the session has idled past the timeout.
  // Returns true if it expired the session.
  bool ExpireIfIdle(Clock::time_point now);

  const std::string& id() const { return id_; }
  const Scenario& scenario() const { return scenario_; }
  LiveState state() const { return state_; }
  int turns() const { return turns_; }
  const std::vector<LiveEvent>& messages() const { return messages_; }
  // Set once Done.
  const std::optional<DealOutcome>& outcome() const { return outcome_; }
  // Every state entered, starting with kHumanTurn.
  const std::vector<LiveState>& trajectory() const { return trajectory_; }
  Clock::time_point last_activity() const { return last_activity_; }
  std::mutex& mutex() { return mu_; }

 private:
  void Enter(LiveState s);
  void FinishWithoutAgreement();
  void RequireState(LiveState s) const;

  std::string id_;
  Scenario scenario_;
  const Vocabulary* vocab_;
  EngineConfig engine_;
  AgentSession agent_;
  LiveState state_ = LiveState::kHumanTurn;
  std::vector<LiveState> trajectory_;
  int turns_ = 0;
  bool human_spoke_ = false;
  Clock::time_point last_activity_;
  std::vector<LiveEvent> messages_;
  std::optional<DealOutcome> outcome_;
  std::mutex mu_;
};

// A loaded agent offered to live sessions.
struct LiveAgent {
  std::string name;
  const ForwardModel* model = nullptr;
  const Vocabulary* vocab = nullptr;
  Policy policy;
};

struct SessionManagerConfig {
  int capacity = 64;
  uint64_t seed = 0;
  ScenarioGeneratorConfig scenarios;
  EngineConfig engine;
};

class SessionManager {
 public:
  using ClockFn = std::function<Clock::time_point()>;

  // `agents` must be non-empty; the first is the default.
  SessionManager(std::vector<LiveAgent> agents, SessionManagerConfig cfg,
                 ClockFn clock = Clock::now);

  // Throws SessionError("unknown_model") or ("capacity").
  std::shared_ptr<LiveSession> Create(const std::string& agent_name,
                                      std::optional<uint64_t> seed);
  // Expires the session lazily. nullptr when unknown.
  std::shared_ptr<LiveSession> Find(const std::string& id);
  Clock::time_point Now() const { return clock_(); }
  // Sessions not yet Done.
  int LiveCount();

 private:
  std::vector<LiveAgent> agents_;
  SessionManagerConfig cfg_;
  ClockFn clock_;
  uint64_t created_ = 0;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
  std::mutex mu_;
};

}  // namespace negotiator

#endif  // NEGOTIATOR_LIVE_H_
