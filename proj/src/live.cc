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

#include "negotiator/live.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace negotiator {

namespace {

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (const std::string& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

std::string LiveStateName(LiveState s) {
  switch (s) {
    case LiveState::kHumanTurn:
      return "HumanTurn";
    case LiveState::kAgentTurn:
      return "AgentTurn";
    case LiveState::kAwaitingSelections:
      return "AwaitingSelections";
    case LiveState::kDone:
      return "Done";
  }
  return "Unknown";
}

std::vector<std::string> NormalizeMessage(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::istringstream in(lower);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

LiveSession::LiveSession(std::string id, const Scenario& scenario,
                         const ForwardModel& model, const Vocabulary& vocab,
                         const Policy& policy, uint64_t seed,
                         Clock::time_point now, EngineConfig engine)
    : id_(std::move(id)),
      scenario_(scenario),
      vocab_(&vocab),
      engine_(engine),
      agent_(model, MakeGoal(scenario.pool, scenario.valuation_b), policy,
             seed, engine),
      last_activity_(now) {
  trajectory_.push_back(state_);
}

void LiveSession::Enter(LiveState s) {
  state_ = s;
  trajectory_.push_back(s);
}

void LiveSession::FinishWithoutAgreement() {
  outcome_ = DealOutcome{};
  Enter(LiveState::kDone);
}

void LiveSession::RequireState(LiveState s) const {
  if (state_ == s) return;
  if (state_ == LiveState::kAwaitingSelections) {
    throw SessionError("selection_required", "selection required");
  }
  if (state_ == LiveState::kDone) {
    throw SessionError("session_done", "session is finished");
  }
  throw SessionError("wrong_state",
                     "expected state " + LiveStateName(s) + ", session is in " +
                         LiveStateName(state_));
}

std::vector<LiveEvent> LiveSession::PostMessage(const std::string& text,
                                                Clock::time_point now) {
  RequireState(LiveState::kHumanTurn);
  last_activity_ = now;
  std::vector<LiveEvent> events;
  if (turns_ >= engine_.turn_cap) {
    FinishWithoutAgreement();
    return events;
  }
  std::vector<std::string> words = NormalizeMessage(text);
  if (words.empty()) throw SessionError("empty_message", "message is empty");
  if (words.size() > static_cast<size_t>(kMaxMessageTokens)) {
    throw SessionError("message_too_long",
                       "message has " + std::to_string(words.size()) +
                           " tokens, limit is " +
                           std::to_string(kMaxMessageTokens));
  }
  const bool choose = words.back() == kChoose;
  if (choose) words.pop_back();
  if (std::find(words.begin(), words.end(), kChoose) != words.end()) {
    throw SessionError("bad_message", "<choose> may only end a message");
  }

  std::vector<TokenId> tokens;
  if (!human_spoke_) tokens.push_back(kWriteId);
  for (const std::string& w : words) {
    const TokenId id = vocab_->Id(w);
    tokens.push_back(id < kNumSpecialTokens ? kUnkId : id);
  }
  tokens.push_back(choose ? kChooseId : kReadId);
  agent_.ReadTurn(tokens);
  human_spoke_ = true;
  ++turns_;
  if (!words.empty()) events.push_back({Speaker::kA, JoinWords(words)});
  if (choose) {
    events.push_back({Speaker::kA, std::string(kChoose)});
    messages_.insert(messages_.end(), events.begin(), events.end());
    Enter(LiveState::kAwaitingSelections);
    return events;
  }

  Enter(LiveState::kAgentTurn);
  if (turns_ >= engine_.turn_cap) {
    messages_.insert(messages_.end(), events.begin(), events.end());
    FinishWithoutAgreement();
    return events;
  }
  const WrittenTurn reply = agent_.WriteTurn();
  ++turns_;
  std::vector<std::string> reply_words;
  for (TokenId t : reply.tokens) {
    if (t >= kNumSpecialTokens || t == kUnkId) {
      reply_words.push_back(vocab_->Word(t));
    }
  }
  if (!reply_words.empty()) {
    events.push_back({Speaker::kB, JoinWords(reply_words)});
  }
  const bool agent_chose = reply.tokens.back() == kChooseId;
  if (agent_chose) events.push_back({Speaker::kB, std::string(kChoose)});
  messages_.insert(messages_.end(), events.begin(), events.end());
  Enter(agent_chose ? LiveState::kAwaitingSelections : LiveState::kHumanTurn);
  return events;
}

DealOutcome LiveSession::PostSelection(const std::optional<Allocation>& take,
                                       Clock::time_point now) {
  RequireState(LiveState::kAwaitingSelections);
  Selection human = Selection::NoAgreement();
  if (take) {
    std::string detail;
    for (int i = 0; i < kNumItemTypes; ++i) {
      const int v = take->take[i];
      const int count = scenario_.pool.counts[i];
      if (v < 0 || v > count) {
        if (!detail.empty()) detail += "; ";
        detail += std::string(kItemNames[i]) + ": " + std::to_string(v) +
                  " outside 0.." + std::to_string(count);
      }
    }
    if (!detail.empty()) throw SessionError("infeasible_selection", detail);
    human = Selection::Claim(*take);
  }
  last_activity_ = now;
  const Selection agent = agent_.Choose().selection;
  outcome_ = Resolve(scenario_.pool, human, agent, scenario_.valuation_a,
                     scenario_.valuation_b);
  Enter(LiveState::kDone);
  return *outcome_;
}

bool LiveSession::ExpireIfIdle(Clock::time_point now) {
  if (state_ == LiveState::kDone || now - last_activity_ < kIdleTimeout) {
    return false;
  }
  FinishWithoutAgreement();
  return true;
}

SessionManager::SessionManager(std::vector<LiveAgent> agents,
                               SessionManagerConfig cfg, ClockFn clock)
    : agents_(std::move(agents)), cfg_(cfg), clock_(std::move(clock)) {
  if (agents_.empty()) throw std::invalid_argument("no live agents");
  for (const LiveAgent& a : agents_) {
    if (!a.model || !a.vocab) {
      throw std::invalid_argument("live agent '" + a.name + "' incomplete");
    }
  }
  if (cfg_.capacity < 1) throw std::invalid_argument("capacity must be >= 1");
}

std::shared_ptr<LiveSession> SessionManager::Create(
    const std::string& agent_name, std::optional<uint64_t> seed) {
  const LiveAgent* agent = &agents_.front();
  if (!agent_name.empty()) {
    auto it = std::find_if(agents_.begin(), agents_.end(),
                           [&](const LiveAgent& a) { return a.name == agent_name; });
    if (it == agents_.end()) {
      throw SessionError("unknown_model", "no model named '" + agent_name + "'");
    }
    agent = &*it;
  }
  const Clock::time_point now = clock_();
  std::lock_guard<std::mutex> lock(mu_);
  int live = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    LiveSession& s = *it->second;
    std::lock_guard<std::mutex> session_lock(s.mutex());
    s.ExpireIfIdle(now);
    if (s.state() == LiveState::kDone && now - s.last_activity() >= kIdleTimeout) {
      it = sessions_.erase(it);
      continue;
    }
    if (s.state() != LiveState::kDone) ++live;
    ++it;
  }
  if (live >= cfg_.capacity) {
    throw SessionError("capacity", "service is at its limit of " +
                                       std::to_string(cfg_.capacity) +
                                       " live sessions");
  }
  const uint64_t index = created_++;
  const uint64_t scenario_seed = seed ? *seed : DeriveSeed(cfg_.seed, index);
  std::mt19937_64 rng(scenario_seed);
  const Scenario scenario = SampleScenario(rng, cfg_.scenarios);
  char id[40];
  std::snprintf(id, sizeof id, "%llu-%016llx",
                static_cast<unsigned long long>(index),
                static_cast<unsigned long long>(
                    DeriveSeed(cfg_.seed ^ 0x9e3779b97f4a7c15ULL, index)));
  auto session = std::make_shared<LiveSession>(
      id, scenario, *agent->model, *agent->vocab, agent->policy,
      DeriveSeed(scenario_seed, 1), now, cfg_.engine);
  sessions_.emplace(session->id(), session);
  return session;
}

std::shared_ptr<LiveSession> SessionManager::Find(const std::string& id) {
  std::shared_ptr<LiveSession> s;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    s = it->second;
  }
  std::lock_guard<std::mutex> session_lock(s->mutex());
  s->ExpireIfIdle(clock_());
  return s;
}

int SessionManager::LiveCount() {
  const Clock::time_point now = clock_();
  std::lock_guard<std::mutex> lock(mu_);
  int live = 0;
  for (auto& [id, s] : sessions_) {
    std::lock_guard<std::mutex> session_lock(s->mutex());
    s->ExpireIfIdle(now);
    if (s->state() != LiveState::kDone) ++live;
  }
  return live;
}

}  // namespace negotiator
