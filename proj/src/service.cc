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

#include "negotiator/service.h"

#include <httplib.h>

#include <json.hpp>
#include <mutex>
#include <optional>
#include <vector>

namespace negotiator {

namespace {

using json = nlohmann::json;

constexpr const char* kIndexPage =
    "<!doctype html><title>negotiator</title>"
    "<p>Session API: POST /sessions, GET /sessions/{id}, "
    "POST /sessions/{id}/message, POST /sessions/{id}/selection.</p>\n";

ApiResponse Json(int status, const json& j) {
  return ApiResponse{status, "application/json", j.dump()};
}

ApiResponse Error(int status, const std::string& code,
                  const std::string& detail) {
  return Json(status, json{{"error", code}, {"detail", detail}});
}

json CountsJson(const Counts& c) { return json::array({c[0], c[1], c[2]}); }

const char* SpeakerName(Speaker s) {
  return s == Speaker::kA ? "human" : "agent";
}

json EventsJson(const std::vector<LiveEvent>& events) {
  json out = json::array();
  for (const LiveEvent& e : events) {
    out.push_back({{"speaker", SpeakerName(e.speaker)}, {"text", e.text}});
  }
  return out;
}

// Agent values appear only here, and only for Done sessions.
json OutcomeJson(const LiveSession& s) {
  const DealOutcome& o = *s.outcome();
  json pareto = nullptr;
  if (o.pareto_optimal) pareto = *o.pareto_optimal;
  return {{"agreed", o.agreed},
          {"reward_human", o.reward_a},
          {"reward_agent", o.reward_b},
          {"agent_values", CountsJson(s.scenario().valuation_b.values)},
          {"pareto", pareto}};
}

json SessionJson(const LiveSession& s) {
  json j{{"id", s.id()},
         {"pool", CountsJson(s.scenario().pool.counts)},
         {"values", CountsJson(s.scenario().valuation_a.values)},
         {"state", LiveStateName(s.state())},
         {"turns", s.turns()},
         {"messages", EventsJson(s.messages())}};
  if (s.state() == LiveState::kDone && s.outcome()) {
    j["outcome"] = OutcomeJson(s);
  }
  return j;
}

std::optional<json> ParseBody(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

}  // namespace

SessionService::SessionService(SessionManager& manager, std::string static_dir)
    : manager_(&manager), static_dir_(std::move(static_dir)) {}

ApiResponse SessionService::Handle(const std::string& method,
                                   const std::string& path,
                                   const std::string& body) {
  if (method == "GET" && (path == "/" || path == "/index.html")) {
    return ApiResponse{200, "text/html", kIndexPage};
  }
  const std::string prefix = "/sessions";
  if (path.rfind(prefix, 0) != 0) return Error(404, "not_found", path);
  std::string rest = path.substr(prefix.size());
  if (!rest.empty() && rest.back() == '/') rest.pop_back();

  const std::optional<json> request = ParseBody(body);
  if (method == "POST" && !request) {
    return Error(400, "bad_json", "request body must be a JSON object");
  }

  try {
    if (rest.empty()) {
      if (method != "POST") return Error(404, "not_found", method + " " + path);
      std::string model;
      std::optional<uint64_t> seed;
      if (request->contains("model")) {
        if (!(*request)["model"].is_string()) {
          return Error(400, "bad_request", "model must be a string");
        }
        model = (*request)["model"].get<std::string>();
      }
      if (request->contains("seed")) {
        if (!(*request)["seed"].is_number_unsigned()) {
          return Error(400, "bad_request",
                       "seed must be a non-negative integer");
        }
        seed = (*request)["seed"].get<uint64_t>();
      }
      auto s = manager_->Create(model, seed);
      std::lock_guard<std::mutex> lock(s->mutex());
      return Json(200, {{"id", s->id()},
                        {"pool", CountsJson(s->scenario().pool.counts)},
                        {"values", CountsJson(s->scenario().valuation_a.values)}});
    }

    if (rest[0] != '/') return Error(404, "not_found", path);
    rest = rest.substr(1);
    const size_t slash = rest.find('/');
    const std::string id = rest.substr(0, slash);
    const std::string action =
        slash == std::string::npos ? "" : rest.substr(slash + 1);
    auto s = manager_->Find(id);
    if (!s) return Error(404, "unknown_session", "no session '" + id + "'");
    std::lock_guard<std::mutex> lock(s->mutex());

    if (action.empty() && method == "GET") return Json(200, SessionJson(*s));
    if (action == "message" && method == "POST") {
      const auto it = request->find("text");
      if (it == request->end() || !it->is_string()) {
        return Error(400, "bad_request", "text must be a string");
      }
      const auto events =
          s->PostMessage(it->get<std::string>(), manager_->Now());
      return Json(200, {{"events", EventsJson(events)},
                        {"state", LiveStateName(s->state())}});
    }
    if (action == "selection" && method == "POST") {
      const auto it = request->find("take");
      std::optional<Allocation> take;
      if (it == request->end()) {
        return Error(400, "bad_request", "take is required");
      }
      if (it->is_string()) {
        if (it->get<std::string>() != "no_agreement") {
          return Error(400, "bad_request",
                       "take must be 3 integers or \"no_agreement\"");
        }
      } else {
        if (!it->is_array() || it->size() != kNumItemTypes) {
          return Error(400, "bad_request",
                       "take must be 3 integers or \"no_agreement\"");
        }
        Allocation a;
        for (int i = 0; i < kNumItemTypes; ++i) {
          if (!(*it)[i].is_number_integer()) {
            return Error(400, "bad_request", "take entries must be integers");
          }
          a.take[i] = (*it)[i].get<int>();
        }
        take = a;
      }
      s->PostSelection(take, manager_->Now());
      return Json(200, OutcomeJson(*s));
    }
    return Error(404, "not_found", method + " " + path);
  } catch (const SessionError& e) {
    return Error(400, e.code(), e.what());
  }
}

void SessionService::Register(httplib::Server& server) {
  if (!static_dir_.empty()) server.set_mount_point("/", static_dir_);
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = Handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Post(R"(/sessions(/.*)?)", route);
  server.Get(R"(/sessions/.*)", route);
  if (static_dir_.empty()) server.Get("/", route);
}

}  // namespace negotiator
