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

#include <httplib.h>
#include <doctest.h>

#include <json.hpp>
#include <thread>

#include "negotiator/service.h"
#include "oracles.h"

namespace negotiator {
namespace {

using json = nlohmann::json;
using oracle::ToyModel;

const Vocabulary& ToyVocab() {
  static const Vocabulary v({"a", "b"});
  return v;
}

struct Fixture {
  ToyModel toy;
  Clock::time_point now{};
  SessionManager manager;
  SessionService service;

  explicit Fixture(int capacity = 8)
      : manager({LiveAgent{"toy", &toy, &ToyVocab(), Policy{}}},
                [capacity] {
                  SessionManagerConfig c;
                  c.capacity = capacity;
                  c.seed = 3;
                  return c;
                }(),
                [this] { return now; }),
        service(manager) {}

  json Call(const std::string& method, const std::string& path,
            const std::string& body, int want_status) {
    const ApiResponse r = service.Handle(method, path, body);
    INFO(method << " " << path << " -> " << r.body);
    CHECK(r.status == want_status);
    CHECK(r.content_type == "application/json");
    return json::parse(r.body);
  }
};

bool HasKey(const json& j, const std::string& key) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == key || HasKey(it.value(), key)) return true;
    }
  } else if (j.is_array()) {
    for (const json& e : j) {
      if (HasKey(e, key)) return true;
    }
  }
  return false;
}

TEST_CASE("create, converse, select") {
  Fixture f;
  const json created = f.Call("POST", "/sessions", R"({"seed": 11})", 200);
  const std::string id = created["id"];
  std::mt19937_64 rng(11);
  const Scenario sc = SampleScenario(rng);
  CHECK(created["pool"] == json::array({sc.pool.counts[0], sc.pool.counts[1],
                                        sc.pool.counts[2]}));
  CHECK(created["values"] ==
        json::array({sc.valuation_a.values[0], sc.valuation_a.values[1],
                     sc.valuation_a.values[2]}));

  std::vector<json> before_done = {created};
  json view = f.Call("GET", "/sessions/" + id, "", 200);
  CHECK(view["state"] == "HumanTurn");
  CHECK(view["turns"] == 0);
  before_done.push_back(view);

  // Exchange messages until someone chooses.
  std::string state = "HumanTurn";
  for (int i = 0; i < 3 && state == "HumanTurn"; ++i) {
    const json r = f.Call("POST", "/sessions/" + id + "/message",
                          R"({"text": "a b"})", 200);
    state = r["state"];
    REQUIRE(r["events"].size() >= 1);
    CHECK(r["events"][0]["speaker"] == "human");
    CHECK(r["events"][0]["text"] == "a b");
    before_done.push_back(r);
    before_done.push_back(f.Call("GET", "/sessions/" + id, "", 200));
  }
  if (state == "HumanTurn") {
    const json r = f.Call("POST", "/sessions/" + id + "/message",
                          R"({"text": "<choose>"})", 200);
    state = r["state"];
    before_done.push_back(r);
  }
  REQUIRE(state == "AwaitingSelections");
  const json bad = f.Call("POST", "/sessions/" + id + "/selection",
                          R"({"take": [9, 0, 0]})", 400);
  CHECK(bad["error"] == "infeasible_selection");
  before_done.push_back(bad);
  before_done.push_back(f.Call("POST", "/sessions/" + id + "/message",
                               R"({"text": "a"})", 400));
  for (const json& j : before_done) {
    CHECK_FALSE(HasKey(j, "agent_values"));
    CHECK_FALSE(HasKey(j, "outcome"));
  }

  const json out = f.Call("POST", "/sessions/" + id + "/selection",
                          R"({"take": "no_agreement"})", 200);
  CHECK(out["agreed"] == false);
  CHECK(out["reward_human"] == 0);
  CHECK(out["pareto"].is_null());
  CHECK(out["agent_values"] ==
        json::array({sc.valuation_b.values[0], sc.valuation_b.values[1],
                     sc.valuation_b.values[2]}));
  const json done = f.Call("GET", "/sessions/" + id, "", 200);
  CHECK(done["state"] == "Done");
  CHECK(done["outcome"] == out);
}

TEST_CASE("request errors") {
  Fixture f(1);
  CHECK(f.Call("POST", "/sessions", "{not json", 400)["error"] == "bad_json");
  CHECK(f.Call("POST", "/sessions", "[1]", 400)["error"] == "bad_json");
  CHECK(f.Call("POST", "/sessions", R"({"seed": -1})", 400)["error"] ==
        "bad_request");
  CHECK(f.Call("POST", "/sessions", R"({"model": "x"})", 400)["error"] ==
        "unknown_model");
  const std::string id = f.Call("POST", "/sessions", "", 200)["id"];
  CHECK(f.Call("POST", "/sessions", "", 400)["error"] == "capacity");
  CHECK(f.Call("GET", "/sessions/zzz", "", 404)["error"] == "unknown_session");
  CHECK(f.Call("POST", "/sessions/zzz/message", R"({"text": "a"})", 404)
            ["error"] == "unknown_session");
  CHECK(f.Call("GET", "/elsewhere", "", 404)["error"] == "not_found");
  CHECK(f.Call("POST", "/sessions/" + id + "/message", R"({"text": 3})", 400)
            ["error"] == "bad_request");
  CHECK(f.Call("POST", "/sessions/" + id + "/message", R"({"text": ""})", 400)
            ["error"] == "empty_message");
  CHECK(f.Call("POST", "/sessions/" + id + "/selection", R"({"take": [0]})",
               400)["error"] == "bad_request");
  CHECK(f.Call("POST", "/sessions/" + id + "/selection",
               R"({"take": [0, 0, 0]})", 400)["error"] == "wrong_state");
  CHECK(f.Call("POST", "/sessions/" + id + "/frobnicate", "", 404)["error"] ==
        "not_found");
  const json e = f.Call("POST", "/sessions/" + id + "/selection", "{}", 400);
  CHECK(e.contains("detail"));
}

TEST_CASE("idle sessions read back as finished without agreement") {
  Fixture f;
  const std::string id = f.Call("POST", "/sessions", "", 200)["id"];
  f.now += kIdleTimeout;
  const json view = f.Call("GET", "/sessions/" + id, "", 200);
  CHECK(view["state"] == "Done");
  CHECK(view["outcome"]["agreed"] == false);
}

TEST_CASE("index page") {
  Fixture f;
  const ApiResponse r = f.service.Handle("GET", "/", "");
  CHECK(r.status == 200);
  CHECK(r.content_type == "text/html");
}

TEST_CASE("round trip over a socket") {
  Fixture f;
  f.now = Clock::now();
  httplib::Server server;
  f.service.Register(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", R"({"seed": 4})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 200);
  const std::string id = json::parse(created->body)["id"];
  auto msg = client.Post("/sessions/" + id + "/message",
                         R"({"text": "a <choose>"})", "application/json");
  REQUIRE(msg);
  CHECK(json::parse(msg->body)["state"] == "AwaitingSelections");
  auto sel = client.Post("/sessions/" + id + "/selection",
                         R"({"take": [0, 0, 0]})", "application/json");
  REQUIRE(sel);
  CHECK(sel->status == 200);
  CHECK(json::parse(sel->body).contains("agent_values"));
  auto missing = client.Get("/sessions/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  t.join();
}

}  // namespace
}  // namespace negotiator
