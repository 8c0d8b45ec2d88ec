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

#include "negotiator/config.h"

#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace negotiator {

namespace {

using json = nlohmann::json;
using Field = std::variant<int*, double*, bool*>;
using Fields = std::map<std::string, Field>;

void Apply(const json& section, const std::string& name, const Fields& fields) {
  if (!section.is_object()) {
    throw std::invalid_argument("config: '" + name + "' must be an object");
  }
  for (const auto& [key, value] : section.items()) {
    const std::string path = name + "." + key;
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw std::invalid_argument("config: unknown key '" + path + "'");
    }
    if (auto* i = std::get_if<int*>(&it->second)) {
      if (!value.is_number_integer()) {
        throw std::invalid_argument("config: '" + path + "' must be an integer");
      }
      **i = value.get<int>();
    } else if (auto* d = std::get_if<double*>(&it->second)) {
      if (!value.is_number()) {
        throw std::invalid_argument("config: '" + path + "' must be a number");
      }
      **d = value.get<double>();
    } else if (auto* b = std::get_if<bool*>(&it->second)) {
      if (!value.is_boolean()) {
        throw std::invalid_argument("config: '" + path + "' must be a boolean");
      }
      **b = value.get<bool>();
    }
  }
}

}  // namespace

RunConfig ParseRunConfig(const std::string& json_text) {
  const json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw std::invalid_argument("config: not a JSON object");
  }
  RunConfig c;
  for (const auto& [section, value] : root.items()) {
    if (section == "model") {
      json rest = value;
      if (value.is_object() && value.contains("preset")) {
        const json& preset = value["preset"];
        if (preset == "desk") {
          c.model = ModelConfig::Desk();
        } else if (preset == "full") {
          c.model = ModelConfig{};
        } else {
          throw std::invalid_argument(
              "config: 'model.preset' must be \"desk\" or \"full\"");
        }
        rest.erase("preset");
      }
      ModelConfig& m = c.model;
      Apply(rest, section,
            {{"goal_embed", &m.goal_embed}, {"word_embed", &m.word_embed},
             {"goal_hidden", &m.goal_hidden}, {"lm_hidden", &m.lm_hidden},
             {"sel_hidden", &m.sel_hidden}, {"summary", &m.summary},
             {"attention", &m.attention}, {"attend_output", &m.attend_output}});
    } else if (section == "supervised") {
      SupervisedConfig& s = c.supervised;
      Apply(value, section,
            {{"batch_size", &s.batch_size}, {"learning_rate", &s.learning_rate},
             {"momentum", &s.momentum}, {"clip", &s.clip},
             {"epochs", &s.epochs}, {"anneal_factor", &s.anneal_factor},
             {"alpha", &s.alpha}, {"init_range", &s.init_range},
             {"stop_below_ppl", &s.stop_below_ppl}});
    } else if (section == "rl") {
      RlConfig& r = c.rl;
      Apply(value, section,
            {{"learning_rate", &r.learning_rate}, {"clip", &r.clip},
             {"gamma", &r.gamma}, {"interleave_period", &r.interleave_period},
             {"sup_batch_size", &r.sup_batch_size},
             {"sup_learning_rate", &r.sup_learning_rate},
             {"sup_clip", &r.sup_clip}, {"alpha", &r.alpha},
             {"temperature", &r.temperature}, {"episodes", &r.episodes}});
    } else if (section == "engine") {
      Apply(value, section,
            {{"turn_cap", &c.engine.turn_cap},
             {"token_cap", &c.engine.token_cap}});
    } else if (section == "synth") {
      SynthStyle& y = c.synth;
      Apply(value, section,
            {{"min_total", &y.scenarios.min_total},
             {"max_total", &y.scenarios.max_total},
             {"min_per_type", &y.scenarios.min_per_type},
             {"max_per_type", &y.scenarios.max_per_type},
             {"attempt_budget", &y.scenarios.attempt_budget},
             {"min_initial_target", &y.min_initial_target},
             {"max_initial_target", &y.max_initial_target},
             {"min_floor", &y.min_floor}, {"max_floor", &y.max_floor},
             {"min_concession", &y.min_concession},
             {"max_concession", &y.max_concession},
             {"min_patience", &y.min_patience},
             {"max_patience", &y.max_patience}});
    } else if (section == "vocab") {
      Apply(value, section, {{"min_count", &c.vocab_min_count}});
    } else if (section == "eval") {
      Apply(value, section,
            {{"dialogues", &c.eval.dialogues},
             {"role_swap", &c.eval.role_swap},
             {"threads", &c.eval.threads}});
    } else {
      throw std::invalid_argument("config: unknown section '" + section + "'");
    }
  }
  c.model.Validate();
  c.supervised.Validate();
  c.rl.Validate();
  if (c.engine.turn_cap < 1 || c.engine.token_cap < 1) {
    throw std::invalid_argument("config: engine caps must be positive");
  }
  if (c.eval.dialogues < 1 || c.eval.threads < 1) {
    throw std::invalid_argument("config: eval counts must be positive");
  }
  if (c.vocab_min_count < 1) {
    throw std::invalid_argument("config: 'vocab.min_count' must be positive");
  }
  c.rl.engine = c.engine;
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseRunConfig(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace negotiator
