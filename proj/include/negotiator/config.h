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

#ifndef NEGOTIATOR_CONFIG_H_
#define NEGOTIATOR_CONFIG_H_

#include <string>

#include "negotiator/agents.h"
#include "negotiator/corpus.h"
#include "negotiator/model.h"
#include "negotiator/train.h"

namespace negotiator {

struct EvalSettings {
  int dialogues = 400;
  bool role_swap = true;
  int threads = 1;
};

// Settings shared by the command-line tools. Defaults are the desk-scale
// values; every section of a JSON config file is optional.
struct RunConfig {
  ModelConfig model = ModelConfig::Desk();
  SupervisedConfig supervised;
  RlConfig rl;
  EngineConfig engine;
  SynthStyle synth;
  int vocab_min_count = 20;
  EvalSettings eval;
};

// Sections: "model" (with optional "preset": "desk" | "full"), "supervised",
// "rl", "engine", "synth", "vocab" {"min_count"}, "eval". Unknown keys and
// ill-typed values throw std::invalid_argument naming the key.
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace negotiator

#endif  // NEGOTIATOR_CONFIG_H_
