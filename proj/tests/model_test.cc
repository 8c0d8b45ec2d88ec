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

#include <cmath>
#include <random>
#include <sstream>

#include "negotiator/model.h"
#include "oracles.h"

namespace negotiator {
namespace {

ModelConfig TinyConfig() {
  ModelConfig c;
  c.goal_embed = 4;
  c.word_embed = 6;
  c.goal_hidden = 4;
  c.lm_hidden = 8;
  c.sel_hidden = 6;
  c.summary = 6;
  c.attention = 6;
  return c;
}

Vocabulary TinyVocab() {
  return Vocabulary({"i", "want", "book", "hat", "ball", "deal"});
}

NegotiationModel TinyModel(uint64_t seed = 1, double range = 0.5,
                           ModelConfig config = TinyConfig()) {
  NegotiationModel m(config, TinyVocab());
  std::mt19937_64 rng(seed);
  m.InitUniform(range, rng);
  return m;
}

EncodedExample TinyExample(const Vocabulary& v) {
  TrainingExample ex;
  ex.goal = Goal{1, 4, 2, 1, 4, 1};
  ex.partner_goal = Goal{1, 2, 2, 2, 4, 1};
  ex.dialogue = {"write:", "i", "want", "book", "read:", "deal",
                 "write:", "<choose>"};
  ex.output = Output{1, 0, 0, 0, 2, 4};
  ex.trainable_output = true;
  return EncodeExample(v, ex);
}

double SumExp(const Var& log_probs) {
  double s = 0.0;
  for (double v : log_probs.value().values()) s += std::exp(v);
  return s;
}

TEST_CASE("goal tokens") {
  CHECK(GoalToken(0, 0) == 0);
  CHECK(GoalToken(0, 7) == 7);
  CHECK(GoalToken(1, 0) == 8);
  CHECK(GoalToken(1, 10) == 18);
  CHECK_THROWS(GoalToken(0, 8));
  CHECK_THROWS(GoalToken(1, 11));
  const NegotiationModel m = TinyModel();
  CHECK_THROWS_AS(m.EncodeGoal(Goal{9, 1, 0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("config text round-trips and rejects bad values") {
  ModelConfig c = ModelConfig::Desk();
  c.attend_output = 1;
  CHECK(ModelConfig::FromString(c.ToString()) == c);
  CHECK_THROWS(ModelConfig::FromString("goal_embed=0"));
  CHECK_THROWS(ModelConfig::FromString("colour=3"));
  CHECK_THROWS(ModelConfig::FromString("attend_output=2"));
}

TEST_CASE("next-token distributions are normalized") {
  const NegotiationModel m = TinyModel();
  const Var g = m.EncodeGoal(Goal{1, 4, 2, 1, 4, 1});
  LmStepResult r = m.Start(g);
  CHECK(SumExp(r.log_probs) == doctest::Approx(1.0));
  CHECK(r.log_probs.size() == static_cast<size_t>(m.vocab_size()));
  r = m.Step(r.state, kWriteId, g);
  CHECK(SumExp(r.log_probs) == doctest::Approx(1.0));
}

TEST_CASE("output projection is tied to the word embedding") {
  const NegotiationModel m = TinyModel(3);
  const Var g = m.EncodeGoal(Goal{1, 4, 2, 1, 4, 1});
  const LmStepResult r = m.Start(g);
  const Tensor& e = m.params().Get("word_embed").value();
  const Tensor& proj = m.params().Get("lm_proj").value();
  const Tensor& h = r.state.h.value();
  const int d = m.config().word_embed;
  std::vector<double> logits(m.vocab_size());
  for (int w = 0; w < m.vocab_size(); ++w) {
    for (int i = 0; i < d; ++i) {
      double ph = 0.0;
      for (int j = 0; j < m.config().lm_hidden; ++j) {
        ph += proj.at(i, j) * h[j];
      }
      logits[w] += e.at(w, i) * ph;
    }
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l);
  for (int w = 0; w < m.vocab_size(); ++w) {
    CHECK(r.log_probs.value()[w] == doctest::Approx(logits[w] - std::log(z)));
  }
}

TEST_CASE("teacher forcing matches stepping") {
  const NegotiationModel m = TinyModel(4);
  const EncodedExample ex = TinyExample(m.vocab());
  const TeacherForced f = m.Forward(ex.goal, ex.tokens);
  REQUIRE(f.states.size() == ex.tokens.size());
  REQUIRE(f.log_probs.size() == ex.tokens.size());
  LmStepResult r = m.Start(f.goal_h);
  for (size_t t = 0; t < ex.tokens.size(); ++t) {
    CHECK(r.log_probs.value() == f.log_probs[t].value());
    r = m.Step(r.state, ex.tokens[t], f.goal_h);
    CHECK(r.state.h.value() == f.states[t].value());
  }
}

TEST_CASE("choice prediction") {
  for (int attend : {0, 1}) {
    ModelConfig c = TinyConfig();
    c.attend_output = attend;
    const NegotiationModel m = TinyModel(5, 0.5, c);
    const EncodedExample ex = TinyExample(m.vocab());
    const TeacherForced f = m.Forward(ex.goal, ex.tokens);
    const ChoicePrediction p = m.PredictChoice(ex.tokens, f.states, f.goal_h);
    CHECK(p.attention.size() == ex.tokens.size());
    double total = 0.0;
    for (double a : p.attention.value().values()) {
      CHECK(a >= 0.0);
      total += a;
    }
    CHECK(total == doctest::Approx(1.0));
    for (const Var& lp : p.log_probs) {
      CHECK(lp.size() == static_cast<size_t>(kNumOutputClasses));
      CHECK(SumExp(lp) == doctest::Approx(1.0));
    }
    std::vector<Var> short_states(f.states.begin(), f.states.end() - 1);
    CHECK_THROWS_AS(m.PredictChoice(ex.tokens, short_states, f.goal_h),
                    std::invalid_argument);
    CHECK_THROWS_AS(m.PredictChoice({}, {}, f.goal_h), std::invalid_argument);
  }
}

TEST_CASE("total loss combines both terms") {
  const NegotiationModel m = TinyModel(6);
  EncodedExample ex = TinyExample(m.vocab());
  const TeacherForced f = m.Forward(ex.goal, ex.tokens);
  const double nll = m.SequenceNll(f, ex.tokens).item();
  double manual = 0.0;
  for (size_t t = 0; t < ex.tokens.size(); ++t) {
    manual -= f.log_probs[t].value()[ex.tokens[t]];
  }
  CHECK(nll == doctest::Approx(manual));
  const ChoicePrediction p = m.PredictChoice(ex.tokens, f.states, f.goal_h);
  double out = 0.0;
  for (int i = 0; i < kNumOutputFields; ++i) {
    out -= p.log_probs[i].value()[(*ex.output)[i]];
  }
  CHECK(m.TotalLoss(ex, 0.5).item() == doctest::Approx(nll + 0.5 * out));
  CHECK(m.TotalLoss(ex, 0.0).item() == doctest::Approx(nll));
  CHECK_THROWS_AS(m.TotalLoss(ex, -1.0), std::invalid_argument);
  ex.output.reset();
  CHECK(m.TotalLoss(ex, 0.5).item() == doctest::Approx(nll));
}

TEST_CASE("full-model gradient on a three-token example") {
  NegotiationModel m = TinyModel(1, 1.0);
  TrainingExample raw;
  raw.goal = Goal{1, 4, 2, 1, 4, 1};
  raw.partner_goal = Goal{1, 2, 2, 2, 4, 1};
  raw.dialogue = {"write:", "deal", "<choose>"};
  raw.output = Output{1, 0, 0, 0, 2, 4};
  raw.trainable_output = true;
  const EncodedExample ex = EncodeExample(m.vocab(), raw);
  const GradCheckResult r = GradCheck(
      [&](ParamStore&) { return m.TotalLoss(ex, 0.5); }, m.params());
  INFO("worst " << r.worst_param << "[" << r.worst_index << "]");
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("output targets beyond four items are not trainable") {
  TrainingExample raw;
  raw.goal = Goal{5, 2, 0, 0, 0, 0};
  raw.dialogue = {"write:", "<choose>"};
  raw.output = Output{5, 0, 0, 0, 0, 0};
  raw.trainable_output = true;
  CHECK_FALSE(EncodeExample(TinyVocab(), raw).output.has_value());
}

TEST_CASE("checkpoints round-trip byte for byte") {
  const NegotiationModel m = TinyModel(7);
  std::stringstream first;
  m.Save(first);
  const std::string text = first.str();
  std::istringstream in(text);
  const NegotiationModel loaded = NegotiationModel::Load(in);
  CHECK(loaded.params().Checksum() == m.params().Checksum());
  CHECK(loaded.vocab() == m.vocab());
  CHECK(loaded.config() == m.config());
  std::stringstream second;
  loaded.Save(second);
  CHECK(second.str() == text);
  std::istringstream bad("NOT-A-CHECKPOINT\n");
  CHECK_THROWS(NegotiationModel::Load(bad));
  CHECK_THROWS(NegotiationModel::LoadFile("/nonexistent/model.ckpt"));
}

TEST_CASE("clones are independent") {
  NegotiationModel m = TinyModel(8);
  auto copy = m.Clone();
  CHECK(copy->params().Checksum() == m.params().Checksum());
  copy->params().Get("summary").mutable_value()[0] += 1.0;
  CHECK(copy->params().Checksum() != m.params().Checksum());
}

TEST_CASE("temperature sampling") {
  const std::vector<double> lp = {std::log(0.5), std::log(0.3), std::log(0.2)};
  const std::vector<TokenId> none;
  const auto p = TemperatureProbs(lp, 0.5);
  const auto expected = oracle::MaskedTemperatureProbs(lp, 0.5, none);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(expected[i]));
  CHECK(p[0] == doctest::Approx(0.25 / 0.38));

  std::mt19937_64 rng(3);
  const std::vector<TokenId> masked = {0};
  std::array<int, 3> counts{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) ++counts[SampleToken(lp, 0.5, rng, masked)];
  CHECK(counts[0] == 0);
  const double p1 = 0.09 / (0.09 + 0.04);
  const double se = std::sqrt(p1 * (1 - p1) / n);
  CHECK(std::abs(counts[1] / static_cast<double>(n) - p1) < 4 * se);

  const std::vector<TokenId> all = {0, 1, 2};
  CHECK_THROWS_AS(SampleToken(lp, 0.5, rng, all), std::invalid_argument);
  CHECK_THROWS_AS(SampleToken(lp, 0.0, rng), std::invalid_argument);
}

TEST_CASE("a zero model has perplexity equal to the vocabulary size") {
  NegotiationModel m = TinyModel();
  std::mt19937_64 rng(1);
  m.InitUniform(0.0, rng);
  const std::vector<EncodedExample> data = {TinyExample(m.vocab())};
  const PerplexityResult r = Perplexity(m, data);
  CHECK(r.perplexity == doctest::Approx(m.vocab_size()));
  CHECK(r.tokens == static_cast<long>(data[0].tokens.size()));
}

}  // namespace
}  // namespace negotiator
