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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "negotiator/train.h"

namespace negotiator {
namespace {

ModelConfig Tiny() {
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

struct Fixture {
  std::vector<EncodedExample> train, valid;
  Vocabulary vocab;
};

Fixture MakeFixture(int n) {
  std::mt19937_64 rng(42);
  const auto tr = RecordsToExamples(SynthCorpus(rng, n));
  const auto va = RecordsToExamples(SynthCorpus(rng, n / 2 + 1));
  Fixture f;
  f.vocab = BuildVocab(tr, 1);
  for (const auto& e : tr) f.train.push_back(EncodeExample(f.vocab, e));
  for (const auto& e : va) f.valid.push_back(EncodeExample(f.vocab, e));
  return f;
}

NegotiationModel MakeModel(const Vocabulary& v, uint64_t seed,
                           double range = 0.3) {
  NegotiationModel m(Tiny(), v);
  std::mt19937_64 rng(seed);
  m.InitUniform(range, rng);
  return m;
}

TEST_CASE("plain and momentum steps") {
  ParamStore s;
  Var p = s.Add("p", {1});
  p.mutable_value()[0] = 1.0;
  SgdOptimizer nesterov(0.1, 0.5);
  const double expected[] = {0.85, 0.675, 0.4875};
  for (double want : expected) {
    s.ZeroGrad();
    p.node()->MutableGrad()[0] = 1.0;
    p.node()->has_grad = true;
    nesterov.Step(s);
    CHECK(p.value()[0] == doctest::Approx(want));
  }
  SgdOptimizer plain(0.25, 0.0);
  s.ZeroGrad();
  p.node()->MutableGrad()[0] = 2.0;
  p.node()->has_grad = true;
  plain.Step(s);
  CHECK(p.value()[0] == doctest::Approx(0.4875 - 0.5));
}

TEST_CASE("discounted returns against a running baseline") {
  BaselineState b;
  const std::vector<int> pos = {0, 2, 4};
  const auto r1 = ComputeReturns(pos, 4, 8.0, b, 0.95);
  CHECK(r1[0] == doctest::Approx(8.0 * std::pow(0.95, 4)));
  CHECK(r1[1] == doctest::Approx(8.0 * 0.95 * 0.95));
  CHECK(r1[2] == doctest::Approx(8.0));
  CHECK(b.mean == doctest::Approx(8.0));
  const auto r2 = ComputeReturns(pos, 4, 6.0, b, 0.95);
  CHECK(r2[2] == doctest::Approx(-2.0));
  CHECK(b.mean == doctest::Approx(7.0));
  CHECK(b.count == 2);
  const std::vector<int> bad = {5};
  CHECK_THROWS_AS(ComputeReturns(bad, 4, 1.0, b, 0.95),
                  std::invalid_argument);
}

TEST_CASE("baseline is the running mean") {
  BaselineState b;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> r(0, 10);
  double sum = 0.0;
  for (int i = 1; i <= 500; ++i) {
    const int x = r(rng);
    sum += x;
    b.Update(x);
    CHECK(b.mean == doctest::Approx(sum / i));
  }
}

TEST_CASE("interleaving schedule") {
  CHECK(SupervisedUpdateDue(4, 4));
  CHECK(SupervisedUpdateDue(8, 4));
  CHECK_FALSE(SupervisedUpdateDue(3, 4));
  CHECK_FALSE(SupervisedUpdateDue(0, 4));
  CHECK_FALSE(SupervisedUpdateDue(4, 0));
  int due = 0;
  for (int n = 1; n <= 100; ++n) due += SupervisedUpdateDue(n, 4);
  CHECK(due == 25);
}

TEST_CASE("minibatch loss normalizes by tokens and output fields") {
  const Fixture f = MakeFixture(6);
  const NegotiationModel m = MakeModel(f.vocab, 3);
  std::vector<const EncodedExample*> batch;
  for (size_t i = 0; i < 4; ++i) batch.push_back(&f.train[i]);
  double nll = 0.0, out = 0.0;
  size_t tokens = 0, fields = 0;
  for (const EncodedExample* ex : batch) {
    const double token_only = m.TotalLoss(*ex, 0.0).item();
    nll += token_only;
    tokens += ex->tokens.size();
    if (ex->output) {
      out += m.TotalLoss(*ex, 1.0).item() - token_only;
      fields += kNumOutputFields;
    }
  }
  REQUIRE(fields > 0);
  const double want = nll / tokens + 0.5 * out / fields;
  CHECK(MinibatchLoss(m, batch, 0.5).item() == doctest::Approx(want));
  CHECK_THROWS_AS(MinibatchLoss(m, {}, 0.5), std::invalid_argument);
}

TEST_CASE("the policy-gradient surrogate has the right gradient") {
  const Fixture f = MakeFixture(4);
  NegotiationModel m = MakeModel(f.vocab, 5, 1.0);
  const EncodedExample& ex = f.train[0];
  std::vector<int> pos;
  std::vector<double> ret;
  for (int t = 1; t < static_cast<int>(ex.tokens.size()); t += 3) {
    pos.push_back(t);
    ret.push_back(0.5 - 0.1 * t);
  }
  const GradCheckResult r = GradCheck(
      [&](ParamStore&) {
        return ReinforceSurrogate(m, ex.goal, ex.tokens, pos, ret);
      },
      m.params());
  INFO("worst " << r.worst_param << "[" << r.worst_index << "]");
  CHECK(r.max_relative_error < 1e-4);
  const TeacherForced tf = m.Forward(ex.goal, ex.tokens);
  double manual = 0.0;
  for (size_t i = 0; i < pos.size(); ++i) {
    manual -= ret[i] * tf.log_probs[pos[i]].value()[ex.tokens[pos[i]]];
  }
  CHECK(ReinforceSurrogate(m, ex.goal, ex.tokens, pos, ret).item() ==
        doctest::Approx(manual));
}

TEST_CASE("positive returns raise the log-probability of chosen tokens") {
  const Fixture f = MakeFixture(4);
  NegotiationModel m = MakeModel(f.vocab, 6);
  const EncodedExample& ex = f.train[1];
  const std::vector<int> pos = {2, 3};
  const std::vector<double> ret = {1.0, 1.0};
  const double before = -ReinforceSurrogate(m, ex.goal, ex.tokens, pos, ret)
                             .item();
  CHECK(ReinforceUpdate(m, ex.goal, ex.tokens, pos, ret, 0.01, 10.0));
  const double after = -ReinforceSurrogate(m, ex.goal, ex.tokens, pos, ret)
                            .item();
  CHECK(after > before);

  const uint64_t sum = m.params().Checksum();
  CHECK_FALSE(ReinforceUpdate(m, ex.goal, ex.tokens, {}, {}, 0.01, 10.0));
  CHECK(m.params().Checksum() == sum);
}

TEST_CASE("supervised training keeps the best snapshot and anneals") {
  const Fixture f = MakeFixture(30);
  NegotiationModel m = MakeModel(f.vocab, 7);
  SupervisedConfig cfg;
  cfg.epochs = 6;
  cfg.learning_rate = 2.0;
  std::mt19937_64 rng(1);
  const TrainReport r = TrainSupervised(m, f.train, f.valid, cfg, rng);
  REQUIRE(r.epochs.size() == 6);
  double best = r.epochs[0].valid_ppl;
  for (const EpochRecord& e : r.epochs) best = std::min(best, e.valid_ppl);
  CHECK(r.best_valid_ppl == best);
  CHECK(r.epochs[r.best_epoch - 1].valid_ppl == best);
  CHECK(Perplexity(m, f.valid).perplexity == doctest::Approx(best));
  CHECK(r.epochs.back().valid_ppl >= best);

  // Learning rate holds until the first non-improving epoch, then falls by
  // the anneal factor every epoch.
  bool annealing = false;
  for (size_t i = 1; i < r.epochs.size(); ++i) {
    const double prev_lr = r.epochs[i - 1].learning_rate;
    const double want = annealing ? prev_lr / cfg.anneal_factor : prev_lr;
    CHECK(r.epochs[i].learning_rate == doctest::Approx(want));
    double best_before = r.epochs[0].valid_ppl;
    for (size_t j = 0; j < i; ++j) {
      best_before = std::min(best_before, r.epochs[j].valid_ppl);
    }
    if (r.epochs[i].valid_ppl >= best_before) annealing = true;
  }

  NegotiationModel again = MakeModel(f.vocab, 7);
  std::mt19937_64 rng2(1);
  CHECK(TrainSupervised(again, f.train, f.valid, cfg, rng2) == r);
  CHECK(again.params().Checksum() == m.params().Checksum());

  std::ostringstream report;
  WriteTrainReport(report, r);
  const std::string text = report.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  SupervisedConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(TrainSupervised(m, f.train, f.valid, bad, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(TrainSupervised(m, {}, f.valid, cfg, rng),
                  std::invalid_argument);
}

TEST_CASE("self-play leaves the partner untouched") {
  const Fixture f = MakeFixture(10);
  NegotiationModel learner = MakeModel(f.vocab, 8);
  const NegotiationModel partner = MakeModel(f.vocab, 8);
  const uint64_t partner_sum = partner.params().Checksum();
  const uint64_t learner_sum = learner.params().Checksum();
  RlConfig cfg;
  cfg.episodes = 24;
  cfg.sup_batch_size = 2;
  cfg.engine.token_cap = 12;
  cfg.engine.turn_cap = 6;
  std::mt19937_64 rng(2);
  int calls = 0;
  const RlReport r = TrainRl(
      learner, partner, [](std::mt19937_64& g) { return SampleScenario(g); },
      f.train, cfg, rng, [&](int done, const RlReport&) { calls = done; });
  CHECK(calls == 24);
  REQUIRE(r.episodes.size() == 24);
  for (size_t i = 0; i < r.episodes.size(); ++i) {
    CHECK(r.episodes[i].learner_first == (i % 2 == 0));
    CHECK(r.episodes[i].reward >= 0);
    CHECK(r.episodes[i].reward <= kTotalValue);
    if (!r.episodes[i].agreed) CHECK(r.episodes[i].reward == 0);
  }
  const int updates = 24 - r.skipped_updates;
  CHECK(r.supervised_updates == updates / cfg.interleave_period);
  CHECK(partner.params().Checksum() == partner_sum);
  CHECK(learner.params().Checksum() != learner_sum);

  RlConfig no_sup = cfg;
  CHECK_THROWS_AS(TrainRl(learner, partner,
                          [](std::mt19937_64& g) { return SampleScenario(g); },
                          {}, no_sup, rng),
                  std::invalid_argument);
  no_sup.gamma = 0.0;
  CHECK_THROWS_AS(no_sup.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace negotiator
