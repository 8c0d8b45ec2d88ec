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

#include "negotiator/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace negotiator {

namespace {

constexpr std::string_view kCheckpointMagic = "NEGOTIATOR-CKPT";
constexpr std::string_view kCheckpointVersion = "v1";

GruWeights AddGru(ParamStore& store, const std::string& prefix, int input,
                  int hidden) {
  GruWeights g;
  g.w_z = store.Add(prefix + ".w_z", {hidden, input});
  g.u_z = store.Add(prefix + ".u_z", {hidden, hidden});
  g.b_z = store.Add(prefix + ".b_z", {hidden});
  g.w_r = store.Add(prefix + ".w_r", {hidden, input});
  g.u_r = store.Add(prefix + ".u_r", {hidden, hidden});
  g.b_r = store.Add(prefix + ".b_r", {hidden});
  g.w_h = store.Add(prefix + ".w_h", {hidden, input});
  g.u_h = store.Add(prefix + ".u_h", {hidden, hidden});
  g.b_h = store.Add(prefix + ".b_h", {hidden});
  return g;
}

std::vector<std::pair<std::string, int*>> ConfigFields(ModelConfig& c) {
  return {{"goal_embed", &c.goal_embed}, {"word_embed", &c.word_embed},
          {"goal_hidden", &c.goal_hidden}, {"lm_hidden", &c.lm_hidden},
          {"sel_hidden", &c.sel_hidden},   {"summary", &c.summary},
          {"attention", &c.attention}, {"attend_output", &c.attend_output}};
}

int ContextSize(const ModelConfig& c) {
  return c.attend_output ? 2 * c.sel_hidden : c.lm_hidden;
}

}  // namespace

ModelConfig ModelConfig::Desk() {
  ModelConfig c;
  c.goal_embed = 16;
  c.word_embed = 32;
  c.goal_hidden = 16;
  c.lm_hidden = 48;
  c.sel_hidden = 32;
  c.summary = 32;
  c.attention = 32;
  return c;
}

void ModelConfig::Validate() const {
  ModelConfig copy = *this;
  if (attend_output != 0 && attend_output != 1) {
    throw std::invalid_argument("model config: attend_output must be 0 or 1");
  }
  for (const auto& [name, value] : ConfigFields(copy)) {
    if (value == &copy.attend_output) continue;
    if (*value <= 0) {
      throw std::invalid_argument("model config: " + name +
                                  " must be positive");
    }
  }
}

std::string ModelConfig::ToString() const {
  ModelConfig copy = *this;
  std::string out;
  for (const auto& [name, value] : ConfigFields(copy)) {
    if (!out.empty()) out += ' ';
    out += name + "=" + std::to_string(*value);
  }
  return out;
}

ModelConfig ModelConfig::FromString(const std::string& line) {
  ModelConfig c;
  auto fields = ConfigFields(c);
  std::istringstream in(line);
  std::string item;
  while (in >> item) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("model config: bad field '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const auto& f) { return f.first == key; });
    if (it == fields.end()) {
      throw std::invalid_argument("model config: unknown field '" + key + "'");
    }
    *it->second = std::stoi(item.substr(eq + 1));
  }
  c.Validate();
  return c;
}

int GoalToken(int field, int value) {
  if (field < 0 || field >= kNumOutputFields) {
    throw std::invalid_argument("goal field out of range");
  }
  if (field % 2 == 0) {
    if (value < 0 || value > kMaxGoalCount) {
      throw std::invalid_argument("goal count " + std::to_string(value) +
                                  " outside [0, 7]");
    }
    return value;
  }
  if (value < 0 || value > kMaxItemValue) {
    throw std::invalid_argument("goal value " + std::to_string(value) +
                                " outside [0, 10]");
  }
  return kMaxGoalCount + 1 + value;
}

EncodedExample EncodeExample(const Vocabulary& vocab,
                             const TrainingExample& ex) {
  EncodedExample out;
  out.goal = ex.goal;
  out.tokens = Encode(vocab, ex.dialogue);
  if (ex.trainable_output && ex.output) {
    OutputClasses classes{};
    bool representable = true;
    for (int i = 0; i < kNumOutputFields; ++i) {
      const int v = (*ex.output)[i];
      representable = representable && v >= 0 && v <= kMaxClassCount;
      classes[i] = v;
    }
    if (representable) out.output = classes;
  }
  return out;
}

NegotiationModel::NegotiationModel(const ModelConfig& config, Vocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.Validate();
  const ModelConfig& c = config_;
  const int v = vocab_.size();
  goal_embed_ = params_.Add("goal_embed", {kNumGoalTokens, c.goal_embed});
  goal_gru_ = AddGru(params_, "goal_gru", c.goal_embed, c.goal_hidden);
  word_embed_ = params_.Add("word_embed", {v, c.word_embed});
  lm_h0_ = params_.Add("lm_h0", {c.lm_hidden});
  lm_gru_ = AddGru(params_, "lm_gru", c.word_embed + c.goal_hidden,
                   c.lm_hidden);
  lm_proj_ = params_.Add("lm_proj", {c.word_embed, c.lm_hidden});
  sel_fwd_ = AddGru(params_, "sel_fwd_gru", c.word_embed + c.lm_hidden,
                    c.sel_hidden);
  sel_bwd_ = AddGru(params_, "sel_bwd_gru", c.word_embed + c.lm_hidden,
                    c.sel_hidden);
  attn_inner_ = params_.Add("attn_inner", {c.attention, 2 * c.sel_hidden});
  attn_outer_ = params_.Add("attn_outer", {c.attention, c.attention});
  attn_score_ = params_.Add("attn_score", {c.attention});
  summary_ = params_.Add("summary", {c.summary, c.goal_hidden + ContextSize(c)});
  for (int i = 0; i < kNumOutputFields; ++i) {
    choice_[i] = params_.Add("choice" + std::to_string(i),
                             {kNumOutputClasses, c.summary});
  }
}

void NegotiationModel::InitUniform(double range, std::mt19937_64& rng) {
  params_.InitUniform(range, rng);
}

std::unique_ptr<NegotiationModel> NegotiationModel::Clone() const {
  auto out = std::make_unique<NegotiationModel>(config_, vocab_);
  out->params_.CopyValuesFrom(params_);
  return out;
}

Var NegotiationModel::Embed(TokenId token) const {
  if (token < 0 || token >= vocab_.size()) {
    throw std::invalid_argument("token id " + std::to_string(token) +
                                " outside vocabulary");
  }
  return Gather(word_embed_, token);
}

Var NegotiationModel::EncodeGoal(const Goal& goal) const {
  Var h = Constant(Tensor(Shape{config_.goal_hidden}));
  for (int i = 0; i < kNumOutputFields; ++i) {
    h = GruCell(goal_gru_, h, Gather(goal_embed_, GoalToken(i, goal[i])));
  }
  return h;
}

LmStepResult NegotiationModel::Start(const Var& goal_h) const {
  return Step(LmState{lm_h0_}, kPadId, goal_h);
}

LmStepResult NegotiationModel::Step(const LmState& state, TokenId input,
                                    const Var& goal_h) const {
  Var h = GruCell(lm_gru_, state.h, Concat(Embed(input), goal_h));
  Var logits = MatVec(word_embed_, MatVec(lm_proj_, h));
  return LmStepResult{LmState{h}, LogSoftmax(logits)};
}

TeacherForced NegotiationModel::Forward(const Goal& goal,
                                        std::span<const TokenId> tokens) const {
  TeacherForced f;
  f.goal_h = EncodeGoal(goal);
  f.states.reserve(tokens.size());
  f.log_probs.reserve(tokens.size());
  LmStepResult step = Start(f.goal_h);
  for (TokenId token : tokens) {
    f.log_probs.push_back(step.log_probs);
    step = Step(step.state, token, f.goal_h);
    f.states.push_back(step.state.h);
  }
  return f;
}

ChoicePrediction NegotiationModel::PredictChoice(
    std::span<const TokenId> tokens, std::span<const Var> states,
    const Var& goal_h) const {
  if (tokens.size() != states.size()) {
    throw std::invalid_argument("predict choice: " +
                                std::to_string(tokens.size()) +
                                " tokens but " + std::to_string(states.size()) +
                                " states");
  }
  if (tokens.empty()) {
    throw std::invalid_argument("predict choice: empty dialogue");
  }
  const size_t n = tokens.size();
  std::vector<Var> inputs(n);
  for (size_t t = 0; t < n; ++t) {
    inputs[t] = Concat(Embed(tokens[t]), states[t]);
  }
  const Var zero = Constant(Tensor(Shape{config_.sel_hidden}));
  std::vector<Var> fwd(n);
  std::vector<Var> bwd(n);
  Var h = zero;
  for (size_t t = 0; t < n; ++t) fwd[t] = h = GruCell(sel_fwd_, h, inputs[t]);
  h = zero;
  for (size_t t = n; t-- > 0;) bwd[t] = h = GruCell(sel_bwd_, h, inputs[t]);

  std::vector<Var> scores(n);
  for (size_t t = 0; t < n; ++t) {
    Var ho = Concat(bwd[t], fwd[t]);
    Var ha = MatVec(attn_outer_, Tanh(MatVec(attn_inner_, ho)));
    scores[t] = Dot(attn_score_, ha);
  }
  ChoicePrediction out;
  out.attention = Softmax(Concat(scores));
  std::vector<Var> attended;
  if (config_.attend_output) {
    attended.reserve(n);
    for (size_t t = 0; t < n; ++t) attended.push_back(Concat(bwd[t], fwd[t]));
  }
  Var context = VecMat(out.attention,
                       Stack(config_.attend_output ? std::span<const Var>(attended)
                                                   : states));
  Var hs = Tanh(MatVec(summary_, Concat(goal_h, context)));
  for (int i = 0; i < kNumOutputFields; ++i) {
    out.log_probs[i] = LogSoftmax(MatVec(choice_[i], hs));
  }
  return out;
}

Var NegotiationModel::SequenceNll(const TeacherForced& f,
                                  std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("sequence nll: no tokens");
  std::vector<Var> terms(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t) {
    terms[t] = Pick(f.log_probs[t], tokens[t]);
  }
  return Scale(AddN(terms), -1.0);
}

Var NegotiationModel::TotalLoss(const EncodedExample& ex, double alpha) const {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  TeacherForced f = Forward(ex.goal, ex.tokens);
  Var loss = SequenceNll(f, ex.tokens);
  if (!ex.output || alpha == 0.0) return loss;
  ChoicePrediction choice = PredictChoice(ex.tokens, f.states, f.goal_h);
  std::vector<Var> terms(kNumOutputFields);
  for (int i = 0; i < kNumOutputFields; ++i) {
    terms[i] = Pick(choice.log_probs[i], (*ex.output)[i]);
  }
  return Sub(loss, Scale(AddN(terms), alpha));
}

void NegotiationModel::Save(std::ostream& out) const {
  out << kCheckpointMagic << ' ' << kCheckpointVersion
      << " vocab=" << vocab_.size() << '\n';
  out << "#config " << config_.ToString() << '\n';
  out << "#vocab";
  for (int i = kNumSpecialTokens; i < vocab_.size(); ++i) {
    out << ' ' << vocab_.Word(i);
  }
  out << '\n';
  WriteParamRecords(out, params_);
}

NegotiationModel NegotiationModel::Load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("checkpoint: empty input");
  }
  std::istringstream header(line);
  std::string magic, version, vocab_field;
  header >> magic >> version >> vocab_field;
  if (magic != kCheckpointMagic || version != kCheckpointVersion ||
      vocab_field.rfind("vocab=", 0) != 0) {
    throw std::runtime_error("checkpoint: bad header '" + line + "'");
  }
  const int vocab_size = std::stoi(vocab_field.substr(6));

  ModelConfig config;
  std::vector<std::string> words;
  bool have_config = false;
  bool have_vocab = false;
  while (in.peek() == '#') {
    std::getline(in, line);
    if (line.rfind("#config", 0) == 0) {
      config = ModelConfig::FromString(line.substr(7));
      have_config = true;
    } else if (line.rfind("#vocab", 0) == 0) {
      std::istringstream ws(line.substr(6));
      std::string w;
      while (ws >> w) words.push_back(w);
      have_vocab = true;
    }
  }
  if (!have_config || !have_vocab) {
    throw std::runtime_error("checkpoint: missing #config or #vocab line");
  }
  Vocabulary vocab(words);
  if (vocab.size() != vocab_size) {
    throw std::runtime_error("checkpoint: header says vocab=" +
                             std::to_string(vocab_size) + " but found " +
                             std::to_string(vocab.size()));
  }
  NegotiationModel model(config, std::move(vocab));
  ReadParamRecords(in, model.params_);
  return model;
}

void NegotiationModel::SaveFile(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  Save(out);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

NegotiationModel NegotiationModel::LoadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return Load(in);
}

std::vector<double> TemperatureProbs(std::span<const double> log_probs,
                                     double temperature,
                                     std::span<const TokenId> masked) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("temperature must be positive");
  }
  const size_t n = log_probs.size();
  std::vector<bool> allowed(n, true);
  for (TokenId m : masked) {
    if (m >= 0 && static_cast<size_t>(m) < n) allowed[m] = false;
  }
  double mx = -INFINITY;
  for (size_t i = 0; i < n; ++i) {
    if (allowed[i]) mx = std::max(mx, log_probs[i] / temperature);
  }
  if (!std::isfinite(mx)) {
    throw std::invalid_argument("no token left to sample");
  }
  std::vector<double> p(n, 0.0);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!allowed[i]) continue;
    p[i] = std::exp(log_probs[i] / temperature - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

TokenId SampleToken(std::span<const double> log_probs, double temperature,
                    std::mt19937_64& rng, std::span<const TokenId> masked) {
  const std::vector<double> p = TemperatureProbs(log_probs, temperature, masked);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  TokenId last = -1;
  for (size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = static_cast<TokenId>(i);
    if (u < acc) return last;
  }
  return last;
}

PerplexityResult Perplexity(const NegotiationModel& model,
                            std::span<const EncodedExample> data) {
  NoGradGuard no_grad;
  PerplexityResult r;
  for (const EncodedExample& ex : data) {
    if (ex.tokens.empty()) continue;
    TeacherForced f = model.Forward(ex.goal, ex.tokens);
    r.nll += model.SequenceNll(f, ex.tokens).item();
    r.tokens += static_cast<long>(ex.tokens.size());
  }
  if (r.tokens == 0) throw std::invalid_argument("perplexity: no tokens");
  r.perplexity = std::exp(r.nll / static_cast<double>(r.tokens));
  return r;
}

}  // namespace negotiator
