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

// Command-line entry point. Every subcommand is deterministic given --seed;
// progress goes to stderr and results to files or stdout.

#include <httplib.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "negotiator/agents.h"
#include "negotiator/config.h"
#include "negotiator/corpus.h"
#include "negotiator/eval.h"
#include "negotiator/live.h"
#include "negotiator/model.h"
#include "negotiator/service.h"
#include "negotiator/train.h"

namespace negotiator {
namespace {

struct Common {
  uint64_t seed = 0;
  std::string config_path;

  RunConfig Load() const {
    return config_path.empty() ? RunConfig{} : LoadRunConfig(config_path);
  }
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master random seed");
  cmd->add_option("--config", c.config_path, "JSON settings file")
      ->check(CLI::ExistingFile);
}

// Opens `path` for writing, or stdout for "-" or empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw std::runtime_error("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<Scenario> SampleScenarios(uint64_t seed, int n,
                                      const ScenarioGeneratorConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::vector<Scenario> out;
  for (int i = 0; i < n; ++i) out.push_back(SampleScenario(rng, cfg));
  return out;
}

std::vector<EncodedExample> EncodeAll(const Vocabulary& v,
                                      const std::vector<TrainingExample>& d) {
  std::vector<EncodedExample> out;
  out.reserve(d.size());
  for (const auto& ex : d) out.push_back(EncodeExample(v, ex));
  return out;
}

int GenData(const Common& c, int n, const std::string& out) {
  const RunConfig cfg = c.Load();
  std::mt19937_64 rng(c.seed);
  const auto data = RecordsToExamples(SynthCorpus(rng, n, cfg.synth));
  Output o(out);
  WriteCorpus(o.stream(), data);
  return 0;
}

int BuildVocabCmd(const Common& c, const std::string& train, int min_count,
                  const std::string& out) {
  const RunConfig cfg = c.Load();
  const auto data = ReadCorpusFile(train);
  Output o(out);
  WriteVocab(o.stream(), BuildVocab(data, min_count > 0 ? min_count
                                                        : cfg.vocab_min_count));
  return 0;
}

int TrainSv(const Common& c, const std::string& train_path,
            const std::string& valid_path, const std::string& vocab_path,
            const std::string& out, const std::string& report_path) {
  const RunConfig cfg = c.Load();
  const auto train = ReadCorpusFile(train_path);
  const auto valid = ReadCorpusFile(valid_path);
  Vocabulary vocab;
  if (vocab_path.empty()) {
    vocab = BuildVocab(train, cfg.vocab_min_count);
  } else {
    std::ifstream in(vocab_path);
    if (!in) throw std::runtime_error("cannot read '" + vocab_path + "'");
    vocab = ReadVocab(in);
  }
  std::mt19937_64 rng(c.seed);
  NegotiationModel model(cfg.model, vocab);
  model.InitUniform(cfg.supervised.init_range, rng);
  const auto tr = EncodeAll(vocab, train);
  const auto va = EncodeAll(vocab, valid);
  const TrainReport report =
      TrainSupervised(model, tr, va, cfg.supervised, rng);
  model.SaveFile(out);
  if (!report_path.empty()) {
    Output o(report_path);
    WriteTrainReport(o.stream(), report);
  }
  std::cerr << "best epoch " << report.best_epoch << " valid ppl "
            << report.best_valid_ppl << "\n";
  return 0;
}

int TrainRlCmd(const Common& c, const std::string& model_path,
               const std::string& partner_path, const std::string& train_path,
               int episodes, const std::string& out,
               const std::string& report_path) {
  RunConfig cfg = c.Load();
  if (episodes > 0) cfg.rl.episodes = episodes;
  NegotiationModel learner = NegotiationModel::LoadFile(model_path);
  const NegotiationModel partner = NegotiationModel::LoadFile(
      partner_path.empty() ? model_path : partner_path);
  if (!(partner.vocab() == learner.vocab())) {
    throw std::runtime_error("learner and partner vocabularies differ");
  }
  const auto sup = EncodeAll(learner.vocab(), ReadCorpusFile(train_path));
  const uint64_t before = partner.params().Checksum();
  std::mt19937_64 rng(c.seed);
  const ScenarioGeneratorConfig scen = cfg.synth.scenarios;
  const RlReport report = TrainRl(
      learner, partner, [&](std::mt19937_64& r) { return SampleScenario(r, scen); },
      sup, cfg.rl, rng, [](int done, const RlReport& r) {
        if (done % 250 != 0) return;
        double sum = 0.0;
        const int from = std::max<int>(0, done - 250);
        for (int i = from; i < done; ++i) sum += r.episodes[i].reward;
        std::cerr << "episode " << done << " mean reward (last 250) "
                  << sum / (done - from) << "\n";
      });
  const uint64_t after = partner.params().Checksum();
  if (before != after) throw std::logic_error("partner parameters changed");
  learner.SaveFile(out);
  if (!report_path.empty()) {
    Output o(report_path);
    o.stream() << "# episode reward partner_reward agreed learner_first\n";
    for (size_t i = 0; i < report.episodes.size(); ++i) {
      const EpisodeRecord& e = report.episodes[i];
      o.stream() << i + 1 << ' ' << e.reward << ' ' << e.partner_reward << ' '
                 << e.agreed << ' ' << e.learner_first << '\n';
    }
    o.stream() << "# supervised_updates=" << report.supervised_updates
               << " skipped_updates=" << report.skipped_updates
               << " partner_checksum=" << after << '\n';
  }
  return 0;
}

struct PairingArgs {
  std::string model_a, model_b, policy_a = "likelihood",
                                policy_b = "likelihood";
  int dialogues = 0;
  int threads = 0;
};

int EvalCmd(const Common& c, const PairingArgs& p, const std::string& out,
            bool key_values) {
  const RunConfig cfg = c.Load();
  const NegotiationModel ma = NegotiationModel::LoadFile(p.model_a);
  const NegotiationModel mb = NegotiationModel::LoadFile(p.model_b);
  const ModelForward fa(ma), fb(mb);
  const int dialogues = p.dialogues > 0 ? p.dialogues : cfg.eval.dialogues;
  const int per = cfg.eval.role_swap ? 2 : 1;
  if (dialogues % per != 0) {
    throw std::invalid_argument("role-swapped evaluation needs an even "
                                "dialogue count");
  }
  const auto scenarios =
      SampleScenarios(c.seed, dialogues / per, cfg.synth.scenarios);
  EvalOptions opts;
  opts.role_swap = cfg.eval.role_swap;
  opts.seed = DeriveSeed(c.seed, 1);
  opts.engine = cfg.engine;
  opts.threads = p.threads > 0 ? p.threads : cfg.eval.threads;
  const AgentSpec a{&fa, Policy::Parse(p.policy_a)};
  const AgentSpec b{&fb, Policy::Parse(p.policy_b)};
  const MetricsReport r = EvaluatePairing(a, b, scenarios, opts);
  Output o(out);
  const std::vector<std::pair<std::string, MetricsReport>> rows = {
      {a.policy.ToString() + " vs " + b.policy.ToString(), r}};
  WriteMetricsTable(o.stream(), rows);
  if (key_values) WriteMetricsKeyValues(o.stream(), "", r);
  return 0;
}

int SelfPlay(const Common& c, const PairingArgs& p, const std::string& out) {
  const RunConfig cfg = c.Load();
  const NegotiationModel ma = NegotiationModel::LoadFile(p.model_a);
  const NegotiationModel mb = NegotiationModel::LoadFile(
      p.model_b.empty() ? p.model_a : p.model_b);
  const ModelForward fa(ma), fb(mb);
  const int n = p.dialogues > 0 ? p.dialogues : cfg.eval.dialogues;
  const auto scenarios = SampleScenarios(c.seed, n, cfg.synth.scenarios);
  const Policy pa = Policy::Parse(p.policy_a);
  const Policy pb = Policy::Parse(p.policy_b);
  Output o(out);
  for (int i = 0; i < n; ++i) {
    const Scenario& s = scenarios[i];
    const uint64_t seed = DeriveSeed(DeriveSeed(c.seed, 1), i);
    AgentSession sa(fa, MakeGoal(s.pool, s.valuation_a), pa,
                    DeriveSeed(seed, 0), cfg.engine);
    AgentSession sb(fb, MakeGoal(s.pool, s.valuation_b), pb,
                    DeriveSeed(seed, 1), cfg.engine);
    DumpTranscript(o.stream(), RunDialogue(sa, sb, s, cfg.engine),
                   ma.vocab());
  }
  return 0;
}

int Stats(const std::string& data_path, const std::string& out) {
  const auto data = ReadCorpusFile(data_path);
  Output o(out);
  WriteCorpusStats(o.stream(), CorpusStats(data));
  return 0;
}

std::string FormatCountsLine(const char* label, const Counts& c) {
  std::ostringstream s;
  s << label;
  for (int i = 0; i < kNumItemTypes; ++i) {
    s << ' ' << kItemNames[i] << '=' << c[i];
  }
  return s.str();
}

std::optional<Allocation> ParseTake(const std::string& line) {
  std::istringstream in(line);
  Allocation a;
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (!(in >> a.take[i])) throw SessionError("bad_request", "need 3 integers");
  }
  return a;
}

int Chat(const Common& c, const std::string& model_path,
         const std::string& policy, std::istream& in, std::ostream& out) {
  const RunConfig cfg = c.Load();
  const NegotiationModel model = NegotiationModel::LoadFile(model_path);
  const ModelForward fwd(model);
  std::mt19937_64 rng(c.seed);
  const Scenario s = SampleScenario(rng, cfg.synth.scenarios);
  LiveSession session("chat", s, fwd, model.vocab(), Policy::Parse(policy),
                      DeriveSeed(c.seed, 1), Clock::now(), cfg.engine);
  out << FormatCountsLine("pool:", s.pool.counts) << '\n'
      << FormatCountsLine("your values:", s.valuation_a.values) << '\n'
      << "Type a message; end one with <choose> to finish.\n";
  std::string line;
  while (session.state() != LiveState::kDone) {
    if (session.state() == LiveState::kAwaitingSelections) {
      out << "your take (book hat ball) or no_agreement> " << std::flush;
    } else {
      out << "you> " << std::flush;
    }
    if (!std::getline(in, line)) return 1;
    try {
      if (session.state() == LiveState::kAwaitingSelections) {
        const bool none = NormalizeMessage(line) ==
                          std::vector<std::string>{"no_agreement"};
        session.PostSelection(none ? std::nullopt : ParseTake(line),
                              Clock::now());
      } else {
        for (const LiveEvent& e : session.PostMessage(line, Clock::now())) {
          if (e.speaker == Speaker::kB) out << "agent: " << e.text << '\n';
        }
      }
    } catch (const SessionError& e) {
      out << "error: " << e.what() << '\n';
    }
  }
  const DealOutcome& o = *session.outcome();
  out << (o.agreed ? "agreement" : "no agreement") << ": you " << o.reward_a
      << ", agent " << o.reward_b << '\n'
      << FormatCountsLine("agent values:", s.valuation_b.values) << '\n';
  return 0;
}

int Serve(const Common& c, const std::vector<std::string>& model_args,
          const std::string& policy, const std::string& host, int port,
          const std::string& static_dir, int capacity) {
  const RunConfig cfg = c.Load();
  std::vector<std::unique_ptr<NegotiationModel>> models;
  std::vector<std::unique_ptr<ModelForward>> forwards;
  std::vector<LiveAgent> agents;
  for (const std::string& arg : model_args) {
    const size_t eq = arg.find('=');
    const std::string name = eq == std::string::npos ? "default" : arg.substr(0, eq);
    const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
    models.push_back(
        std::make_unique<NegotiationModel>(NegotiationModel::LoadFile(path)));
    forwards.push_back(std::make_unique<ModelForward>(*models.back()));
    agents.push_back(LiveAgent{name, forwards.back().get(),
                               &models.back()->vocab(), Policy::Parse(policy)});
  }
  SessionManagerConfig mcfg;
  mcfg.capacity = capacity;
  mcfg.seed = c.seed;
  mcfg.scenarios = cfg.synth.scenarios;
  mcfg.engine = cfg.engine;
  SessionManager manager(std::move(agents), mcfg);
  SessionService service(manager, static_dir);
  httplib::Server server;
  service.Register(server);
  std::cerr << "listening on " << host << ':' << port << "\n";
  if (!server.listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" +
                             std::to_string(port));
  }
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"Negotiation dialogue agents: data, training, evaluation and "
               "live play."};
  app.require_subcommand(1);

  Common common;
  int n = 0;
  int min_count = 0;
  int episodes = 0;
  std::string out, train, valid, vocab, report, model, partner, data;
  PairingArgs pairing;
  bool key_values = false;
  std::string policy = "likelihood";
  std::vector<std::string> serve_models;
  std::string host = "127.0.0.1";
  std::string static_dir;
  int port = 8080;
  int capacity = 64;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic corpus");
  AddCommon(gen, common);
  gen->add_option("--n", n, "Number of dialogues")->required()
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "Output corpus path (stdout if omitted)");

  auto* bv = app.add_subcommand("build-vocab", "Build a vocabulary file");
  AddCommon(bv, common);
  bv->add_option("--train", train, "Corpus")->required();
  bv->add_option("--min-count", min_count, "Minimum word count");
  bv->add_option("--out", out, "Vocabulary path");

  auto* sv = app.add_subcommand("train-sv", "Supervised training");
  AddCommon(sv, common);
  sv->add_option("--train", train, "Training corpus")->required();
  sv->add_option("--valid", valid, "Validation corpus")->required();
  sv->add_option("--vocab", vocab, "Vocabulary file (built from --train "
                                   "if omitted)");
  sv->add_option("--out", out, "Checkpoint path")->required();
  sv->add_option("--report", report, "Per-epoch report path");

  auto* rl = app.add_subcommand("train-rl", "Goal-based self-play training");
  AddCommon(rl, common);
  rl->add_option("--model", model, "Supervised checkpoint")->required();
  rl->add_option("--partner", partner, "Frozen partner (default: --model)");
  rl->add_option("--train", train, "Corpus for interleaved supervised "
                                   "updates")->required();
  rl->add_option("--episodes", episodes, "Override episode count");
  rl->add_option("--out", out, "Checkpoint path")->required();
  rl->add_option("--report", report, "Per-episode report path");

  auto add_pairing = [&](CLI::App* cmd, bool b_required) {
    AddCommon(cmd, common);
    cmd->add_option("--model-a", pairing.model_a, "Agent a checkpoint")
        ->required();
    auto* mb = cmd->add_option("--model-b", pairing.model_b,
                               "Agent b checkpoint");
    if (b_required) mb->required();
    cmd->add_option("--policy-a", pairing.policy_a,
                    "likelihood | rollout | rollout:C,S");
    cmd->add_option("--policy-b", pairing.policy_b,
                    "likelihood | rollout | rollout:C,S");
    cmd->add_option("--dialogues", pairing.dialogues, "Dialogue count");
    cmd->add_option("--out", out, "Output path (stdout if omitted)");
  };
  auto* ev = app.add_subcommand("eval", "Score a pairing of agents");
  add_pairing(ev, true);
  ev->add_option("--threads", pairing.threads, "Worker threads");
  ev->add_flag("--kv", key_values, "Append key=value lines");

  auto* sp = app.add_subcommand("selfplay", "Dump self-play transcripts");
  add_pairing(sp, false);

  auto* st = app.add_subcommand("stats", "Corpus statistics");
  st->add_option("--data", data, "Corpus")->required();
  st->add_option("--out", out, "Output path (stdout if omitted)");

  auto* chat = app.add_subcommand("chat", "Negotiate with an agent in the "
                                          "terminal");
  AddCommon(chat, common);
  chat->add_option("--model", model, "Checkpoint")->required();
  chat->add_option("--policy", policy, "Agent policy");

  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  AddCommon(serve, common);
  serve->add_option("--model", serve_models, "Checkpoint, or name=path; "
                                             "repeatable")->required();
  serve->add_option("--policy", policy, "Agent policy");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--static", static_dir, "Directory served at /");
  serve->add_option("--capacity", capacity, "Maximum live sessions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*gen) return GenData(common, n, out);
    if (*bv) return BuildVocabCmd(common, train, min_count, out);
    if (*sv) return TrainSv(common, train, valid, vocab, out, report);
    if (*rl) {
      return TrainRlCmd(common, model, partner, train, episodes, out, report);
    }
    if (*ev) return EvalCmd(common, pairing, out, key_values);
    if (*sp) return SelfPlay(common, pairing, out);
    if (*st) return Stats(data, out);
    if (*chat) return Chat(common, model, policy, std::cin, std::cout);
    if (*serve) {
      return Serve(common, serve_models, policy, host, port, static_dir,
                   capacity);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace
}  // namespace negotiator

int main(int argc, char** argv) { return negotiator::Main(argc, argv); }
