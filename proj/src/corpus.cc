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

#include "negotiator/corpus.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace negotiator {

namespace {

constexpr std::array<std::string_view, kNumSpecialTokens> kSpecials = {
    kWrite, kRead, kChoose, kUnk, kPad, kNoAgreement};

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

int ParseInt(const std::string& s, const char* what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("record: non-integer ") + what +
                                " field '" + s + "'");
  }
  return value;
}

}  // namespace

bool IsMarker(std::string_view word) { return word == kWrite || word == kRead; }

bool IsSpecial(std::string_view word) {
  return std::find(kSpecials.begin(), kSpecials.end(), word) !=
         kSpecials.end();
}

Vocabulary::Vocabulary() {
  for (std::string_view s : kSpecials) Add(std::string(s));
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) : Vocabulary() {
  for (const std::string& w : words) {
    if (IsSpecial(w)) {
      throw std::invalid_argument("vocabulary: special token '" + w +
                                  "' listed as a word");
    }
    if (ids_.count(w)) {
      throw std::invalid_argument("vocabulary: duplicate word '" + w + "'");
    }
    Add(w);
  }
}

void Vocabulary::Add(const std::string& word) {
  ids_.emplace(word, static_cast<TokenId>(words_.size()));
  words_.push_back(word);
}

TokenId Vocabulary::Id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::Contains(std::string_view word) const {
  return ids_.count(std::string(word)) > 0;
}

const std::string& Vocabulary::Word(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("vocabulary: token id " + std::to_string(id) +
                            " outside [0, " + std::to_string(size()) + ")");
  }
  return words_[id];
}

std::vector<TokenId> Encode(const Vocabulary& v,
                            const std::vector<std::string>& words) {
  std::vector<TokenId> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(v.Id(w));
  return out;
}

std::vector<std::string> Decode(const Vocabulary& v,
                                const std::vector<TokenId>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(v.Word(id));
  return out;
}

Goal MakeGoal(const ItemPool& pool, const Valuation& v) {
  Goal g{};
  for (int i = 0; i < kNumItemTypes; ++i) {
    g[2 * i] = pool.counts[i];
    g[2 * i + 1] = v.values[i];
  }
  return g;
}

ItemPool GoalPool(const Goal& g) { return ItemPool{{g[0], g[2], g[4]}}; }

Valuation GoalValuation(const Goal& g) { return Valuation{{g[1], g[3], g[5]}}; }

std::string_view FlipMarker(std::string_view word) {
  if (word == kWrite) return kRead;
  if (word == kRead) return kWrite;
  return word;
}

std::pair<TrainingExample, TrainingExample> ToPerspectives(
    const DialogueRecord& rec) {
  if (rec.turns.empty()) {
    throw std::invalid_argument("record: dialogue has no turns");
  }
  for (size_t i = 1; i < rec.turns.size(); ++i) {
    if (rec.turns[i].speaker == rec.turns[i - 1].speaker) {
      throw std::invalid_argument("record: speakers do not alternate at turn " +
                                  std::to_string(i));
    }
  }
  const auto& last = rec.turns.back().words;
  if (last.empty() || last.back() != kChoose) {
    throw std::invalid_argument("record: final turn must end with <choose>");
  }
  for (size_t i = 0; i < rec.turns.size(); ++i) {
    const auto& words = rec.turns[i].words;
    for (size_t j = 0; j < words.size(); ++j) {
      if (IsMarker(words[j]) ||
          (words[j] == kChoose &&
           (i + 1 != rec.turns.size() || j + 1 != words.size()))) {
        throw std::invalid_argument("record: misplaced special token '" +
                                    words[j] + "'");
      }
    }
  }

  TrainingExample a;
  a.goal = MakeGoal(rec.scenario.pool, rec.scenario.valuation_a);
  a.partner_goal = MakeGoal(rec.scenario.pool, rec.scenario.valuation_b);
  for (const Turn& t : rec.turns) {
    a.dialogue.emplace_back(t.speaker == Speaker::kA ? kWrite : kRead);
    a.dialogue.insert(a.dialogue.end(), t.words.begin(), t.words.end());
  }
  const DealOutcome outcome =
      Resolve(rec.scenario.pool, rec.selection_a, rec.selection_b,
              rec.scenario.valuation_a, rec.scenario.valuation_b);
  if (outcome.agreed) {
    Output o{};
    for (int i = 0; i < kNumItemTypes; ++i) {
      o[i] = rec.selection_a.take().take[i];
      o[kNumItemTypes + i] = rec.selection_b.take().take[i];
    }
    a.output = o;
    a.trainable_output = true;
  }
  return {a, FlipPerspective(a)};
}

TrainingExample FlipPerspective(const TrainingExample& ex) {
  TrainingExample out;
  out.goal = ex.partner_goal;
  out.partner_goal = ex.goal;
  out.dialogue.reserve(ex.dialogue.size());
  for (const auto& w : ex.dialogue) out.dialogue.emplace_back(FlipMarker(w));
  if (ex.output) {
    Output o{};
    for (int i = 0; i < kNumItemTypes; ++i) {
      o[i] = (*ex.output)[kNumItemTypes + i];
      o[kNumItemTypes + i] = (*ex.output)[i];
    }
    out.output = o;
  }
  out.trainable_output = ex.trainable_output;
  return out;
}

void WriteVocab(std::ostream& out, const Vocabulary& v) {
  for (TokenId id = kNumSpecialTokens; id < v.size(); ++id) {
    out << v.Word(id) << '\n';
  }
}

Vocabulary ReadVocab(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string w, extra;
    if (!(ls >> w)) continue;
    if (ls >> extra) {
      throw std::invalid_argument("vocabulary: more than one word on line " +
                                  std::to_string(words.size() + 1));
    }
    words.push_back(w);
  }
  return Vocabulary(words);
}

Vocabulary BuildVocab(const std::vector<TrainingExample>& corpus,
                      int min_count) {
  std::map<std::string, int> counts;
  for (const auto& ex : corpus) {
    for (const auto& w : ex.dialogue) {
      if (!IsSpecial(w)) ++counts[w];
    }
  }
  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [w, c] : counts) {
    if (c >= min_count) kept.emplace_back(w, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
    return x.second > y.second;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(std::move(w));
  return Vocabulary(words);
}

namespace {

// Returns the tokens strictly between `open` and `close`, advancing `pos`.
std::vector<std::string> Section(const std::vector<std::string>& tokens,
                                 size_t& pos, std::string_view open,
                                 std::string_view close) {
  if (pos >= tokens.size() || tokens[pos] != open) {
    throw std::invalid_argument("record: expected '" + std::string(open) + "'");
  }
  ++pos;
  std::vector<std::string> out;
  while (pos < tokens.size() && tokens[pos] != close) {
    out.push_back(tokens[pos++]);
  }
  if (pos >= tokens.size()) {
    throw std::invalid_argument("record: missing '" + std::string(close) + "'");
  }
  ++pos;
  return out;
}

Goal ParseGoal(const std::vector<std::string>& fields, const char* what) {
  if (fields.size() != 6) {
    throw std::invalid_argument(std::string("record: ") + what +
                                " needs 6 integers");
  }
  Goal g{};
  for (int i = 0; i < 6; ++i) {
    g[i] = ParseInt(fields[i], what);
    if (g[i] < 0) {
      throw std::invalid_argument(std::string("record: negative ") + what +
                                  " field");
    }
  }
  return g;
}

std::string JoinGoal(const Goal& g) {
  std::string out;
  for (int i = 0; i < 6; ++i) {
    if (i) out += ' ';
    out += std::to_string(g[i]);
  }
  return out;
}

}  // namespace

TrainingExample ParseRecord(std::string_view line) {
  const std::vector<std::string> tokens = SplitWhitespace(line);
  size_t pos = 0;
  TrainingExample ex;
  ex.goal = ParseGoal(Section(tokens, pos, "<input>", "</input>"), "input");
  ex.dialogue = Section(tokens, pos, "<dialogue>", "</dialogue>");
  const auto out = Section(tokens, pos, "<output>", "</output>");
  ex.partner_goal = ParseGoal(
      Section(tokens, pos, "<partner_input>", "</partner_input>"),
      "partner_input");
  if (pos != tokens.size()) {
    throw std::invalid_argument("record: trailing tokens after </partner_input>");
  }

  if (ex.dialogue.empty() || !IsMarker(ex.dialogue.front()) ||
      ex.dialogue.back() != kChoose) {
    throw std::invalid_argument(
        "record: dialogue must start with a marker and end with <choose>");
  }
  for (int i = 0; i < kNumItemTypes; ++i) {
    if (ex.goal[2 * i] != ex.partner_goal[2 * i]) {
      throw std::invalid_argument("record: input and partner_input pools differ");
    }
  }
  const int total = GoalPool(ex.goal).Total();
  if (total < 1 || total > kMaxPoolItems) {
    throw std::invalid_argument("record: pool total must be in [1, 7]");
  }

  if (out.size() != 6) {
    throw std::invalid_argument("record: output needs 6 fields");
  }
  const bool no_agreement = std::all_of(
      out.begin(), out.end(), [](const auto& s) { return s == kNoAgreement; });
  if (!no_agreement) {
    Output o{};
    for (int i = 0; i < 6; ++i) {
      o[i] = ParseInt(out[i], "output");
      if (o[i] < 0) throw std::invalid_argument("record: negative output");
    }
    for (int i = 0; i < kNumItemTypes; ++i) {
      if (o[i] + o[kNumItemTypes + i] != ex.goal[2 * i]) {
        throw std::invalid_argument(
            "record: output is not consistent with the item pool");
      }
    }
    ex.output = o;
    ex.trainable_output = true;
  }
  return ex;
}

std::string FormatRecord(const TrainingExample& ex) {
  std::string out = "<input> " + JoinGoal(ex.goal) + " </input> <dialogue>";
  for (const auto& w : ex.dialogue) {
    out += ' ';
    out += w;
  }
  out += " </dialogue> <output>";
  for (int i = 0; i < 6; ++i) {
    out += ' ';
    out += ex.output ? std::to_string((*ex.output)[i])
                     : std::string(kNoAgreement);
  }
  out += " </output> <partner_input> " + JoinGoal(ex.partner_goal) +
         " </partner_input>";
  return out;
}

std::vector<TrainingExample> ReadCorpus(std::istream& in) {
  std::vector<TrainingExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(ParseRecord(line));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": " +
                                  e.what());
    }
  }
  return out;
}

std::vector<TrainingExample> ReadCorpusFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  try {
    return ReadCorpus(in);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void WriteCorpus(std::ostream& out, const std::vector<TrainingExample>& data) {
  for (const auto& ex : data) out << FormatRecord(ex) << '\n';
}

std::vector<TrainingExample> RecordsToExamples(
    const std::vector<DialogueRecord>& records) {
  std::vector<TrainingExample> out;
  out.reserve(2 * records.size());
  for (const auto& r : records) {
    auto [a, b] = ToPerspectives(r);
    out.push_back(std::move(a));
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace negotiator
