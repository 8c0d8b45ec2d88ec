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

#ifndef NEGOTIATOR_CORPUS_H_
#define NEGOTIATOR_CORPUS_H_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "negotiator/env.h"

namespace negotiator {

using TokenId = int32_t;

inline constexpr std::string_view kWrite = "write:";
inline constexpr std::string_view kRead = "read:";
inline constexpr std::string_view kChoose = "<choose>";
inline constexpr std::string_view kUnk = "<unk>";
inline constexpr std::string_view kPad = "<pad>";
inline constexpr std::string_view kNoAgreement = "<no_agreement>";

// Special tokens occupy the lowest ids, in this order.
inline constexpr TokenId kWriteId = 0;
inline constexpr TokenId kReadId = 1;
inline constexpr TokenId kChooseId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kPadId = 4;
inline constexpr TokenId kNoAgreementId = 5;
inline constexpr int kNumSpecialTokens = 6;

bool IsMarker(std::string_view word);
bool IsSpecial(std::string_view word);

class Vocabulary {
 public:
  // Only the special tokens.
  Vocabulary();
  // `words` must not repeat and must not contain special tokens.
  explicit Vocabulary(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(words_.size()); }
  // Unknown words map to <unk>.
  TokenId Id(std::string_view word) const;
  bool Contains(std::string_view word) const;
  // Throws std::out_of_range for ids outside the vocabulary.
  const std::string& Word(TokenId id) const;
  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocabulary& other) const {
    return words_ == other.words_;
  }

 private:
  void Add(const std::string& word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

std::vector<TokenId> Encode(const Vocabulary& v,
                            const std::vector<std::string>& words);
std::vector<std::string> Decode(const Vocabulary& v,
                                const std::vector<TokenId>& ids);

enum class Speaker { kA, kB };

struct Turn {
  Speaker speaker = Speaker::kA;
  std::vector<std::string> words;
};

struct DialogueRecord {
  Scenario scenario;
  std::vector<Turn> turns;
  Selection selection_a = Selection::NoAgreement();
  Selection selection_b = Selection::NoAgreement();
};

// Six goal integers: count and value per item type, interleaved.
using Goal = std::array<int, 2 * kNumItemTypes>;
// Own take for each type, then the partner's take.
using Output = std::array<int, 2 * kNumItemTypes>;

Goal MakeGoal(const ItemPool& pool, const Valuation& v);
ItemPool GoalPool(const Goal& g);
Valuation GoalValuation(const Goal& g);

struct TrainingExample {
  Goal goal{};
  Goal partner_goal{};
  // Word-level dialogue with write:/read: markers, ending in <choose>.
  std::vector<std::string> dialogue;
  // Unset when the dialogue ended without a consistent agreement.
  std::optional<Output> output;
  bool trainable_output = false;

  bool operator==(const TrainingExample&) const = default;
};

// Agent A's view first. Throws std::invalid_argument for malformed records.
std::pair<TrainingExample, TrainingExample> ToPerspectives(
    const DialogueRecord& rec);

// Swap goals and output halves and flip every marker.
TrainingExample FlipPerspective(const TrainingExample& ex);

std::string_view FlipMarker(std::string_view word);

// Specials, then words with count >= min_count by descending count, ties
// broken lexicographically.
Vocabulary BuildVocab(const std::vector<TrainingExample>& corpus,
                      int min_count = 20);

// One non-special word per line, in id order.
void WriteVocab(std::ostream& out, const Vocabulary& v);
// Inverse of WriteVocab; throws std::invalid_argument on a special token or
// a repeated word.
Vocabulary ReadVocab(std::istream& in);

TrainingExample ParseRecord(std::string_view line);
std::string FormatRecord(const TrainingExample& ex);

// Reads one record per non-empty line; errors carry the line number.
std::vector<TrainingExample> ReadCorpus(std::istream& in);
std::vector<TrainingExample> ReadCorpusFile(const std::string& path);
void WriteCorpus(std::ostream& out, const std::vector<TrainingExample>& data);

// Knobs for the scripted negotiators used to generate desk-scale data.
struct SynthStyle {
  ScenarioGeneratorConfig scenarios;
  int min_initial_target = 6;
  int max_initial_target = 10;
  int min_floor = 3;
  int max_floor = 6;
  int min_concession = 1;
  int max_concession = 2;
  // Turns after which an agent walks away from offers below its floor.
  int min_patience = 4;
  int max_patience = 8;
};

std::vector<DialogueRecord> SynthCorpus(std::mt19937_64& rng, int n,
                                        const SynthStyle& style = {});

// Both perspectives of every record, A's first.
std::vector<TrainingExample> RecordsToExamples(
    const std::vector<DialogueRecord>& records);

}  // namespace negotiator

#endif  // NEGOTIATOR_CORPUS_H_
