#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biae/corpus.hpp"

namespace biae {

struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

// One elementary discourse unit of the rule document.
struct Hypothesis {
  int index = 0;
  std::string text;
  CharSpan span;
};

enum class PremiseSource { Scenario, Turn };

std::string_view to_string(PremiseSource s);

// One user-provided unit: a scenario sentence or a formatted dialogue turn.
struct Premise {
  int index = 0;
  std::string text;
  PremiseSource source = PremiseSource::Scenario;
  std::optional<int> turn_ref;  // index into the history, TURN premises only
  std::optional<Answer> answer;  // the turn's answer, TURN premises only
};

// Pluggable document segmenter. Implementations must be deterministic.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string name() const = 0;
  virtual std::string version() const = 0;
  virtual std::vector<CharSpan> split(std::string_view document) const = 0;
};

// Splits on list markers, sentence boundaries and subordinate-clause markers.
// List heads ("You qualify if:") stay as their own unit.
class RuleSegmenter final : public Segmenter {
 public:
  std::string name() const override { return "rule"; }
  std::string version() const override { return "1"; }
  std::vector<CharSpan> split(std::string_view document) const override;
};

// Sentence spans of `s` between [begin, end); abbreviations from a small
// whitelist ("e.g.", "i.e.", "etc.", "Mr.", "No.", ...) never end a sentence.
std::vector<CharSpan> sentence_spans(std::string_view s, std::size_t begin, std::size_t end);

std::vector<Hypothesis> segment_document(std::string_view document, const Segmenter& segmenter);
std::vector<Hypothesis> segment_document(std::string_view document);  // RuleSegmenter

std::vector<std::string> segment_scenario(std::string_view scenario);

std::string format_turn(const HistoryTurn& turn);

std::vector<Premise> build_premise_set(const std::vector<std::string>& scenario_sentences,
                                       const std::vector<HistoryTurn>& turns);

// Convenience: scenario segmentation + turn formatting in one step.
std::vector<Premise> premises_of(std::string_view scenario, const std::vector<HistoryTurn>& turns);

}  // namespace biae
