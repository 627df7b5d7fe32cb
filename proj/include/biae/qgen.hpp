#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "biae/corpus.hpp"
#include "biae/segmenter.hpp"
#include "biae/weak_labels.hpp"

namespace biae {

struct GenerationInstance {
  std::string utterance_id;
  std::string document;
  std::vector<std::string> asked_questions;
  std::string target_question;
};

// "document: {D} asked: {f1} | {f2} | ..." with an empty asked section for no questions.
std::string build_generation_input(std::string_view document, const std::vector<std::string>& asked_questions);

std::vector<std::string> asked_questions_of(const DialogueInstance& instance);

// MORE-labeled instances: all history questions, target = gold follow-up question.
std::vector<GenerationInstance> natural_generation_set(const std::vector<DialogueInstance>& train);
// Non-MORE instances with history: drop the last turn and predict its question.
std::vector<GenerationInstance> augment(const std::vector<DialogueInstance>& train);

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string name() const = 0;
  virtual int max_output_length() const { return 64; }
  // Raw proposal; may omit the question mark.
  virtual std::string propose(std::string_view document, const std::vector<std::string>& asked_questions) const = 0;
};

// Extract-then-rewrite stand-in: rewrites the first document unit not yet
// covered by an asked question into a yes/no question.
class TemplateGenerator final : public Generator {
 public:
  explicit TemplateGenerator(double coverage_threshold = 0.5);
  std::string name() const override { return "template"; }
  std::string propose(std::string_view document, const std::vector<std::string>& asked_questions) const override;

 private:
  double threshold_;
  RuleSegmenter segmenter_;
  HashingEmbeddingOracle oracle_;
};

// Cycles through a fixed list of questions, one per call made with k asked
// questions (k modulo the list size). Used to script dialogues.
class ScriptedGenerator final : public Generator {
 public:
  explicit ScriptedGenerator(std::vector<std::string> questions, std::string name = "scripted");
  std::string name() const override { return name_; }
  std::string propose(std::string_view document, const std::vector<std::string>& asked_questions) const override;

 private:
  std::vector<std::string> questions_;
  std::string name_;
};

// Rewrites a declarative condition ("you are over 18") into a question.
std::string question_from_condition(std::string_view condition);

// Non-empty question text ending in '?'. Generator failures become GenerationError.
std::string generate_question(std::string_view document, const std::vector<std::string>& asked_questions,
                     const Generator& generator);

// Lowercased word tokens joined by single spaces, for duplicate detection.
std::string normalize_question(std::string_view question);

std::unique_ptr<Generator> make_generator(std::string_view spec);

// One {input_text, target_text} JSON record per line.
void export_generation_file(const std::filesystem::path& file, const std::vector<GenerationInstance>& instances);

}  // namespace biae
