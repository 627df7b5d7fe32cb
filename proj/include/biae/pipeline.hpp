#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biae/biae_core.hpp"
#include "biae/corpus.hpp"
#include "biae/encoder.hpp"
#include "biae/qgen.hpp"
#include "biae/segmenter.hpp"

namespace biae {

struct DialogueInput {
  std::string document;
  std::string question;
  std::string scenario;
  std::vector<HistoryTurn> history;
};

DialogueInput input_of(const DialogueInstance& instance);

struct PreparedDialogue {
  std::vector<Hypothesis> hypotheses;
  std::vector<Premise> premises;
  MarkedInput marked;
};

PreparedDialogue prepare_dialogue(const DialogueInput& input, const Segmenter& segmenter, const Encoder& encoder);

struct Checkpoint {
  BiAEParameters params;
  std::string encoder_name;
  nlohmann::json encoder_state = nlohmann::json::object();
  std::string marker_policy;
  std::string segmenter = "rule:1";
  std::string oracle;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json config = nlohmann::json::object();
};

nlohmann::json checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& file);

struct Prediction {
  PreparedDialogue prepared;
  ForwardPass pass;
  std::optional<std::string> follow_up;  // set when the decision is MORE

  DecisionLabel decision() const { return pass.outcome.decision; }
};

// Segmenter -> encoder -> decision module, plus the generator on MORE.
// predict() is const and safe to call concurrently.
class Model {
 public:
  Model(Checkpoint checkpoint, std::shared_ptr<const Generator> generator);
  // Load failures of the checkpoint, encoder or generator surface as ServiceError.
  static Model load(const std::filesystem::path& checkpoint_file, const std::string& generator_spec = "template");

  Prediction predict(const DialogueInput& input) const;

  const Checkpoint& checkpoint() const { return checkpoint_; }
  const Encoder& encoder() const { return *encoder_; }
  const Generator* generator() const { return generator_.get(); }

 private:
  Checkpoint checkpoint_;
  std::shared_ptr<Encoder> encoder_;
  std::shared_ptr<const Generator> generator_;
  RuleSegmenter segmenter_;
};

}  // namespace biae
