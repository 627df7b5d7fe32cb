#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biae/pipeline.hpp"
#include "biae/weak_labels.hpp"

namespace biae {

struct TrainConfig {
  double lambda = 2.0;
  double learning_rate = 5e-5;
  int epochs = 5;
  int batch_size = 20;
  double dropout = 0.3;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 42;
  std::string encoder_name = "toy:13:64";
  std::string oracle = "hashbow:512";
  bool train_encoder = true;
  int max_steps = 0;  // 0: run for `epochs`

  void validate() const;
  std::string hash() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

// Linear warmup to the base rate, then linear decay to zero at the last step.
double scheduled_rate(const TrainConfig& config, int step, int total_steps);

// Mini-batch Adam over the decision module and the encoder's trainable parts.
// Batch loss is the mean of per-instance joint losses.
class Trainer {
 public:
  // Throws NotFoundError naming the first instance missing from `labels`.
  Trainer(const std::vector<DialogueInstance>& train, const LabelCache& labels, TrainConfig config);

  double step();  // one optimizer step; returns the batch loss
  int step_count() const { return steps_; }
  int total_steps() const { return total_steps_; }
  int steps_per_epoch() const;

  // Decision accuracy on the training set without dropout.
  double training_accuracy() const;
  Checkpoint checkpoint() const;
  const std::vector<double>& loss_curve() const { return loss_curve_; }
  const BiAEParameters& parameters() const { return params_; }

 private:
  struct Example {
    std::string utterance_id;
    MarkedInput marked;
    DecisionLabel gold;
    AlignmentLabels alignment;
    EntailmentLabels entailment;
  };

  int next_index();

  TrainConfig config_;
  std::unique_ptr<Encoder> encoder_;
  BiAEParameters params_, grad_;
  std::vector<Example> examples_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::mt19937_64 rng_;
  std::vector<ParamSlot> slots_;
  std::vector<std::vector<double>> adam_m_, adam_v_;
  int steps_ = 0;
  int total_steps_ = 0;
  std::vector<double> loss_curve_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_curve;
  int steps = 0;
};

TrainResult train_decision(const std::vector<DialogueInstance>& train, const LabelCache& labels,
                           const TrainConfig& config);

}  // namespace biae
