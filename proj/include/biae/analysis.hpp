#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "biae/metrics.hpp"
#include "biae/pipeline.hpp"

namespace biae {

struct PredictionRecord {
  std::string utterance_id;
  DecisionLabel gold = DecisionLabel::More;
  DecisionLabel predicted = DecisionLabel::More;
  std::string gold_question;       // gold follow-up when gold is MORE
  std::string predicted_question;  // generated follow-up when predicted MORE
  SubsetFlags flags;
};

struct MetricsReport {
  double micro_accuracy = 0.0;
  double macro_accuracy = 0.0;
  std::map<DecisionLabel, double> class_wise;
  std::optional<BleuScores> bleu;  // absent when no MORE/MORE pair exists
  std::map<std::string, double> subset_micro;
  std::map<std::string, double> subset_macro;
  std::map<std::string, std::size_t> counts;
};

// Subset names: all, bullet_point, regular, scenario, no_scenario, history, no_history.
std::vector<std::string> subset_names();
bool in_subset(const SubsetFlags& flags, const std::string& subset);

std::vector<PredictionRecord> predict_all(const Model& model, const std::vector<DialogueInstance>& instances);
MetricsReport metrics_report(const std::vector<PredictionRecord>& records);

nlohmann::json to_json(const MetricsReport& report);
void write_predictions_csv(const std::filesystem::path& file, const std::vector<PredictionRecord>& records);

struct AlphaStatistics {
  std::vector<double> alphas;
  double beta = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double quartiles[3] = {0.0, 0.0, 0.0};
  std::vector<std::size_t> histogram;  // equal-width bins over [0, 1]
};

struct EntailmentAnalysis {
  AlphaStatistics success;  // documents whose decision was predicted correctly
  AlphaStatistics fail;
  std::size_t skipped_without_premises = 0;
};

AlphaStatistics alpha_statistics(std::vector<double> alphas, int bins = 10);

// Predicted states come from the model's alignment/entailment; constructed
// states from weak labels under `oracle`. Instances without premises are skipped.
EntailmentAnalysis analyze_entailment(const Model& model, const std::vector<DialogueInstance>& instances,
                                      const EmbeddingOracle& oracle);

nlohmann::json to_json(const EntailmentAnalysis& analysis);
std::string alpha_histogram_table(const EntailmentAnalysis& analysis);
std::string alpha_histogram_svg(const EntailmentAnalysis& analysis);

}  // namespace biae
