#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace biae {

using ordered_json = nlohmann::ordered_json;

// Class order matters: it is the logit order of the decision head and the
// tie-break order of argmax.
enum class DecisionLabel { Irrelevant = 0, Yes = 1, No = 2, More = 3 };

inline constexpr int kNumDecisions = 4;
inline constexpr DecisionLabel kAllDecisions[] = {DecisionLabel::Irrelevant, DecisionLabel::Yes,
                                                  DecisionLabel::No, DecisionLabel::More};

std::string_view to_string(DecisionLabel label);
DecisionLabel parse_decision(std::string_view name);  // uppercase wire names

enum class Answer { Yes, No };

std::string_view to_string(Answer a);  // "Yes" / "No"
Answer parse_answer(std::string_view s);  // case-insensitive

struct HistoryTurn {
  std::string follow_up_question;
  Answer follow_up_answer = Answer::Yes;
};

struct DialogueInstance {
  std::string utterance_id;
  std::string tree_id;
  std::string source_url;
  std::string document;  // "snippet" on disk
  std::string question;
  std::string scenario;
  std::vector<HistoryTurn> history;
  std::string gold_answer;
  DecisionLabel gold_decision = DecisionLabel::More;
  std::vector<ordered_json> evidence;

  // Unknown record fields, on-disk key order and the original history
  // objects, kept for round-trip.
  ordered_json extras = ordered_json::object();
  ordered_json history_raw = ordered_json::array();
  std::vector<std::string> key_order;
};

struct SubsetFlags {
  bool bullet_point = false;
  bool has_scenario = false;
  bool has_history = false;
};

enum class Split { Train, Dev, Test };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

DecisionLabel decision_label_of(std::string_view gold_answer);

bool has_bullet_points(std::string_view document);
SubsetFlags subset_flags(const DialogueInstance& instance);

// Parses one record; throws SchemaError naming the record and the field.
DialogueInstance instance_from_json(const ordered_json& record, std::size_t position = 0);
ordered_json instance_to_json(const DialogueInstance& instance);

// `path` may be a JSON file or a directory holding sharc_<split>.json.
std::filesystem::path resolve_split_path(const std::filesystem::path& path, Split split);
std::vector<DialogueInstance> load_dataset(const std::filesystem::path& path, Split split);
std::vector<DialogueInstance> load_dataset_file(const std::filesystem::path& file);
std::vector<DialogueInstance> parse_dataset(std::string_view json_text);
std::string dump_dataset(const std::vector<DialogueInstance>& instances, int indent = -1);
void save_dataset(const std::filesystem::path& file, const std::vector<DialogueInstance>& instances);

struct ValidationReport {
  std::size_t instance_count = 0;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Collects every schema violation instead of stopping at the first one.
ValidationReport validate_dataset(const std::filesystem::path& file);

struct SubsetCounts {
  std::size_t all = 0;
  std::size_t bullet_point = 0, regular = 0;
  std::size_t scenario = 0, no_scenario = 0;
  std::size_t history = 0, no_history = 0;
};

SubsetCounts count_subsets(const std::vector<DialogueInstance>& instances);

}  // namespace biae
