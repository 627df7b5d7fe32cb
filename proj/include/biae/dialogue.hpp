#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "biae/pipeline.hpp"

namespace biae {

enum class SessionStatus { AwaitingAnswer, Closed };
enum class CloseReason { None, Decision, TurnCap, DuplicateQuestion };

std::string_view to_string(SessionStatus s);
std::string_view to_string(CloseReason r);

struct SessionState {
  std::string session_id;
  std::string document;
  std::string question;
  std::string scenario;
  std::vector<HistoryTurn> history;
  std::vector<std::string> asked_questions;
  SessionStatus status = SessionStatus::AwaitingAnswer;
  CloseReason close_reason = CloseReason::None;
  std::optional<DecisionLabel> final_decision;
  std::optional<std::string> pending_question;
  int turn_cap = 8;
  int predictions = 0;

  // Last prediction, for display.
  DecisionOutcome last_outcome;
  std::vector<std::string> hypotheses;
  Eigen::MatrixXd alignment;  // m x n
};

nlohmann::json session_to_json(const SessionState& state);
SessionState session_from_json(const nlohmann::json& j);

// Best decision among IRRELEVANT, YES, NO by logit (ties to the lower index).
DecisionLabel best_terminal_decision(const DecisionOutcome& outcome);

struct SessionOptions {
  int turn_cap = 8;
  std::optional<std::filesystem::path> persist_dir;
};

// In-process session store over a shared read-only model. Operations on one
// session are serialized; different sessions proceed concurrently.
class SessionStore {
 public:
  SessionStore(std::shared_ptr<const Model> model, SessionOptions options = {});

  SessionState create_session(const std::string& document, const std::string& question, const std::string& scenario);
  // `expected_question`, when given, must equal the pending question.
  SessionState answer_followup(const std::string& session_id, Answer answer,
                               const std::optional<std::string>& expected_question = std::nullopt);
  SessionState get(const std::string& session_id) const;
  std::size_t size() const;

  const Model& model() const { return *model_; }

 private:
  struct Entry {
    std::mutex mutex;
    SessionState state;
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  void apply_prediction(SessionState& state) const;
  void persist(const SessionState& state) const;
  std::string new_id();

  std::shared_ptr<const Model> model_;
  SessionOptions options_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_state_;
};

}  // namespace biae
