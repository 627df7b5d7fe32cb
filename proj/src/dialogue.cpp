#include "biae/dialogue.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

std::string_view to_string(SessionStatus s) { return s == SessionStatus::Closed ? "CLOSED" : "AWAITING_ANSWER"; }

std::string_view to_string(CloseReason r) {
  switch (r) {
    case CloseReason::None: return "";
    case CloseReason::Decision: return "decision";
    case CloseReason::TurnCap: return "turn_cap";
    case CloseReason::DuplicateQuestion: return "duplicate_question";
  }
  return "";
}

namespace {

CloseReason parse_reason(std::string_view s) {
  if (s == "decision") return CloseReason::Decision;
  if (s == "turn_cap") return CloseReason::TurnCap;
  if (s == "duplicate_question") return CloseReason::DuplicateQuestion;
  return CloseReason::None;
}

nlohmann::ordered_json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v[k]);
  return out;
}

Eigen::VectorXd vector_of(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

}  // namespace

nlohmann::json session_to_json(const SessionState& s) {
  nlohmann::ordered_json j;
  j["session_id"] = s.session_id;
  j["status"] = std::string(to_string(s.status));
  j["decision"] = s.final_decision ? nlohmann::ordered_json(std::string(to_string(*s.final_decision))) : nlohmann::ordered_json(nullptr);
  j["pending_question"] = s.pending_question ? nlohmann::ordered_json(*s.pending_question) : nlohmann::ordered_json(nullptr);
  j["close_reason"] = s.close_reason == CloseReason::None ? nlohmann::ordered_json(nullptr)
                                                          : nlohmann::ordered_json(std::string(to_string(s.close_reason)));
  j["document"] = s.document;
  j["question"] = s.question;
  j["scenario"] = s.scenario;
  auto history = nlohmann::ordered_json::array();
  for (const auto& t : s.history)
    history.push_back({{"follow_up_question", t.follow_up_question},
                       {"follow_up_answer", std::string(to_string(t.follow_up_answer))}});
  j["history"] = history;
  j["asked_questions"] = s.asked_questions;
  j["turn_cap"] = s.turn_cap;
  j["predictions"] = s.predictions;
  j["last_decision"] = std::string(to_string(s.last_outcome.decision));
  nlohmann::ordered_json probs = nlohmann::ordered_json::object();
  for (int k = 0; k < s.last_outcome.probabilities.size(); ++k)
    probs[std::string(to_string(static_cast<DecisionLabel>(k)))] = s.last_outcome.probabilities[k];
  j["probabilities"] = probs;
  j["logits"] = vector_json(s.last_outcome.logits);
  j["hypotheses"] = s.hypotheses;
  j["attention"] = vector_json(s.last_outcome.attention);
  auto alignment = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < s.alignment.rows(); ++i) alignment.push_back(vector_json(s.alignment.row(i).transpose()));
  j["alignment"] = alignment;
  return nlohmann::json::parse(j.dump());
}

SessionState session_from_json(const nlohmann::json& j) {
  try {
    SessionState s;
    s.session_id = j.at("session_id").get<std::string>();
    s.status = j.at("status").get<std::string>() == "CLOSED" ? SessionStatus::Closed : SessionStatus::AwaitingAnswer;
    if (!j.at("decision").is_null()) s.final_decision = parse_decision(j["decision"].get<std::string>());
    if (!j.at("pending_question").is_null()) s.pending_question = j["pending_question"].get<std::string>();
    if (!j.at("close_reason").is_null()) s.close_reason = parse_reason(j["close_reason"].get<std::string>());
    s.document = j.at("document").get<std::string>();
    s.question = j.at("question").get<std::string>();
    s.scenario = j.at("scenario").get<std::string>();
    for (const auto& t : j.at("history"))
      s.history.push_back({t.at("follow_up_question").get<std::string>(),
                           parse_answer(t.at("follow_up_answer").get<std::string>())});
    s.asked_questions = j.at("asked_questions").get<std::vector<std::string>>();
    s.turn_cap = j.at("turn_cap").get<int>();
    s.predictions = j.at("predictions").get<int>();
    s.last_outcome.decision = parse_decision(j.at("last_decision").get<std::string>());
    s.last_outcome.logits = vector_of(j.at("logits"));
    s.last_outcome.probabilities = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 4; ++k)
      s.last_outcome.probabilities[k] = j.at("probabilities").at(std::string(to_string(static_cast<DecisionLabel>(k)))).get<double>();
    s.last_outcome.attention = vector_of(j.at("attention"));
    s.hypotheses = j.at("hypotheses").get<std::vector<std::string>>();
    const auto& a = j.at("alignment");
    const auto rows = static_cast<Eigen::Index>(a.size());
    const auto cols = rows ? static_cast<Eigen::Index>(a[0].size()) : 0;
    s.alignment = Eigen::MatrixXd(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) s.alignment.row(i) = vector_of(a[static_cast<std::size_t>(i)]).transpose();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed session record: ") + e.what());
  }
}

DecisionLabel best_terminal_decision(const DecisionOutcome& outcome) {
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (outcome.logits[k] > outcome.logits[best]) best = k;
  return static_cast<DecisionLabel>(best);
}

SessionStore::SessionStore(std::shared_ptr<const Model> model, SessionOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
  if (!model_) throw ServiceError("session store needs a model");
  if (options_.turn_cap < 1) throw ValidationError("turn_cap must be positive");
  if (options_.persist_dir) std::filesystem::create_directories(*options_.persist_dir);
  std::random_device rd;
  id_state_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string SessionStore::new_id() {
  std::lock_guard lock(id_mutex_);
  std::mt19937_64 rng(id_state_++ * 0x9E3779B97F4A7C15ULL);
  std::ostringstream out;
  out << std::hex << rng() << rng();
  return out.str();
}

void SessionStore::apply_prediction(SessionState& s) const {
  auto p = model_->predict({s.document, s.question, s.scenario, s.history});
  ++s.predictions;
  s.last_outcome = p.pass.outcome;
  s.hypotheses.clear();
  for (int i = 0; i < p.prepared.marked.num_hypotheses(); ++i)
    s.hypotheses.push_back(p.prepared.hypotheses[static_cast<std::size_t>(i)].text);
  s.alignment = p.pass.alignment.probs;
  s.pending_question.reset();

  auto close = [&](DecisionLabel d, CloseReason why) {
    s.status = SessionStatus::Closed;
    s.final_decision = d;
    s.close_reason = why;
  };
  if (p.decision() != DecisionLabel::More) return close(p.decision(), CloseReason::Decision);
  if (static_cast<int>(s.history.size()) >= s.turn_cap)
    return close(best_terminal_decision(p.pass.outcome), CloseReason::TurnCap);
  const std::string normalized = normalize_question(*p.follow_up);
  for (const auto& q : s.asked_questions)
    if (normalize_question(q) == normalized)
      return close(best_terminal_decision(p.pass.outcome), CloseReason::DuplicateQuestion);
  s.status = SessionStatus::AwaitingAnswer;
  s.pending_question = *p.follow_up;
  s.asked_questions.push_back(*p.follow_up);
}

void SessionStore::persist(const SessionState& s) const {
  if (!options_.persist_dir) return;
  auto file = *options_.persist_dir / (s.session_id + ".json");
  auto tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << session_to_json(s).dump() << '\n';
  }
  std::filesystem::rename(tmp, file);
}

SessionState SessionStore::create_session(const std::string& document, const std::string& question,
                                          const std::string& scenario) {
  if (text::trim(document).empty()) throw ValidationError("document must be non-empty");
  if (text::trim(question).empty()) throw ValidationError("question must be non-empty");
  auto entry = std::make_shared<Entry>();
  auto& s = entry->state;
  s.session_id = new_id();
  s.document = document;
  s.question = question;
  s.scenario = scenario;
  s.turn_cap = options_.turn_cap;
  apply_prediction(s);
  persist(s);
  SessionState copy = s;
  std::unique_lock lock(mutex_);
  sessions_.emplace(copy.session_id, std::move(entry));
  return copy;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& session_id) const {
  {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) return it->second;
  }
  if (options_.persist_dir && session_id.find_first_of("/\\.") == std::string::npos && !session_id.empty()) {
    auto file = *options_.persist_dir / (session_id + ".json");
    std::ifstream in(file, std::ios::binary);
    if (in) {
      std::stringstream buf;
      buf << in.rdbuf();
      auto entry = std::make_shared<Entry>();
      entry->state = session_from_json(nlohmann::json::parse(buf.str()));
      std::unique_lock lock(mutex_);
      return sessions_.emplace(session_id, std::move(entry)).first->second;
    }
  }
  throw NotFoundError("unknown session: " + session_id);
}

SessionState SessionStore::answer_followup(const std::string& session_id, Answer answer,
                                           const std::optional<std::string>& expected_question) {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  auto& s = entry->state;
  if (s.status == SessionStatus::Closed) throw ConflictError("session " + session_id + " is closed");
  if (!s.pending_question) throw InternalError("open session " + session_id + " has no pending question");
  if (expected_question && *expected_question != *s.pending_question)
    throw ConflictError("session " + session_id + " is awaiting a different question");
  SessionState next = s;
  next.history.push_back({*next.pending_question, answer});
  next.pending_question.reset();
  apply_prediction(next);
  persist(next);
  s = next;
  return s;
}

SessionState SessionStore::get(const std::string& session_id) const {
  auto entry = find(session_id);
  std::lock_guard lock(entry->mutex);
  return entry->state;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

}  // namespace biae
