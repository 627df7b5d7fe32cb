#include "biae/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

namespace {

const char* const kKnownKeys[] = {"utterance_id", "tree_id", "source_url", "snippet", "question",
                                  "scenario",     "history", "answer",     "evidence"};

bool is_known_key(const std::string& key) {
  for (const char* k : kKnownKeys)
    if (key == k) return true;
  return false;
}

std::string record_label(const ordered_json& record, std::size_t position) {
  if (record.is_object()) {
    auto it = record.find("utterance_id");
    if (it != record.end() && it->is_string()) return it->get<std::string>();
  }
  return "#" + std::to_string(position);
}

std::string require_string(const ordered_json& record, const std::string& id, const char* field,
                           bool allow_empty) {
  auto it = record.find(field);
  if (it == record.end()) throw SchemaError(id, field, "missing required field");
  if (!it->is_string()) throw SchemaError(id, field, "expected a string");
  auto value = it->get<std::string>();
  if (!allow_empty && text::trim(value).empty()) throw SchemaError(id, field, "must be non-empty");
  return value;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(DecisionLabel label) {
  switch (label) {
    case DecisionLabel::Irrelevant: return "IRRELEVANT";
    case DecisionLabel::Yes: return "YES";
    case DecisionLabel::No: return "NO";
    case DecisionLabel::More: return "MORE";
  }
  return "MORE";
}

DecisionLabel parse_decision(std::string_view name) {
  for (auto label : kAllDecisions)
    if (text::iequals(name, to_string(label))) return label;
  throw ValidationError("unknown decision label '" + std::string(name) + "'");
}

std::string_view to_string(Answer a) { return a == Answer::Yes ? "Yes" : "No"; }

Answer parse_answer(std::string_view s) {
  auto t = text::trim(s);
  if (text::iequals(t, "yes")) return Answer::Yes;
  if (text::iequals(t, "no")) return Answer::No;
  throw ValidationError("answer must be Yes or No, got '" + std::string(s) + "'");
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw ValidationError("unknown split '" + std::string(s) + "' (expected train, dev or test)");
}

DecisionLabel decision_label_of(std::string_view gold_answer) {
  auto t = text::trim(gold_answer);
  if (t.empty()) throw ValidationError("gold answer is empty");
  if (text::iequals(t, "yes")) return DecisionLabel::Yes;
  if (text::iequals(t, "no")) return DecisionLabel::No;
  if (text::iequals(t, "irrelevant")) return DecisionLabel::Irrelevant;
  return DecisionLabel::More;
}

bool has_bullet_points(std::string_view document) {
  std::size_t pos = 0;
  while (pos <= document.size()) {
    auto nl = document.find('\n', pos);
    auto line = document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    auto t = text::trim(line);
    // A marker counts only when followed by whitespace or the end of the line,
    // so "-5 degrees" or "3.5 million" are not bullets.
    auto marker_then_space = [&](std::size_t len) {
      return t.size() == len || std::isspace(static_cast<unsigned char>(t[len])) != 0;
    };
    if (!t.empty()) {
      if ((t[0] == '*' || t[0] == '-') && marker_then_space(1)) return true;
      if (t.rfind("\xE2\x80\xA2", 0) == 0 && marker_then_space(3)) return true;
      std::size_t d = 0;
      while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
      if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')') && marker_then_space(d + 1)) return true;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return false;
}

SubsetFlags subset_flags(const DialogueInstance& instance) {
  return {has_bullet_points(instance.document), !text::trim(instance.scenario).empty(),
          !instance.history.empty()};
}

DialogueInstance instance_from_json(const ordered_json& record, std::size_t position) {
  const auto id = record_label(record, position);
  if (!record.is_object()) throw SchemaError(id, "<record>", "expected a JSON object");

  DialogueInstance inst;
  inst.utterance_id = require_string(record, id, "utterance_id", false);
  inst.tree_id = require_string(record, id, "tree_id", true);
  inst.source_url = require_string(record, id, "source_url", true);
  inst.document = require_string(record, id, "snippet", false);
  inst.question = require_string(record, id, "question", false);
  inst.scenario = require_string(record, id, "scenario", true);
  inst.gold_answer = require_string(record, id, "answer", false);
  inst.gold_decision = decision_label_of(inst.gold_answer);

  auto hist = record.find("history");
  if (hist == record.end()) throw SchemaError(id, "history", "missing required field");
  if (!hist->is_array()) throw SchemaError(id, "history", "expected an array");
  for (std::size_t k = 0; k < hist->size(); ++k) {
    const auto& turn = (*hist)[k];
    const auto field = "history[" + std::to_string(k) + "]";
    if (!turn.is_object()) throw SchemaError(id, field, "expected an object");
    auto q = turn.find("follow_up_question");
    auto a = turn.find("follow_up_answer");
    if (q == turn.end() || !q->is_string() || text::trim(q->get<std::string>()).empty())
      throw SchemaError(id, field + ".follow_up_question", "missing or empty");
    if (a == turn.end() || !a->is_string()) throw SchemaError(id, field + ".follow_up_answer", "missing");
    HistoryTurn t;
    t.follow_up_question = q->get<std::string>();
    try {
      t.follow_up_answer = parse_answer(a->get<std::string>());
    } catch (const ValidationError& e) {
      throw SchemaError(id, field + ".follow_up_answer", e.what());
    }
    inst.history.push_back(std::move(t));
  }
  inst.history_raw = *hist;

  auto ev = record.find("evidence");
  if (ev != record.end()) {
    if (!ev->is_array()) throw SchemaError(id, "evidence", "expected an array");
    for (const auto& e : *ev) inst.evidence.push_back(e);
  }

  for (auto it = record.begin(); it != record.end(); ++it) {
    inst.key_order.push_back(it.key());
    if (!is_known_key(it.key())) inst.extras[it.key()] = it.value();
  }
  return inst;
}

ordered_json instance_to_json(const DialogueInstance& inst) {
  ordered_json history = ordered_json::array();
  for (std::size_t k = 0; k < inst.history.size(); ++k) {
    const auto& t = inst.history[k];
    if (k < inst.history_raw.size()) {
      const auto& raw = inst.history_raw[k];
      auto q = raw.find("follow_up_question");
      auto a = raw.find("follow_up_answer");
      if (q != raw.end() && a != raw.end() && q->is_string() && a->is_string() &&
          q->get<std::string>() == t.follow_up_question &&
          text::iequals(text::trim(a->get<std::string>()), to_string(t.follow_up_answer))) {
        history.push_back(raw);
        continue;
      }
    }
    ordered_json turn;
    turn["follow_up_question"] = t.follow_up_question;
    turn["follow_up_answer"] = std::string(to_string(t.follow_up_answer));
    history.push_back(std::move(turn));
  }
  ordered_json evidence = ordered_json::array();
  for (const auto& e : inst.evidence) evidence.push_back(e);

  auto value_of = [&](const std::string& key) -> ordered_json {
    if (key == "utterance_id") return inst.utterance_id;
    if (key == "tree_id") return inst.tree_id;
    if (key == "source_url") return inst.source_url;
    if (key == "snippet") return inst.document;
    if (key == "question") return inst.question;
    if (key == "scenario") return inst.scenario;
    if (key == "history") return history;
    if (key == "answer") return inst.gold_answer;
    if (key == "evidence") return evidence;
    return inst.extras.at(key);
  };

  ordered_json out = ordered_json::object();
  if (!inst.key_order.empty()) {
    for (const auto& key : inst.key_order) out[key] = value_of(key);
  } else {
    for (const char* key : kKnownKeys) out[key] = value_of(key);
    for (auto it = inst.extras.begin(); it != inst.extras.end(); ++it) out[it.key()] = it.value();
  }
  return out;
}

std::filesystem::path resolve_split_path(const std::filesystem::path& path, Split split) {
  if (std::filesystem::is_directory(path))
    return path / ("sharc_" + std::string(to_string(split)) + ".json");
  return path;
}

std::vector<DialogueInstance> parse_dataset(std::string_view json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("<file>", "<root>", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_array()) throw SchemaError("<file>", "<root>", "expected an array of records");
  std::vector<DialogueInstance> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(instance_from_json(doc[i], i));
  return out;
}

std::vector<DialogueInstance> load_dataset_file(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw IoError("dataset file not found: '" + file.string() + "'");
  return parse_dataset(read_file(file));
}

std::vector<DialogueInstance> load_dataset(const std::filesystem::path& path, Split split) {
  return load_dataset_file(resolve_split_path(path, split));
}

std::string dump_dataset(const std::vector<DialogueInstance>& instances, int indent) {
  ordered_json arr = ordered_json::array();
  for (const auto& inst : instances) arr.push_back(instance_to_json(inst));
  return arr.dump(indent);
}

void save_dataset(const std::filesystem::path& file, const std::vector<DialogueInstance>& instances) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << dump_dataset(instances, 1) << '\n';
}

ValidationReport validate_dataset(const std::filesystem::path& file) {
  ValidationReport report;
  if (!std::filesystem::exists(file)) throw IoError("dataset file not found: '" + file.string() + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    report.violations.push_back(std::string("malformed JSON: ") + e.what());
    return report;
  }
  if (!doc.is_array()) {
    report.violations.push_back("root is not an array of records");
    return report;
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    try {
      instance_from_json(doc[i], i);
      ++report.instance_count;
    } catch (const SchemaError& e) {
      report.violations.emplace_back(e.what());
    }
  }
  return report;
}

SubsetCounts count_subsets(const std::vector<DialogueInstance>& instances) {
  SubsetCounts c;
  for (const auto& inst : instances) {
    auto f = subset_flags(inst);
    ++c.all;
    ++(f.bullet_point ? c.bullet_point : c.regular);
    ++(f.has_scenario ? c.scenario : c.no_scenario);
    ++(f.has_history ? c.history : c.no_history);
  }
  return c;
}

}  // namespace biae
