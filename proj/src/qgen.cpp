#include "biae/qgen.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <nlohmann/json.hpp>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

std::string build_generation_input(std::string_view document, const std::vector<std::string>& asked_questions) {
  std::string out = "document: ";
  out += text::trim(document);
  out += " asked:";
  for (std::size_t k = 0; k < asked_questions.size(); ++k) {
    out += k == 0 ? " " : " | ";
    out += text::trim(asked_questions[k]);
  }
  return out;
}

std::vector<std::string> asked_questions_of(const DialogueInstance& instance) {
  std::vector<std::string> out;
  out.reserve(instance.history.size());
  for (const auto& turn : instance.history) out.push_back(turn.follow_up_question);
  return out;
}

std::vector<GenerationInstance> natural_generation_set(const std::vector<DialogueInstance>& train) {
  std::vector<GenerationInstance> out;
  for (const auto& inst : train) {
    if (inst.gold_decision != DecisionLabel::More) continue;
    out.push_back({inst.utterance_id, inst.document, asked_questions_of(inst), inst.gold_answer});
  }
  return out;
}

std::vector<GenerationInstance> augment(const std::vector<DialogueInstance>& train) {
  std::vector<GenerationInstance> out;
  for (const auto& inst : train) {
    if (inst.gold_decision == DecisionLabel::More || inst.history.empty()) continue;
    auto asked = asked_questions_of(inst);
    std::string target = asked.back();
    asked.pop_back();
    out.push_back({inst.utterance_id, inst.document, std::move(asked), std::move(target)});
  }
  return out;
}

namespace {

std::string strip_condition(std::string_view condition) {
  std::string s(text::trim(condition));
  static const char* kBullets[] = {"* ", "- ", "• "};
  for (const char* b : kBullets)
    if (s.rfind(b, 0) == 0) s = std::string(text::trim(s.substr(std::string_view(b).size())));
  while (!s.empty() && std::string_view(".,;:?!").find(s.back()) != std::string_view::npos) s.pop_back();
  static const char* kLeads[] = {"if ", "unless ", "when ", "and ", "or ", "but ", "that ", "whether "};
  bool changed = true;
  while (changed) {
    changed = false;
    for (const char* lead : kLeads)
      if (text::starts_with_ci(s, lead)) {
        s = std::string(text::trim(s.substr(std::string_view(lead).size())));
        changed = true;
      }
  }
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::string question_from_condition(std::string_view condition) {
  std::string s = strip_condition(condition);
  if (s.empty()) return {};
  struct Rule {
    const char* prefix;
    const char* replacement;
  };
  static const Rule kRules[] = {
      {"you're ", "are you "},        {"you are ", "are you "},       {"you were ", "were you "},
      {"you must be ", "are you "},   {"you need to be ", "are you "}, {"you have been ", "have you been "},
      {"you've ", "have you "},       {"you can ", "can you "},       {"you could ", "could you "},
      {"you will ", "will you "},     {"you would ", "would you "},   {"you should ", "do you "},
      {"you must ", "do you "},       {"you need to ", "do you "},    {"you don't ", "do you not "},
      {"you do not ", "do you not "}, {"you did ", "did you "},       {"you ", "do you "},
      {"your ", "is it true that your "}, {"they are ", "are they "}, {"it is ", "is it "},
      {"there is ", "is there "},     {"there are ", "are there "},
  };
  for (const auto& rule : kRules) {
    if (text::starts_with_ci(s, rule.prefix)) {
      std::string out = rule.replacement + s.substr(std::string_view(rule.prefix).size());
      return capitalize(out) + "?";
    }
  }
  s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return "Is it true that " + s + "?";
}

TemplateGenerator::TemplateGenerator(double coverage_threshold) : threshold_(coverage_threshold) {}

std::string TemplateGenerator::propose(std::string_view document,
                                       const std::vector<std::string>& asked_questions) const {
  auto hyps = segment_document(document, segmenter_);
  std::vector<Eigen::VectorXd> asked;
  for (const auto& q : asked_questions) asked.push_back(oracle_.embed(q));
  int best = -1;
  double best_cover = 2.0;
  auto opens_condition = [](std::string_view unit) {
    auto t = text::trim(unit);
    for (std::string_view w : {"if ", "unless ", "when ", "as long as ", "provided "})
      if (text::starts_with_ci(t, w)) return true;
    return false;
  };
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto& h = hyps[k];
    std::string t(text::trim(h.text));
    if (!t.empty() && t.back() == ':') continue;  // list head
    if (k + 1 < hyps.size() && opens_condition(hyps[k + 1].text)) continue;  // inline rule head
    if (strip_condition(t).empty()) continue;
    auto v = oracle_.embed(question_from_condition(t));
    double cover = 0.0;
    for (const auto& a : asked) cover = std::max(cover, cosine_similarity(v, a));
    if (cover < threshold_) return question_from_condition(t);
    if (cover < best_cover) {
      best_cover = cover;
      best = h.index;
    }
  }
  if (best >= 0) return question_from_condition(hyps[static_cast<std::size_t>(best)].text);
  return question_from_condition(document);
}

ScriptedGenerator::ScriptedGenerator(std::vector<std::string> questions, std::string name)
    : questions_(std::move(questions)), name_(std::move(name)) {
  if (questions_.empty()) throw ValidationError("scripted generator needs at least one question");
}

std::string ScriptedGenerator::propose(std::string_view, const std::vector<std::string>& asked_questions) const {
  return questions_[asked_questions.size() % questions_.size()];
}

std::string generate_question(std::string_view document, const std::vector<std::string>& asked_questions,
                     const Generator& generator) {
  if (text::trim(document).empty()) throw ValidationError("generation needs a non-empty document");
  std::string out;
  try {
    std::string raw = generator.propose(document, asked_questions);
    out = std::string(text::trim(raw));
  } catch (const Error& e) {
    throw GenerationError("generator " + generator.name() + " failed: " + e.what());
  } catch (const std::exception& e) {
    throw GenerationError("generator " + generator.name() + " failed: " + e.what());
  }
  if (out.empty()) throw GenerationError("generator " + generator.name() + " produced empty output");
  if (out.back() != '?') out += '?';
  return out;
}

std::string normalize_question(std::string_view question) { return text::join(text::words(question), " "); }

std::unique_ptr<Generator> make_generator(std::string_view spec) {
  if (spec == "template") return std::make_unique<TemplateGenerator>();
  throw ServiceError("unknown generator: " + std::string(spec));
}

void export_generation_file(const std::filesystem::path& file, const std::vector<GenerationInstance>& instances) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& g : instances) {
    nlohmann::ordered_json rec;
    rec["input_text"] = build_generation_input(g.document, g.asked_questions);
    rec["target_text"] = g.target_question;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + file.string());
}

}  // namespace biae
