#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "biae/errors.hpp"
#include "biae/qgen.hpp"

using namespace biae;

namespace {

DialogueInstance make(std::string id, DecisionLabel d, std::vector<HistoryTurn> history, std::string gold = "") {
  DialogueInstance inst;
  inst.utterance_id = std::move(id);
  inst.document = "You can get it if you are employed.";
  inst.question = "Can I get it?";
  inst.history = std::move(history);
  inst.gold_decision = d;
  inst.gold_answer = gold.empty() ? std::string(to_string(d)) : gold;
  return inst;
}

class Failing final : public Generator {
 public:
  std::string name() const override { return "failing"; }
  std::string propose(std::string_view, const std::vector<std::string>&) const override {
    throw std::runtime_error("weights missing");
  }
};

}  // namespace

TEST_CASE("generation input template") {
  CHECK(build_generation_input("Rule.", {}) == "document: Rule. asked:");
  CHECK(build_generation_input("Rule.", {"Q1?", "Q2?"}) == "document: Rule. asked: Q1? | Q2?");
  CHECK(build_generation_input("Rule.", {"Q2?", "Q1?"}) != build_generation_input("Rule.", {"Q1?", "Q2?"}));
}

TEST_CASE("natural set keeps only MORE instances") {
  std::vector<DialogueInstance> train = {
      make("a", DecisionLabel::Yes, {}),
      make("b", DecisionLabel::More, {{"q1?", Answer::Yes}, {"q2?", Answer::No}}, "Are you employed?"),
      make("c", DecisionLabel::More, {}, "Do you live here?"),
  };
  auto nat = natural_generation_set(train);
  REQUIRE(nat.size() == 2);
  CHECK(nat[0].utterance_id == "b");
  CHECK(nat[0].asked_questions == std::vector<std::string>{"q1?", "q2?"});
  CHECK(nat[0].target_question == "Are you employed?");
  CHECK(nat[1].asked_questions.empty());
}

TEST_CASE("augmentation drops the last turn of non-MORE dialogues") {
  std::vector<DialogueInstance> train = {
      make("no", DecisionLabel::No, {{"q1?", Answer::Yes}, {"q2?", Answer::No}}),
      make("yes-empty", DecisionLabel::Yes, {}),
      make("more", DecisionLabel::More, {{"q1?", Answer::Yes}}, "q9?"),
      make("irr", DecisionLabel::Irrelevant, {{"only?", Answer::No}}),
  };
  auto aug = augment(train);
  REQUIRE(aug.size() == 2);
  CHECK(aug[0].asked_questions == std::vector<std::string>{"q1?"});
  CHECK(aug[0].target_question == "q2?");
  CHECK(aug[1].asked_questions.empty());
  CHECK(aug[1].target_question == "only?");
}

TEST_CASE("template generator rewrites the first uncovered unit") {
  TemplateGenerator gen;
  CHECK(generate_question("You give your employer the correct notice.", {}, gen) ==
        "Do you give your employer the correct notice?");
  std::string doc =
      "You can get Statutory Maternity Leave if:\n* you are an employee\n* you give your employer the correct notice";
  CHECK(generate_question(doc, {}, gen) == "Are you an employee?");
  CHECK(generate_question(doc, {"Are you an employee?"}, gen) == "Do you give your employer the correct notice?");
  // Determinism.
  CHECK(generate_question(doc, {"Are you an employee?"}, gen) == generate_question(doc, {"Are you an employee?"}, gen));
}

TEST_CASE("template generator skips the head of an inline rule") {
  TemplateGenerator gen;
  CHECK(generate_question("You can get Pension Credit if you care for someone 35 hours a week.", {}, gen) ==
        "Do you care for someone 35 hours a week?");
}

TEST_CASE("condition rewriting") {
  CHECK(question_from_condition("if you're over 18,") == "Are you over 18?");
  CHECK(question_from_condition("you were born in the UK") == "Were you born in the UK?");
  CHECK(question_from_condition("your partner is unemployed") == "Is it true that your partner is unemployed?");
  CHECK(question_from_condition("the property is empty.") == "Is it true that the property is empty?");
}

TEST_CASE("generate appends a question mark and wraps failures") {
  ScriptedGenerator plain({"Are you a student"});
  CHECK(generate_question("Doc.", {}, plain) == "Are you a student?");
  ScriptedGenerator blank({"   "});
  CHECK_THROWS_AS(generate_question("Doc.", {}, blank), GenerationError);
  Failing failing;
  try {
    generate_question("Doc.", {}, failing);
    FAIL("expected GenerationError");
  } catch (const GenerationError& e) {
    CHECK(std::string(e.what()).find("weights missing") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_question("", {}, plain), ValidationError);
  CHECK_THROWS_AS(make_generator("t5-base"), ServiceError);
}

TEST_CASE("scripted generator cycles on the asked count") {
  ScriptedGenerator loop({"A?", "B?"});
  CHECK(loop.propose("d", {}) == "A?");
  CHECK(loop.propose("d", {"A?"}) == "B?");
  CHECK(loop.propose("d", {"A?", "B?"}) == "A?");
  CHECK(normalize_question("  Are you  EMPLOYED? ") == normalize_question("are you employed ?"));
}

TEST_CASE("generation file export") {
  auto path = std::filesystem::temp_directory_path() / "biae_qgen_export.jsonl";
  export_generation_file(path, {{"x", "Rule.", {"Q1?"}, "Q2?"}, {"y", "Other.", {}, "Q3?"}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == R"({"input_text":"document: Rule. asked: Q1?","target_text":"Q2?"})");
  std::getline(in, line);
  CHECK(nlohmann::json::parse(line)["input_text"] == "document: Other. asked:");
  std::filesystem::remove(path);
}
