#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "biae/errors.hpp"
#include "biae/segmenter.hpp"

using namespace biae;

namespace {

nlohmann::json load_fixture(const std::string& name) {
  std::ifstream in(std::filesystem::path(BIAE_FIXTURE_DIR) / name);
  return nlohmann::json::parse(in);
}

std::vector<std::string> texts(const std::vector<Hypothesis>& hs) {
  std::vector<std::string> out;
  for (const auto& h : hs) out.push_back(h.text);
  return out;
}

}  // namespace

TEST_CASE("bullet list splits into head and items") {
  auto hs = segment_document("You qualify if:\n* you are employed\n* you give notice");
  CHECK(texts(hs) == std::vector<std::string>{"You qualify if:", "you are employed", "you give notice"});
}

TEST_CASE("single sentence without connectives stays whole") {
  auto hs = segment_document("Apprentices are entitled to the minimum wage.");
  REQUIRE(hs.size() == 1);
  CHECK(hs[0].text == "Apprentices are entitled to the minimum wage.");
}

TEST_CASE("whitespace-only document is rejected") {
  CHECK_THROWS_AS(segment_document("  \n\t "), ValidationError);
  CHECK_THROWS_AS(segment_document(""), ValidationError);
}

TEST_CASE("spans are ordered, in bounds and match the text") {
  auto fixture = load_fixture("edu_gold.json");
  for (const auto& item : fixture) {
    auto doc = item["document"].get<std::string>();
    auto hs = segment_document(doc);
    REQUIRE(!hs.empty());
    std::size_t prev_end = 0;
    for (std::size_t k = 0; k < hs.size(); ++k) {
      const auto& h = hs[k];
      CHECK(h.index == static_cast<int>(k));
      CHECK(h.span.start >= prev_end);
      CHECK(h.span.start < h.span.end);
      CHECK(h.span.end <= doc.size());
      CHECK(doc.substr(h.span.start, h.span.end - h.span.start) == h.text);
      prev_end = h.span.end;
    }
    // Determinism.
    CHECK(texts(segment_document(doc)) == texts(hs));
  }
}

TEST_CASE("boundary F1 against hand-annotated EDUs") {
  auto fixture = load_fixture("edu_gold.json");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& item : fixture) {
    auto doc = item["document"].get<std::string>();
    std::set<std::size_t> gold;
    std::size_t cursor = 0;
    bool first = true;
    for (const auto& edu : item["edus"]) {
      auto pos = doc.find(edu.get<std::string>(), cursor);
      REQUIRE_MESSAGE(pos != std::string::npos, edu.get<std::string>());
      if (!first) gold.insert(pos);
      first = false;
      cursor = pos + 1;
    }
    std::set<std::size_t> predicted;
    auto hs = segment_document(doc);
    for (std::size_t k = 1; k < hs.size(); ++k) predicted.insert(hs[k].span.start);
    for (auto b : predicted) (gold.count(b) ? tp : fp)++;
    for (auto b : gold)
      if (!predicted.count(b)) ++fn;
  }
  double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  std::cout << "EDU boundary P=" << precision << " R=" << recall << " F1=" << f1 << " (tp=" << tp << " fp=" << fp
            << " fn=" << fn << ")\n";
  CHECK(f1 >= 0.8);
}

TEST_CASE("scenario sentence splitting") {
  CHECK(segment_scenario("I'm still working right now. I just turned in the notice.") ==
        std::vector<std::string>{"I'm still working right now.", "I just turned in the notice."});
  CHECK(segment_scenario("").empty());
  CHECK(segment_scenario("   ").empty());
  CHECK(segment_scenario("I need help with costs, e.g. travel to the hospital. I live in Kent.").size() == 2);
}

TEST_CASE("scenario splitting against a hand-labeled sentence set") {
  auto fixture = load_fixture("scenario_sentences.json");
  std::size_t sentences = 0, exact_items = 0;
  for (const auto& item : fixture) {
    auto gold = item["sentences"].get<std::vector<std::string>>();
    sentences += gold.size();
    auto got = segment_scenario(item["text"].get<std::string>());
    if (got == gold) ++exact_items;
  }
  CHECK(sentences >= 50);
  double accuracy = static_cast<double>(exact_items) / static_cast<double>(fixture.size());
  std::cout << "scenario segmentation: " << exact_items << "/" << fixture.size() << " texts exact (" << sentences
            << " gold sentences)\n";
  CHECK(accuracy >= 0.9);

  // Every whitelisted abbreviation case in the set is respected exactly.
  for (const auto& item : fixture) {
    auto t = item["text"].get<std::string>();
    if (t.find("e.g.") != std::string::npos || t.find("i.e.") != std::string::npos ||
        t.find("Mr.") != std::string::npos || t.find("Dr.") != std::string::npos) {
      CHECK(segment_scenario(t) == item["sentences"].get<std::vector<std::string>>());
    }
  }
}

TEST_CASE("format_turn templates") {
  CHECK(format_turn({"Do you give notice?", Answer::Yes}) == "System: Do you give notice? Client: Yes");
  CHECK(format_turn({"Are you employed?", Answer::No}) == "System: Are you employed? Client: No");
  CHECK(format_turn({"  Are you employed?  \n", Answer::No}) == "System: Are you employed? Client: No");
}

TEST_CASE("premise set puts scenario sentences before turns") {
  auto ps = build_premise_set({"S1.", "S2."}, {{"Q?", Answer::Yes}});
  REQUIRE(ps.size() == 3);
  CHECK(ps[0].source == PremiseSource::Scenario);
  CHECK(ps[1].source == PremiseSource::Scenario);
  CHECK(ps[2].source == PremiseSource::Turn);
  CHECK_FALSE(ps[0].turn_ref.has_value());
  CHECK(ps[2].turn_ref == 0);
  CHECK(ps[2].answer == Answer::Yes);
  for (std::size_t k = 0; k < ps.size(); ++k) CHECK(ps[k].index == static_cast<int>(k));

  CHECK(build_premise_set({}, {}).empty());
}

TEST_CASE("figure-style example: one scenario sentence and one turn") {
  auto ps = premises_of("I'm still working right now and I just turned in the notice.",
                        {{"Are you an employee?", Answer::Yes}});
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].text == "I'm still working right now and I just turned in the notice.");
  CHECK(ps[1].text == "System: Are you an employee? Client: Yes");
}

TEST_CASE("premise ordering property over many shapes") {
  for (int s = 0; s < 5; ++s) {
    for (int t = 0; t < 5; ++t) {
      std::vector<std::string> sents(static_cast<std::size_t>(s), "Sentence.");
      std::vector<HistoryTurn> turns(static_cast<std::size_t>(t), HistoryTurn{"Q?", Answer::No});
      auto ps = build_premise_set(sents, turns);
      REQUIRE(ps.size() == static_cast<std::size_t>(s + t));
      int last_scenario = -1, first_turn = s + t;
      for (const auto& p : ps) {
        if (p.source == PremiseSource::Scenario) last_scenario = std::max(last_scenario, p.index);
        else first_turn = std::min(first_turn, p.index);
      }
      CHECK(last_scenario < first_turn);
    }
  }
}
