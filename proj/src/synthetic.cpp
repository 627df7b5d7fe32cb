#include "biae/synthetic.hpp"

#include <random>

#include "biae/errors.hpp"
#include "biae/qgen.hpp"

namespace biae {

namespace {

struct Condition {
  const char* rule;  // as written in the document
  const char* fact;  // scenario sentence asserting it
};

const Condition kConditions[] = {
    {"you are over 18", "I am over 18."},
    {"you live in England", "I live in England."},
    {"you are employed", "I am employed."},
    {"you have a disability", "I have a disability."},
    {"you care for someone 35 hours a week", "I care for someone 35 hours a week."},
    {"you gave your employer the correct notice", "I gave my employer the correct notice."},
    {"you earn less than 120 pounds a week", "I earn less than 120 pounds a week."},
    {"you are a full-time student", "I am a full-time student."},
    {"you have a child under 16", "I have a child under 16."},
    {"you have savings under 16,000 pounds", "I have savings under 16,000 pounds."},
    {"you paid National Insurance contributions", "I paid National Insurance contributions."},
    {"you are a British citizen", "I am a British citizen."},
};

const char* kBenefits[] = {"Carer's Allowance", "Statutory Maternity Pay", "Winter Fuel Payment",
                           "a Blue Badge",      "Pension Credit",          "Housing Benefit",
                           "a student loan",    "Child Benefit"};

constexpr std::size_t kNumConditions = std::size(kConditions);
constexpr std::size_t kNumBenefits = std::size(kBenefits);

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool coin() { return (rng_() >> 63) != 0; }

 private:
  std::mt19937_64 rng_;
};

enum class Status { Satisfied, Violated, Unknown };

DecisionLabel draw_class(Draw& draw, const double (&w)[4]) {
  double total = w[0] + w[1] + w[2] + w[3];
  double x = draw.unit() * total;
  for (int k = 0; k < 4; ++k) {
    if (x < w[k]) return static_cast<DecisionLabel>(k);
    x -= w[k];
  }
  return DecisionLabel::More;
}

}  // namespace

std::vector<DialogueInstance> synthetic_dataset(const SyntheticConfig& config) {
  if (config.instances < 0 || config.min_conditions < 1 || config.max_conditions < config.min_conditions ||
      static_cast<std::size_t>(config.max_conditions) > kNumConditions)
    throw ValidationError("invalid synthetic config");
  Draw draw(config.seed);
  std::vector<DialogueInstance> out;
  for (int k = 0; k < config.instances; ++k) {
    DialogueInstance inst;
    inst.utterance_id = "syn-" + std::to_string(config.seed) + "-" + std::to_string(k);
    inst.tree_id = "syn-tree-" + std::to_string(config.seed) + "-" + std::to_string(k);
    inst.source_url = "synthetic://rules/" + std::to_string(k);
    inst.extras = ordered_json::object();

    const std::size_t benefit = draw.below(kNumBenefits);
    const int span = config.max_conditions - config.min_conditions + 1;
    const int count = config.min_conditions + static_cast<int>(draw.below(static_cast<std::size_t>(span)));
    std::vector<std::size_t> pool(kNumConditions);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t i = pool.size() - 1; i > 0; --i) std::swap(pool[i], pool[draw.below(i + 1)]);
    std::vector<std::size_t> conds(pool.begin(), pool.begin() + count);

    if (count == 1) {
      inst.document = std::string("You can get ") + kBenefits[benefit] + " if " + kConditions[conds[0]].rule + ".";
    } else {
      inst.document = std::string("You can get ") + kBenefits[benefit] + " if:";
      for (auto c : conds) inst.document += std::string("\n* ") + kConditions[c].rule;
    }

    DecisionLabel target = draw_class(draw, config.class_weights);
    std::size_t asked = benefit;
    if (target == DecisionLabel::Irrelevant) asked = (benefit + 1 + draw.below(kNumBenefits - 1)) % kNumBenefits;
    inst.question = std::string("Can I get ") + kBenefits[asked] + "?";

    std::vector<Status> status(conds.size(), Status::Satisfied);
    switch (target) {
      case DecisionLabel::Yes:
        break;
      case DecisionLabel::No:
        for (auto& s : status) s = draw.coin() ? Status::Satisfied : Status::Unknown;
        status[draw.below(status.size())] = Status::Violated;
        break;
      case DecisionLabel::More:
        for (auto& s : status) s = draw.coin() ? Status::Satisfied : Status::Unknown;
        status[draw.below(status.size())] = Status::Unknown;
        break;
      case DecisionLabel::Irrelevant:
        for (auto& s : status) s = draw.coin() ? Status::Satisfied : Status::Unknown;
        break;
    }

    // Satisfied facts go to the scenario or a Yes turn; violations are always No turns.
    std::string scenario;
    for (std::size_t i = 0; i < conds.size(); ++i) {
      const auto& c = kConditions[conds[i]];
      if (status[i] == Status::Satisfied && draw.coin()) {
        scenario += (scenario.empty() ? "" : " ") + std::string(c.fact);
      } else if (status[i] != Status::Unknown) {
        inst.history.push_back({question_from_condition(c.rule), status[i] == Status::Satisfied ? Answer::Yes : Answer::No});
      }
    }
    inst.scenario = scenario;

    inst.gold_decision = target;
    if (target == DecisionLabel::More) {
      for (std::size_t i = 0; i < conds.size(); ++i)
        if (status[i] == Status::Unknown) {
          inst.gold_answer = question_from_condition(kConditions[conds[i]].rule);
          break;
        }
    } else {
      inst.gold_answer = target == DecisionLabel::Yes ? "Yes" : target == DecisionLabel::No ? "No" : "Irrelevant";
    }
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace biae
