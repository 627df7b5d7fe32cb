// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//   acceptance --group desk     synthetic and oracle checks, no data needed
//   acceptance --group corpus   needs the ShARC release; exits 77 when absent

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biae/biae_core.hpp"
#include "biae/dialogue.hpp"
#include "biae/metrics.hpp"
#include "biae/qgen.hpp"
#include "biae/synthetic.hpp"
#include "biae/text.hpp"
#include "biae/train.hpp"
#include "biae/weak_labels.hpp"
#include "dialogue_fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "random_text.hpp"

using namespace biae;
namespace fs = std::filesystem;

namespace {

constexpr int kSkip = 77;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// Records the first failing check with a message; later checks still run.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && first_.empty()) first_ = what;
    ok_ = ok_ && ok;
  }
  bool ok() const { return ok_; }
  const std::string& first_failure() const { return first_; }

 private:
  bool ok_ = true;
  std::string first_;
};

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

Outcome finish(const Checks& c, const std::string& detail) {
  return {c.ok(), c.ok() ? detail : c.first_failure()};
}

// ---- desk group

Outcome parameter_count_check() {
  Checks c;
  c.expect(parameter_count(1024) == 31753, "parameter_count(1024) = " + std::to_string(parameter_count(1024)));
  c.expect(parameter_count(768) == 23817, "parameter_count(768) = " + std::to_string(parameter_count(768)));
  for (int d : {1, 8, 768, 1024})
    c.expect(BiAEParameters::zeros(d).count() == parameter_count(d),
             "enumeration disagrees with formula at d=" + std::to_string(d));
  return finish(c, "d=1024: 31753, d=768: 23817, enumeration agrees");
}

Outcome gradient_suite() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::string worst_group;
  for (int k = 0; k < 20; ++k) {
    auto r = testing::random_instance(rng, 8, 4, 3, 0);
    auto params = BiAEParameters::initialize(8, rng());
    for (const auto& [group, err] : testing::joint_loss_gradient_errors(r, params)) {
      if (err > worst) {
        worst = err;
        worst_group = group;
      }
    }
  }
  return {worst < 1e-4, "max relative error " + fmt(worst) + (worst_group.empty() ? "" : " (" + worst_group + ")")};
}

Outcome stochasticity() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  bool negative = false;
  for (int k = 0; k < 1000; ++k) {
    auto r = testing::random_instance(rng, 8, 6, 5, 0);
    auto params = BiAEParameters::initialize(8, rng());
    auto pass = forward(r.input, params);
    auto dev = [&](double s) { worst = std::max(worst, std::abs(s - 1.0)); };
    const auto& A = pass.alignment.probs;
    for (int i = 0; i < A.rows() && A.cols() > 0; ++i) dev(A.row(i).sum());
    for (int row = 0; row < pass.entailment.probs.rows(); ++row) dev(pass.entailment.probs.row(row).sum());
    dev(pass.summary.attention.sum());
    dev(pass.outcome.probabilities.sum());
    if (!pass.alignment.no_premises()) {
      auto coeff = state_coefficients(pass.alignment, pass.entailment);
      for (int i = 0; i < coeff.rows(); ++i) {
        dev(coeff.row(i).sum());
        if (coeff.row(i).minCoeff() < 0.0) negative = true;
      }
    }
  }
  Checks c;
  c.expect(worst < 1e-6, "max deviation from 1 is " + fmt(worst));
  c.expect(!negative, "negative state coefficient");
  return finish(c, "max deviation from 1 is " + fmt(worst));
}

Outcome overfit() {
  SyntheticConfig sc;
  sc.instances = 32;
  sc.seed = 1;
  auto data = synthetic_dataset(sc);
  auto labels = build_label_cache(data, RuleSegmenter(), HashingEmbeddingOracle());
  TrainConfig tc;
  tc.lambda = 2.0;
  tc.encoder_name = "toy:13:32";
  tc.learning_rate = 0.01;
  tc.batch_size = 32;
  tc.dropout = 0.0;
  tc.warmup_fraction = 0.0;
  tc.seed = 1;
  tc.max_steps = 500;
  Trainer trainer(data, labels, tc);
  int reached = -1;
  while (trainer.step_count() < 500) {
    trainer.step();
    if (reached < 0 && trainer.step_count() % 10 == 0 && trainer.training_accuracy() == 1.0)
      reached = trainer.step_count();
    if (reached >= 0 && trainer.step_count() >= 300) break;
  }
  const auto& curve = trainer.loss_curve();
  int increases = 0;
  double prev = 0.0;
  for (std::size_t t = 49; t < 300 && t < curve.size(); ++t) {
    double ma = 0.0;
    for (std::size_t k = t - 49; k <= t; ++k) ma += curve[k];
    ma /= 50.0;
    if (t > 49 && ma >= prev) ++increases;
    prev = ma;
  }
  Checks c;
  c.expect(reached > 0, "training accuracy " + fmt(trainer.training_accuracy()) + " after 500 steps");
  c.expect(curve.size() >= 300, "fewer than 300 steps recorded");
  c.expect(increases == 0, std::to_string(increases) + " non-decreasing moving-average steps in the first 300");
  return finish(c, "100% accuracy at step " + std::to_string(reached) + ", moving average strictly decreasing");
}

Outcome weak_label_oracle() {
  Checks c;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  int ties = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int m = 1 + static_cast<int>(rng() % 6), n = static_cast<int>(rng() % 5), d = 5;
    std::vector<oracle::Vec> H, U;
    for (int i = 0; i < m; ++i) {
      if (i > 0 && rng() % 4 == 0) {
        H.push_back(H.back());
        ++ties;
        continue;
      }
      oracle::Vec v(static_cast<std::size_t>(d));
      for (auto& x : v) x = g(rng);
      H.push_back(v);
    }
    for (int j = 0; j < n; ++j) {
      oracle::Vec v(static_cast<std::size_t>(d));
      for (auto& x : v) x = g(rng);
      U.push_back(v);
    }
    std::vector<Eigen::VectorXd> He, Ue;
    for (auto& v : H) He.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), d));
    for (auto& v : U) Ue.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), d));
    c.expect(align_embeddings(He, Ue).premise_to_hypothesis == oracle::brute_force_alignment(H, U),
             "alignment differs from brute force on set " + std::to_string(trial));
  }

  // Text-level labels on a synthetic corpus.
  SyntheticConfig sc;
  sc.instances = 200;
  sc.seed = 3;
  auto data = synthetic_dataset(sc);
  HashingEmbeddingOracle o;
  auto cache = build_label_cache(data, RuleSegmenter(), o);
  std::size_t premises = 0;
  for (const auto& inst : data) {
    auto l = cache.get(inst.utterance_id, o.name());
    std::size_t non_neutral = 0;
    for (const auto& [key, s] : l.entailment.pair_labels) {
      if (s == EntailmentState::Neutral) continue;
      ++non_neutral;
      c.expect(l.alignment.premise_to_hypothesis[static_cast<std::size_t>(key.second)] == key.first,
               inst.utterance_id + ": non-neutral pair off the aligned hypothesis");
    }
    c.expect(non_neutral == static_cast<std::size_t>(l.entailment.num_premises),
             inst.utterance_id + ": " + std::to_string(non_neutral) + " non-neutral pairs for " +
                 std::to_string(l.entailment.num_premises) + " premises");
    premises += static_cast<std::size_t>(l.entailment.num_premises);
  }
  return finish(c, "200 sets exact (" + std::to_string(ties) + " forced ties), " + std::to_string(premises) +
                       " premises each with one non-neutral pair");
}

Outcome metric_oracles() {
  using D = DecisionLabel;
  using S = EntailmentState;
  Checks c;
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-9; };

  std::mt19937_64 rng(17);
  auto pairs = testing::random_question_pairs(rng, 50);
  std::vector<std::string> cand, ref;
  std::vector<Tokens> ct, rt;
  for (const auto& [a, b] : pairs) {
    cand.push_back(a);
    ref.push_back(b);
    ct.push_back(text::tokenize(a));
    rt.push_back(text::tokenize(b));
  }
  std::vector<D> more(pairs.size(), D::More);
  auto got = conditional_bleu(more, more, cand, ref);
  double worst = 0.0;
  c.expect(got.has_value(), "conditional BLEU empty");
  if (got)
    for (int n = 1; n <= 4; ++n) worst = std::max(worst, std::abs((*got)[n] - oracle::reference_bleu(ct, rt, n)));
  c.expect(worst < 1e-6, "BLEU differs from reference by " + fmt(worst));
  auto same = corpus_bleu(ref, ref);
  for (int n = 1; n <= 4; ++n) c.expect(std::abs(same[n] - 100.0) < 1e-9, "identical BLEU-" + std::to_string(n) + " is not 100");

  struct Hand {
    std::vector<D> pred, gold;
    double micro, macro;
    std::map<D, double> classes;
  };
  const std::vector<Hand> hand = {
      {{D::Yes, D::Yes, D::Yes, D::No}, {D::Yes, D::Yes, D::No, D::No}, 0.75, 0.75, {{D::Yes, 1.0}, {D::No, 0.5}}},
      {{D::Yes, D::Yes, D::Yes, D::Yes, D::Yes}, {D::Yes, D::Yes, D::Yes, D::Yes, D::No}, 0.8, 0.5,
       {{D::Yes, 1.0}, {D::No, 0.0}}},
      {{D::More, D::Irrelevant}, {D::More, D::Irrelevant}, 1.0, 1.0, {{D::More, 1.0}, {D::Irrelevant, 1.0}}},
      {{D::No, D::No, D::More, D::Yes, D::Irrelevant, D::More},
       {D::Yes, D::No, D::More, D::More, D::Irrelevant, D::No},
       0.5, (0.0 + 0.5 + 0.5 + 1.0) / 4.0,
       {{D::Yes, 0.0}, {D::No, 0.5}, {D::More, 0.5}, {D::Irrelevant, 1.0}}},
      {{D::Irrelevant, D::Irrelevant, D::Irrelevant}, {D::More, D::More, D::Irrelevant}, 1.0 / 3.0,
       (0.0 + 1.0) / 2.0, {{D::More, 0.0}, {D::Irrelevant, 1.0}}},
  };
  for (std::size_t k = 0; k < hand.size(); ++k) {
    auto mm = micro_macro(hand[k].pred, hand[k].gold);
    c.expect(near(mm.micro, hand[k].micro) && near(mm.macro, hand[k].macro),
             "micro/macro mismatch on hand set " + std::to_string(k + 1));
    auto cw = class_wise(hand[k].pred, hand[k].gold);
    c.expect(cw.size() == hand[k].classes.size(), "class-wise class set mismatch on hand set " + std::to_string(k + 1));
    for (const auto& [cls, acc] : hand[k].classes)
      c.expect(cw.count(cls) && near(cw.at(cls), acc), "class-wise mismatch on hand set " + std::to_string(k + 1));
  }

  c.expect(near(alpha({S::Entailment, S::Neutral, S::Contradiction, S::Neutral},
                      {S::Entailment, S::Neutral, S::Contradiction, S::Entailment}),
                0.75),
           "alpha of 3 of 4 is not 0.75");
  c.expect(near(beta({1.0, 0.5, 1.0}), 2.0 / 3.0), "beta of [1, .5, 1] is not 2/3");
  return finish(c, "BLEU max diff " + fmt(worst) + ", 5 hand sets, alpha 0.75, beta 2/3");
}

Outcome dialogue_engine() {
  Checks c;
  const int cap = 8;
  auto props = testing::run_session_properties(300, 5, cap);
  c.expect(props.violations == 0, std::to_string(props.violations) + " violations, first: " + props.first_violation);
  c.expect(props.duplicate_closes > 0 && props.cap_closes > 0 && props.decision_closes > 0,
           "random sessions did not exercise every close reason");

  auto looping = std::make_shared<ScriptedGenerator>(std::vector<std::string>{"Are you over 16?", "Do you care?"});
  SessionStore store(testing::fixture_model(testing::biased_checkpoint(0, 2.0, 1.0, 5.0), looping), {cap, std::nullopt});
  auto s = store.create_session(testing::kFixtureDocument, testing::kFixtureQuestion, "");
  int answers = 0;
  while (s.status == SessionStatus::AwaitingAnswer && answers <= cap) {
    s = store.answer_followup(s.session_id, Answer::Yes);
    ++answers;
  }
  c.expect(s.status == SessionStatus::Closed && s.close_reason == CloseReason::DuplicateQuestion,
           "looping generator did not force-close on a duplicate");
  c.expect(s.final_decision.has_value() && *s.final_decision != DecisionLabel::More, "forced close has no terminal decision");
  bool rejected = false;
  try {
    store.answer_followup(s.session_id, Answer::No);
  } catch (const ConflictError&) {
    rejected = true;
  }
  c.expect(rejected, "closed session accepted an answer");
  return finish(c, std::to_string(props.sessions) + " sessions (" + std::to_string(props.decision_closes) +
                       " decision, " + std::to_string(props.cap_closes) + " cap, " +
                       std::to_string(props.duplicate_closes) + " duplicate closes), looping fixture closed after " +
                       std::to_string(answers) + " answers");
}

// ---- corpus group

fs::path data_dir() {
  if (const char* env = std::getenv("SHARC_DIR"); env && *env) return env;
  return BIAE_DEFAULT_DATA_DIR;
}

bool corpus_available(const fs::path& dir) {
  try {
    return fs::exists(resolve_split_path(dir, Split::Train)) && fs::exists(resolve_split_path(dir, Split::Dev));
  } catch (const std::exception&) {
    return false;
  }
}

Outcome augmentation_identities(const fs::path& dir) {
  Checks c;
  auto train = load_dataset(dir, Split::Train);
  auto natural = natural_generation_set(train);
  double ratio = static_cast<double>(natural.size()) / 21890.0;
  c.expect(std::abs(ratio - 0.3108) <= 0.002, "natural ratio " + fmt(ratio));

  std::map<std::string, const DialogueInstance*> by_id;
  std::size_t eligible = 0;
  for (const auto& inst : train) {
    by_id[inst.utterance_id] = &inst;
    if (inst.gold_decision != DecisionLabel::More && !inst.history.empty()) ++eligible;
  }
  auto augmented = augment(train);
  c.expect(augmented.size() == eligible, "augmented " + std::to_string(augmented.size()) + " of " +
                                             std::to_string(eligible) + " eligible instances");
  for (const auto& a : augmented) {
    auto it = by_id.find(a.utterance_id);
    c.expect(it != by_id.end(), a.utterance_id + ": augmented sample has no source");
    if (it == by_id.end()) continue;
    c.expect(a.target_question == it->second->history.back().follow_up_question,
             a.utterance_id + ": target is not the source's last follow-up question");
  }
  for (const auto* set : {&natural, &augmented})
    for (const auto& g : *set)
      for (const auto& f : g.asked_questions)
        c.expect(f != g.target_question, g.utterance_id + ": asked questions contain the target");
  return finish(c, "natural ratio " + fmt(ratio, 4) + ", " + std::to_string(augmented.size()) + " augmented samples");
}

Outcome corpus_fidelity(const fs::path& dir) {
  Checks c;
  auto train = load_dataset(dir, Split::Train);
  auto dev = load_dataset(dir, Split::Dev);
  c.expect(train.size() == 21890, "train has " + std::to_string(train.size()) + " instances");
  c.expect(dev.size() == 2270, "dev has " + std::to_string(dev.size()) + " instances");
  auto s = count_subsets(dev);
  const std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> expected = {
      {"bullet_point", {s.bullet_point, 999}}, {"regular", {s.regular, 1271}},
      {"scenario", {s.scenario, 1839}},        {"no_scenario", {s.no_scenario, 431}},
      {"history", {s.history, 1509}},          {"no_history", {s.no_history, 761}},
      {"all", {s.all, 2270}}};
  for (const auto& [name, counts] : expected)
    c.expect(counts.first == counts.second,
             "dev " + name + " has " + std::to_string(counts.first) + ", expected " + std::to_string(counts.second));
  return finish(c, "train 21890, dev 2270, dev subsets match");
}

// ---- runner

int run(const std::vector<Criterion>& criteria) {
  int failures = 0;
  for (const auto& cr : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.pass && secs > cr.budget_seconds) {
      out.pass = false;
      out.detail += "; exceeded the " + fmt(cr.budget_seconds) + " s budget";
    }
    if (!out.pass) ++failures;
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << cr.name << " (" << fmt(secs, 3) << " s): " << out.detail
              << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string group = "desk";
  app.add_option("--group", group, "criterion group")->check(CLI::IsMember({"desk", "corpus"}));
  CLI11_PARSE(app, argc, argv);

  if (group == "desk") {
    return run({
        {"parameter_count", 1.0, parameter_count_check},
        {"gradient_suite", 120.0, gradient_suite},
        {"stochasticity", 60.0, stochasticity},
        {"overfit", 180.0, overfit},
        {"weak_label_oracle", 60.0, weak_label_oracle},
        {"metric_oracles", 60.0, metric_oracles},
        {"dialogue_engine", 60.0, dialogue_engine},
    });
  }

  auto dir = data_dir();
  if (!corpus_available(dir)) {
    std::cout << "[SKIP] augmentation_identities: no ShARC data at " << dir.string() << " (set SHARC_DIR)\n"
              << "[SKIP] corpus_fidelity: no ShARC data at " << dir.string() << " (set SHARC_DIR)" << std::endl;
    return kSkip;
  }
  return run({
      {"augmentation_identities", 60.0, [&] { return augmentation_identities(dir); }},
      {"corpus_fidelity", 60.0, [&] { return corpus_fidelity(dir); }},
  });
}
