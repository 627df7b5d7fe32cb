#include "biae/metrics.hpp"

#include <cmath>
#include <unordered_map>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

namespace {

void check_pairs(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": length mismatch");
  if (a == 0) throw ValidationError(std::string(what) + ": empty input");
}

std::map<DecisionLabel, std::pair<int, int>> recall_counts(const std::vector<DecisionLabel>& predictions,
                                                           const std::vector<DecisionLabel>& golds) {
  std::map<DecisionLabel, std::pair<int, int>> counts;  // gold class -> (correct, total)
  for (std::size_t k = 0; k < golds.size(); ++k) {
    auto& c = counts[golds[k]];
    c.second += 1;
    if (predictions[k] == golds[k]) c.first += 1;
  }
  return counts;
}


// n-grams keyed by their tokens joined with a unit separator.
std::unordered_map<std::string, int> ngram_counts(const Tokens& toks, int n) {
  std::unordered_map<std::string, int> out;
  if (toks.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      if (k) key += '\x1f';
      key += toks[i + static_cast<std::size_t>(k)];
    }
    ++out[key];
  }
  return out;
}

}  // namespace

MicroMacro micro_macro(const std::vector<DecisionLabel>& predictions, const std::vector<DecisionLabel>& golds) {
  check_pairs(predictions.size(), golds.size(), "micro_macro");
  int correct = 0;
  for (std::size_t k = 0; k < golds.size(); ++k) correct += predictions[k] == golds[k];
  auto counts = recall_counts(predictions, golds);
  double macro = 0.0;
  for (const auto& [label, c] : counts) macro += static_cast<double>(c.first) / c.second;
  return {static_cast<double>(correct) / static_cast<double>(golds.size()), macro / static_cast<double>(counts.size())};
}

std::map<DecisionLabel, double> class_wise(const std::vector<DecisionLabel>& predictions,
                                           const std::vector<DecisionLabel>& golds) {
  check_pairs(predictions.size(), golds.size(), "class_wise");
  std::map<DecisionLabel, double> out;
  for (const auto& [label, c] : recall_counts(predictions, golds)) out[label] = static_cast<double>(c.first) / c.second;
  return out;
}

BleuScores corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references, int max_n) {
  if (candidates.size() != references.size()) throw ValidationError("corpus_bleu: length mismatch");
  if (max_n < 1) throw ValidationError("corpus_bleu: max_n must be positive");
  std::vector<double> log_precision(static_cast<std::size_t>(max_n), 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    cand_len += static_cast<double>(candidates[s].size());
    ref_len += static_cast<double>(references[s].size());
  }
  std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0), total(static_cast<std::size_t>(max_n), 0.0);
  for (std::size_t s = 0; s < candidates.size(); ++s) {
    for (int n = 1; n <= max_n; ++n) {
      auto cand = ngram_counts(candidates[s], n);
      auto ref = ngram_counts(references[s], n);
      for (const auto& [gram, count] : cand) {
        total[static_cast<std::size_t>(n - 1)] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matched[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
      }
    }
  }
  double bp = cand_len >= ref_len ? 1.0 : (cand_len == 0.0 ? 0.0 : std::exp(1.0 - ref_len / cand_len));
  BleuScores out;
  double running = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    auto k = static_cast<std::size_t>(n - 1);
    double p = matched[k] > 0 && total[k] > 0 ? matched[k] / total[k] : kBleuPrecisionFloor;
    running += std::log(p);
    out[n] = 100.0 * bp * std::exp(running / n);
  }
  return out;
}

BleuScores corpus_bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                       int max_n) {
  std::vector<Tokens> c, r;
  for (const auto& s : candidates) c.push_back(text::tokenize(s));
  for (const auto& s : references) r.push_back(text::tokenize(s));
  return corpus_bleu(c, r, max_n);
}

std::vector<std::size_t> conditional_indices(const std::vector<DecisionLabel>& predicted,
                                             const std::vector<DecisionLabel>& gold) {
  if (predicted.size() != gold.size()) throw ValidationError("conditional_bleu: length mismatch");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < gold.size(); ++k)
    if (predicted[k] == DecisionLabel::More && gold[k] == DecisionLabel::More) out.push_back(k);
  return out;
}

std::optional<BleuScores> conditional_bleu(const std::vector<DecisionLabel>& predicted,
                                           const std::vector<DecisionLabel>& gold,
                                           const std::vector<std::string>& predicted_questions,
                                           const std::vector<std::string>& gold_questions, int max_n) {
  if (predicted_questions.size() != gold.size() || gold_questions.size() != gold.size())
    throw ValidationError("conditional_bleu: length mismatch");
  auto keep = conditional_indices(predicted, gold);
  if (keep.empty()) return std::nullopt;
  std::vector<std::string> c, r;
  for (auto k : keep) {
    c.push_back(predicted_questions[k]);
    r.push_back(gold_questions[k]);
  }
  return corpus_bleu(c, r, max_n);
}

double alpha(const std::vector<EntailmentState>& predicted, const std::vector<EntailmentState>& constructed) {
  check_pairs(predicted.size(), constructed.size(), "alpha");
  int same = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) same += predicted[i] == constructed[i];
  return static_cast<double>(same) / static_cast<double>(predicted.size());
}

double beta(const std::vector<double>& alphas) {
  if (alphas.empty()) throw ValidationError("beta: empty input");
  std::size_t perfect = 0;
  for (double a : alphas) perfect += a == 1.0;
  return static_cast<double>(perfect) / static_cast<double>(alphas.size());
}

std::vector<EntailmentState> predicted_hypothesis_states(const AlignmentMatrix& alignment,
                                                         const EntailmentTensor& entailment) {
  const int m = static_cast<int>(alignment.probs.rows());
  std::vector<EntailmentState> out(static_cast<std::size_t>(m), EntailmentState::Neutral);
  if (alignment.no_premises()) return out;
  Eigen::MatrixXd c = state_coefficients(alignment, entailment);
  for (int i = 0; i < m; ++i) {
    double e = c(i, 0), x = c(i, 1), n = c(i, 2);
    if (e > x && e > n) out[static_cast<std::size_t>(i)] = EntailmentState::Entailment;
    else if (x > e && x > n) out[static_cast<std::size_t>(i)] = EntailmentState::Contradiction;
  }
  return out;
}

std::vector<EntailmentState> constructed_hypothesis_states(const EntailmentLabels& labels) {
  std::vector<EntailmentState> out(static_cast<std::size_t>(labels.num_hypotheses), EntailmentState::Neutral);
  for (const auto& [pair, state] : labels.pair_labels) {
    auto& slot = out[static_cast<std::size_t>(pair.first)];
    if (state == EntailmentState::Contradiction) slot = state;
    else if (state == EntailmentState::Entailment && slot == EntailmentState::Neutral) slot = state;
  }
  return out;
}

}  // namespace biae
