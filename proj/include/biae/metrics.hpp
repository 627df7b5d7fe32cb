#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biae/biae_core.hpp"
#include "biae/corpus.hpp"
#include "biae/weak_labels.hpp"

namespace biae {

struct MicroMacro {
  double micro = 0.0;
  double macro = 0.0;
};

// macro = mean recall over classes present in golds.
MicroMacro micro_macro(const std::vector<DecisionLabel>& predictions, const std::vector<DecisionLabel>& golds);
std::map<DecisionLabel, double> class_wise(const std::vector<DecisionLabel>& predictions,
                                           const std::vector<DecisionLabel>& golds);

using Tokens = std::vector<std::string>;
using BleuScores = std::map<int, double>;  // n -> BLEU-n in [0, 100]

inline constexpr double kBleuPrecisionFloor = 1e-9;

// Corpus BLEU-n for n = 1..max_n: clipped counts, uniform weights, brevity
// penalty, zero precisions floored at 1e-9.
BleuScores corpus_bleu(const std::vector<Tokens>& candidates, const std::vector<Tokens>& references, int max_n = 4);
BleuScores corpus_bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references,
                       int max_n = 4);

// Indices where both the predicted and the gold decision are MORE.
std::vector<std::size_t> conditional_indices(const std::vector<DecisionLabel>& predicted,
                                             const std::vector<DecisionLabel>& gold);
// Empty when no index qualifies.
std::optional<BleuScores> conditional_bleu(const std::vector<DecisionLabel>& predicted,
                                           const std::vector<DecisionLabel>& gold,
                                           const std::vector<std::string>& predicted_questions,
                                           const std::vector<std::string>& gold_questions, int max_n = 4);

double alpha(const std::vector<EntailmentState>& predicted, const std::vector<EntailmentState>& constructed);
double beta(const std::vector<double>& alphas);

// argmax_K sum_j A_ij E_ij^(K), ties to NEUTRAL; all NEUTRAL without premises.
std::vector<EntailmentState> predicted_hypothesis_states(const AlignmentMatrix& alignment,
                                                         const EntailmentTensor& entailment);
// Non-neutral weak label of any premise on the hypothesis; CONTRADICTION wins over ENTAILMENT.
std::vector<EntailmentState> constructed_hypothesis_states(const EntailmentLabels& labels);

}  // namespace biae
