#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "biae/corpus.hpp"
#include "biae/encoder.hpp"
#include "biae/params.hpp"
#include "biae/weak_labels.hpp"

namespace biae {

// Every trainable array of the decision module, for one hidden size d.
struct BiAEParameters {
  int dim = 0;
  Eigen::VectorXd alignment_weight;   // 2d, scores [d_i; u_j]
  double alignment_bias = 0.0;
  Eigen::MatrixXd entailment_weight;  // 3 x 4d, over [d_i; u_j; d_i - u_j; d_i * u_j]
  Eigen::VectorXd entailment_bias;    // 3
  Eigen::VectorXd state_entailment;   // d
  Eigen::VectorXd state_contradiction;
  Eigen::VectorXd state_neutral;
  Eigen::VectorXd attention_weight;   // 2d, scores [d_i; e_i]
  double attention_bias = 0.0;
  Eigen::MatrixXd decision_weight;    // 4 x 3d, over [u_q; s]
  Eigen::VectorXd decision_bias;      // 4

  static BiAEParameters zeros(int d);
  // Glorot-uniform weights, zero biases, seeded unit-norm state vectors.
  static BiAEParameters initialize(int d, std::uint64_t seed);

  // Slots pair each array with the matching array of `grad` (same shape).
  std::vector<ParamSlot> slots(BiAEParameters& grad);
  std::size_t count() const;  // enumerates the actual arrays
  void set_zero();
  bool all_finite() const;

  const Eigen::VectorXd& state(EntailmentState s) const;
  Eigen::VectorXd& state(EntailmentState s);
};

// (2d+1) + (12d+3) + 3d + (2d+1) + (12d+4) = 31d + 9
std::size_t parameter_count(int d);

// Row-stochastic m x n alignment matrix. Empty (m x 0) when there are no premises.
struct AlignmentMatrix {
  Eigen::MatrixXd probs;
  bool no_premises() const { return probs.cols() == 0; }
};

// Per-pair state distributions in the order (E, C, N); row i*n + j holds pair (i, j).
struct EntailmentTensor {
  int m = 0;
  int n = 0;
  Eigen::MatrixXd probs;  // (m*n) x 3
  Eigen::Vector3d at(int i, int j) const { return probs.row(i * n + j).transpose(); }
};

struct DocumentSummary {
  Eigen::VectorXd attention;  // m
  Eigen::VectorXd summary;    // 2d
};

struct DecisionOutcome {
  Eigen::VectorXd logits;         // 4
  Eigen::VectorXd probabilities;  // 4
  DecisionLabel decision = DecisionLabel::Irrelevant;
  Eigen::VectorXd attention;      // m
  Eigen::VectorXd summary;        // 2d
  Eigen::MatrixXd state_vectors;  // m x d
};

inline constexpr double kProbabilityFloor = 1e-12;

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
// Gradient w.r.t. logits given gradient w.r.t. the softmax output.
Eigen::VectorXd softmax_backward(const Eigen::VectorXd& probs, const Eigen::VectorXd& grad_probs);
// Lowest index wins ties.
int argmax(const Eigen::VectorXd& v);

// -sum_k target_k * ln(max(predicted_k, 1e-12)).
double cross_entropy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);
// d cross_entropy / d predicted (zero where the clamp is active).
Eigen::VectorXd cross_entropy_grad(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);

Eigen::VectorXd pair_features(const Eigen::VectorXd& hypothesis, const Eigen::VectorXd& premise);

AlignmentMatrix alignment_scores(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& premises,
                                 const BiAEParameters& params);
double alignment_loss(const AlignmentMatrix& alignment, const AlignmentLabels& labels);

EntailmentTensor entailment_probs(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& premises,
                                  const BiAEParameters& params);
double entailment_loss(const EntailmentTensor& entailment, const EntailmentLabels& labels);

// c_K(i) = sum_j A_ij E_ij^(K); m x 3, zero rows when n = 0.
Eigen::MatrixXd state_coefficients(const AlignmentMatrix& alignment, const EntailmentTensor& entailment);
Eigen::MatrixXd entailment_state_vectors(const AlignmentMatrix& alignment, const EntailmentTensor& entailment,
                                         const BiAEParameters& params);

DocumentSummary document_summary(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& state_vectors,
                                  const BiAEParameters& params);

DecisionOutcome decision_logits(const Eigen::VectorXd& question, const Eigen::VectorXd& summary,
                                const BiAEParameters& params);
double decision_loss(const DecisionOutcome& outcome, DecisionLabel gold);

double joint_loss(double decision, double alignment, double entailment, double lambda);

// ---- stage backward passes; each accumulates into `grad` and returns input gradients

struct PairGrad {
  Eigen::MatrixXd hypotheses;
  Eigen::MatrixXd premises;
};

PairGrad alignment_backward(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& premises,
                            const BiAEParameters& params, const AlignmentMatrix& alignment,
                            const Eigen::MatrixXd& grad_probs, BiAEParameters& grad);

// grad_probs has the (m*n) x 3 layout of EntailmentTensor::probs.
PairGrad entailment_backward(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& premises,
                             const BiAEParameters& params, const EntailmentTensor& entailment,
                             const Eigen::MatrixXd& grad_probs, BiAEParameters& grad);

struct StateGrad {
  Eigen::MatrixXd alignment;   // m x n
  Eigen::MatrixXd entailment;  // (m*n) x 3
};

StateGrad state_vectors_backward(const AlignmentMatrix& alignment, const EntailmentTensor& entailment,
                                 const BiAEParameters& params, const Eigen::MatrixXd& grad_states,
                                 BiAEParameters& grad);

struct SummaryGrad {
  Eigen::MatrixXd hypotheses;     // m x d
  Eigen::MatrixXd state_vectors;  // m x d
};

SummaryGrad summary_backward(const Eigen::MatrixXd& hypotheses, const Eigen::MatrixXd& state_vectors,
                             const BiAEParameters& params, const DocumentSummary& summary,
                             const Eigen::VectorXd& grad_summary, BiAEParameters& grad);

struct DecisionGrad {
  Eigen::VectorXd question;  // d
  Eigen::VectorXd summary;   // 2d
};

DecisionGrad decision_backward(const Eigen::VectorXd& question, const Eigen::VectorXd& summary,
                               const BiAEParameters& params, const Eigen::VectorXd& grad_logits,
                               BiAEParameters& grad);

// ---- whole-module forward/backward

struct ForwardPass {
  AlignmentMatrix alignment;
  EntailmentTensor entailment;
  Eigen::MatrixXd state_vectors;
  DocumentSummary summary;
  DecisionOutcome outcome;
};

ForwardPass forward(const EncodedDialogue& input, const BiAEParameters& params);

struct LossBreakdown {
  double decision = 0.0;
  double alignment = 0.0;
  double entailment = 0.0;
  double total = 0.0;
};

struct Supervision {
  DecisionLabel gold = DecisionLabel::More;
  const AlignmentLabels* alignment = nullptr;    // null: no alignment loss
  const EntailmentLabels* entailment = nullptr;  // null: no entailment loss
  double lambda = 2.0;
};

LossBreakdown compute_loss(const ForwardPass& pass, const Supervision& sup);

struct InputGrad {
  Eigen::MatrixXd hypotheses;
  Eigen::VectorXd question;
  Eigen::MatrixXd premises;
};

// Accumulates `scale` * d(joint loss)/d(params) into grad; returns the loss
// (unscaled) and, when requested, gradients w.r.t. the encoded inputs.
LossBreakdown backward(const EncodedDialogue& input, const BiAEParameters& params, const ForwardPass& pass,
                       const Supervision& sup, BiAEParameters& grad, InputGrad* input_grad = nullptr,
                       double scale = 1.0);

// Labels restricted to the first m hypotheses (after truncation drops some).
AlignmentLabels restrict_alignment(const AlignmentLabels& labels, int m);
EntailmentLabels restrict_entailment(const EntailmentLabels& labels, int m);

nlohmann::json parameters_to_json(const BiAEParameters& params);
BiAEParameters parameters_from_json(const nlohmann::json& j);

}  // namespace biae
