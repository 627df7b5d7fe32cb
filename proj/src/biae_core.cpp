#include "biae/biae_core.hpp"

#include <cmath>
#include <random>

#include "biae/errors.hpp"

namespace biae {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void glorot(Eigen::Ref<Eigen::MatrixXd> w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
}

Eigen::VectorXd unit_vector(int d, std::mt19937_64& rng) {
  Eigen::VectorXd v(d);
  for (int k = 0; k < d; ++k) v[k] = 2.0 * uniform01(rng) - 1.0;
  return v / v.norm();
}

void check_shapes(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& prems, const BiAEParameters& p) {
  if (hyps.cols() != p.dim || (prems.rows() > 0 && prems.cols() != p.dim))
    throw ValidationError("input vectors do not match the parameter dimension");
  if (hyps.rows() < 1) throw ValidationError("at least one hypothesis is required");
}

Eigen::VectorXd one_hot(int k, int size) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v[k] = 1.0;
  return v;
}

}  // namespace

BiAEParameters BiAEParameters::zeros(int d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  BiAEParameters p;
  p.dim = d;
  p.alignment_weight = Eigen::VectorXd::Zero(2 * d);
  p.entailment_weight = Eigen::MatrixXd::Zero(3, 4 * d);
  p.entailment_bias = Eigen::VectorXd::Zero(3);
  p.state_entailment = Eigen::VectorXd::Zero(d);
  p.state_contradiction = Eigen::VectorXd::Zero(d);
  p.state_neutral = Eigen::VectorXd::Zero(d);
  p.attention_weight = Eigen::VectorXd::Zero(2 * d);
  p.decision_weight = Eigen::MatrixXd::Zero(4, 3 * d);
  p.decision_bias = Eigen::VectorXd::Zero(4);
  return p;
}

BiAEParameters BiAEParameters::initialize(int d, std::uint64_t seed) {
  auto p = zeros(d);
  std::mt19937_64 rng(seed);
  // Row-vector layers: fan_in = 2d, fan_out = 1.
  Eigen::MatrixXd row(1, 2 * d);
  glorot(row, rng);
  p.alignment_weight = row.transpose();
  glorot(p.entailment_weight, rng);
  p.state_entailment = unit_vector(d, rng);
  p.state_contradiction = unit_vector(d, rng);
  p.state_neutral = unit_vector(d, rng);
  glorot(row, rng);
  p.attention_weight = row.transpose();
  glorot(p.decision_weight, rng);
  return p;
}

std::vector<ParamSlot> BiAEParameters::slots(BiAEParameters& g) {
  auto vec = [](const char* name, Eigen::VectorXd& v, Eigen::VectorXd& gv) {
    return ParamSlot{name, v.data(), gv.data(), static_cast<std::size_t>(v.size())};
  };
  auto mat = [](const char* name, Eigen::MatrixXd& v, Eigen::MatrixXd& gv) {
    return ParamSlot{name, v.data(), gv.data(), static_cast<std::size_t>(v.size())};
  };
  return {vec("alignment_weight", alignment_weight, g.alignment_weight),
          ParamSlot{"alignment_bias", &alignment_bias, &g.alignment_bias, 1},
          mat("entailment_weight", entailment_weight, g.entailment_weight),
          vec("entailment_bias", entailment_bias, g.entailment_bias),
          vec("state_entailment", state_entailment, g.state_entailment),
          vec("state_contradiction", state_contradiction, g.state_contradiction),
          vec("state_neutral", state_neutral, g.state_neutral),
          vec("attention_weight", attention_weight, g.attention_weight),
          ParamSlot{"attention_bias", &attention_bias, &g.attention_bias, 1},
          mat("decision_weight", decision_weight, g.decision_weight),
          vec("decision_bias", decision_bias, g.decision_bias)};
}

std::size_t BiAEParameters::count() const {
  auto copy = *this;
  auto shadow = *this;
  std::size_t total = 0;
  for (const auto& s : copy.slots(shadow)) total += s.size;
  return total;
}

void BiAEParameters::set_zero() {
  alignment_weight.setZero();
  alignment_bias = 0.0;
  entailment_weight.setZero();
  entailment_bias.setZero();
  state_entailment.setZero();
  state_contradiction.setZero();
  state_neutral.setZero();
  attention_weight.setZero();
  attention_bias = 0.0;
  decision_weight.setZero();
  decision_bias.setZero();
}

bool BiAEParameters::all_finite() const {
  return alignment_weight.allFinite() && std::isfinite(alignment_bias) && entailment_weight.allFinite() &&
         entailment_bias.allFinite() && state_entailment.allFinite() && state_contradiction.allFinite() &&
         state_neutral.allFinite() && attention_weight.allFinite() && std::isfinite(attention_bias) &&
         decision_weight.allFinite() && decision_bias.allFinite();
}

const Eigen::VectorXd& BiAEParameters::state(EntailmentState s) const {
  switch (s) {
    case EntailmentState::Entailment: return state_entailment;
    case EntailmentState::Contradiction: return state_contradiction;
    case EntailmentState::Neutral: return state_neutral;
  }
  return state_neutral;
}

Eigen::VectorXd& BiAEParameters::state(EntailmentState s) {
  return const_cast<Eigen::VectorXd&>(static_cast<const BiAEParameters&>(*this).state(s));
}

std::size_t parameter_count(int d) {
  if (d < 1) throw ValidationError("dimension must be >= 1");
  return 31 * static_cast<std::size_t>(d) + 9;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd softmax_backward(const Eigen::VectorXd& probs, const Eigen::VectorXd& grad_probs) {
  return probs.cwiseProduct(grad_probs.array().matrix() - Eigen::VectorXd::Constant(probs.size(), probs.dot(grad_probs)));
}

int argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

double cross_entropy(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  if (predicted.size() != target.size()) throw ValidationError("cross_entropy: length mismatch");
  double h = 0.0;
  for (Eigen::Index k = 0; k < target.size(); ++k)
    if (target[k] != 0.0) h -= target[k] * std::log(std::max(predicted[k], kProbabilityFloor));
  return h;
}

Eigen::VectorXd cross_entropy_grad(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  if (predicted.size() != target.size()) throw ValidationError("cross_entropy: length mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(predicted.size());
  for (Eigen::Index k = 0; k < target.size(); ++k)
    if (target[k] != 0.0 && predicted[k] > kProbabilityFloor) g[k] = -target[k] / predicted[k];
  return g;
}

Eigen::VectorXd pair_features(const Eigen::VectorXd& h, const Eigen::VectorXd& u) {
  const auto d = h.size();
  Eigen::VectorXd f(4 * d);
  f << h, u, h - u, h.cwiseProduct(u);
  return f;
}

AlignmentMatrix alignment_scores(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& prems, const BiAEParameters& p) {
  check_shapes(hyps, prems, p);
  const auto m = hyps.rows();
  const auto n = prems.rows();
  AlignmentMatrix out;
  out.probs.resize(m, n);
  if (n == 0) return out;
  const auto d = p.dim;
  Eigen::VectorXd hyp_score = hyps * p.alignment_weight.head(d);
  Eigen::VectorXd prem_score = prems * p.alignment_weight.tail(d);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::VectorXd logits = prem_score.array() + hyp_score[i] + p.alignment_bias;
    out.probs.row(i) = softmax(logits).transpose();
  }
  return out;
}

double alignment_loss(const AlignmentMatrix& a, const AlignmentLabels& labels) {
  double loss = 0.0;
  for (const auto& [i, target] : labels.row_targets) {
    if (i >= a.probs.rows()) throw ValidationError("alignment label row out of range");
    if (static_cast<Eigen::Index>(target.size()) != a.probs.cols())
      throw ValidationError("alignment label length differs from the premise count");
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
    loss += cross_entropy(a.probs.row(i).transpose(), t);
  }
  return loss;
}

EntailmentTensor entailment_probs(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& prems, const BiAEParameters& p) {
  check_shapes(hyps, prems, p);
  EntailmentTensor out;
  out.m = static_cast<int>(hyps.rows());
  out.n = static_cast<int>(prems.rows());
  out.probs.resize(static_cast<Eigen::Index>(out.m) * out.n, kNumStates);
  for (int i = 0; i < out.m; ++i) {
    for (int j = 0; j < out.n; ++j) {
      Eigen::VectorXd f = pair_features(hyps.row(i).transpose(), prems.row(j).transpose());
      Eigen::VectorXd logits = p.entailment_weight * f + p.entailment_bias;
      out.probs.row(i * out.n + j) = softmax(logits).transpose();
    }
  }
  return out;
}

double entailment_loss(const EntailmentTensor& e, const EntailmentLabels& labels) {
  double loss = 0.0;
  for (const auto& [i, j] : labels.labeled_pairs) {
    if (i < 0 || i >= e.m || j < 0 || j >= e.n) throw ValidationError("entailment label pair out of range");
    auto state = labels.pair_labels.at({i, j});
    loss += cross_entropy(e.at(i, j), one_hot(static_cast<int>(state), kNumStates));
  }
  return loss;
}

Eigen::MatrixXd state_coefficients(const AlignmentMatrix& a, const EntailmentTensor& e) {
  const auto m = a.probs.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, kNumStates);
  if (a.no_premises()) return c;
  if (e.m != m || e.n != a.probs.cols()) throw ValidationError("alignment and entailment shapes differ");
  for (int i = 0; i < e.m; ++i)
    for (int j = 0; j < e.n; ++j) c.row(i) += a.probs(i, j) * e.probs.row(i * e.n + j);
  return c;
}

Eigen::MatrixXd entailment_state_vectors(const AlignmentMatrix& a, const EntailmentTensor& e, const BiAEParameters& p) {
  Eigen::MatrixXd c = state_coefficients(a, e);
  Eigen::MatrixXd states(kNumStates, p.dim);
  states.row(0) = p.state_entailment.transpose();
  states.row(1) = p.state_contradiction.transpose();
  states.row(2) = p.state_neutral.transpose();
  return c * states;
}

DocumentSummary document_summary(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& state_vectors,
                                 const BiAEParameters& p) {
  const auto m = hyps.rows();
  if (m < 1) throw ValidationError("document summary needs at least one hypothesis");
  if (state_vectors.rows() != m || state_vectors.cols() != p.dim || hyps.cols() != p.dim)
    throw ValidationError("document summary shape mismatch");
  Eigen::MatrixXd joined(m, 2 * p.dim);
  joined << hyps, state_vectors;
  Eigen::VectorXd logits = (joined * p.attention_weight).array() + p.attention_bias;
  DocumentSummary out;
  out.attention = softmax(logits);
  out.summary = joined.transpose() * out.attention;
  return out;
}

DecisionOutcome decision_logits(const Eigen::VectorXd& question, const Eigen::VectorXd& summary,
                                const BiAEParameters& p) {
  if (question.size() != p.dim || summary.size() != 2 * p.dim) throw ValidationError("decision input shape mismatch");
  Eigen::VectorXd z(3 * p.dim);
  z << question, summary;
  DecisionOutcome out;
  out.logits = p.decision_weight * z + p.decision_bias;
  out.probabilities = softmax(out.logits);
  out.decision = static_cast<DecisionLabel>(argmax(out.logits));
  out.summary = summary;
  return out;
}

double decision_loss(const DecisionOutcome& outcome, DecisionLabel gold) {
  return cross_entropy(outcome.probabilities, one_hot(static_cast<int>(gold), kNumDecisions));
}

double joint_loss(double decision, double alignment, double entailment, double lambda) {
  return lambda * decision + alignment + entailment;
}

PairGrad alignment_backward(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& prems, const BiAEParameters& p,
                            const AlignmentMatrix& a, const Eigen::MatrixXd& grad_probs, BiAEParameters& g) {
  const auto m = hyps.rows();
  const auto n = prems.rows();
  const auto d = p.dim;
  PairGrad out{Eigen::MatrixXd::Zero(m, d), Eigen::MatrixXd::Zero(n, d)};
  if (n == 0) return out;
  Eigen::MatrixXd grad_logits(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    grad_logits.row(i) = softmax_backward(a.probs.row(i).transpose(), grad_probs.row(i).transpose()).transpose();
  // logit_ij = w_h . h_i + w_u . u_j + b
  Eigen::VectorXd row_sum = grad_logits.rowwise().sum();
  Eigen::VectorXd col_sum = grad_logits.colwise().sum().transpose();
  g.alignment_weight.head(d) += hyps.transpose() * row_sum;
  g.alignment_weight.tail(d) += prems.transpose() * col_sum;
  g.alignment_bias += grad_logits.sum();
  out.hypotheses = row_sum * p.alignment_weight.head(d).transpose();
  out.premises = col_sum * p.alignment_weight.tail(d).transpose();
  return out;
}

PairGrad entailment_backward(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& prems, const BiAEParameters& p,
                             const EntailmentTensor& e, const Eigen::MatrixXd& grad_probs, BiAEParameters& g) {
  const auto d = p.dim;
  PairGrad out{Eigen::MatrixXd::Zero(hyps.rows(), d), Eigen::MatrixXd::Zero(prems.rows(), d)};
  for (int i = 0; i < e.m; ++i) {
    for (int j = 0; j < e.n; ++j) {
      const auto r = i * e.n + j;
      Eigen::VectorXd gl = softmax_backward(e.probs.row(r).transpose(), grad_probs.row(r).transpose());
      Eigen::VectorXd h = hyps.row(i).transpose();
      Eigen::VectorXd u = prems.row(j).transpose();
      g.entailment_weight += gl * pair_features(h, u).transpose();
      g.entailment_bias += gl;
      Eigen::VectorXd gf = p.entailment_weight.transpose() * gl;
      auto f_h = gf.segment(0, d);
      auto f_u = gf.segment(d, d);
      auto f_diff = gf.segment(2 * d, d);
      auto f_prod = gf.segment(3 * d, d);
      out.hypotheses.row(i) += (f_h + f_diff + f_prod.cwiseProduct(u)).transpose();
      out.premises.row(j) += (f_u - f_diff + f_prod.cwiseProduct(h)).transpose();
    }
  }
  return out;
}

StateGrad state_vectors_backward(const AlignmentMatrix& a, const EntailmentTensor& e, const BiAEParameters& p,
                                 const Eigen::MatrixXd& grad_states, BiAEParameters& g) {
  const auto m = a.probs.rows();
  const auto n = a.probs.cols();
  StateGrad out{Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m * n, kNumStates)};
  Eigen::MatrixXd c = state_coefficients(a, e);
  // e_i = sum_K c_iK state_K
  g.state_entailment += grad_states.transpose() * c.col(0);
  g.state_contradiction += grad_states.transpose() * c.col(1);
  g.state_neutral += grad_states.transpose() * c.col(2);
  if (n == 0) return out;
  Eigen::MatrixXd states(kNumStates, p.dim);
  states.row(0) = p.state_entailment.transpose();
  states.row(1) = p.state_contradiction.transpose();
  states.row(2) = p.state_neutral.transpose();
  Eigen::MatrixXd grad_c = grad_states * states.transpose();  // m x 3
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto r = i * n + j;
      out.alignment(i, j) = e.probs.row(r).dot(grad_c.row(i));
      out.entailment.row(r) = a.probs(i, j) * grad_c.row(i);
    }
  }
  return out;
}

SummaryGrad summary_backward(const Eigen::MatrixXd& hyps, const Eigen::MatrixXd& state_vectors,
                             const BiAEParameters& p, const DocumentSummary& s, const Eigen::VectorXd& grad_summary,
                             BiAEParameters& g) {
  const auto m = hyps.rows();
  const auto d = p.dim;
  Eigen::MatrixXd joined(m, 2 * d);
  joined << hyps, state_vectors;
  // s = joined^T a
  Eigen::MatrixXd grad_joined = s.attention * grad_summary.transpose();
  Eigen::VectorXd grad_attention = joined * grad_summary;
  Eigen::VectorXd grad_logits = softmax_backward(s.attention, grad_attention);
  g.attention_weight += joined.transpose() * grad_logits;
  g.attention_bias += grad_logits.sum();
  grad_joined += grad_logits * p.attention_weight.transpose();
  return {grad_joined.leftCols(d), grad_joined.rightCols(d)};
}

DecisionGrad decision_backward(const Eigen::VectorXd& question, const Eigen::VectorXd& summary,
                               const BiAEParameters& p, const Eigen::VectorXd& grad_logits, BiAEParameters& g) {
  Eigen::VectorXd z(3 * p.dim);
  z << question, summary;
  g.decision_weight += grad_logits * z.transpose();
  g.decision_bias += grad_logits;
  Eigen::VectorXd gz = p.decision_weight.transpose() * grad_logits;
  return {gz.head(p.dim), gz.tail(2 * p.dim)};
}

ForwardPass forward(const EncodedDialogue& in, const BiAEParameters& p) {
  ForwardPass f;
  f.alignment = alignment_scores(in.hypotheses, in.premises, p);
  f.entailment = entailment_probs(in.hypotheses, in.premises, p);
  f.state_vectors = entailment_state_vectors(f.alignment, f.entailment, p);
  f.summary = document_summary(in.hypotheses, f.state_vectors, p);
  f.outcome = decision_logits(in.question, f.summary.summary, p);
  f.outcome.attention = f.summary.attention;
  f.outcome.state_vectors = f.state_vectors;
  return f;
}

LossBreakdown compute_loss(const ForwardPass& f, const Supervision& sup) {
  LossBreakdown l;
  l.decision = decision_loss(f.outcome, sup.gold);
  if (sup.alignment && !f.alignment.no_premises()) l.alignment = alignment_loss(f.alignment, *sup.alignment);
  if (sup.entailment && f.entailment.n > 0) l.entailment = entailment_loss(f.entailment, *sup.entailment);
  l.total = joint_loss(l.decision, l.alignment, l.entailment, sup.lambda);
  return l;
}

LossBreakdown backward(const EncodedDialogue& in, const BiAEParameters& p, const ForwardPass& f,
                       const Supervision& sup, BiAEParameters& g, InputGrad* input_grad, double scale) {
  auto loss = compute_loss(f, sup);
  const auto m = in.hypotheses.rows();
  const auto n = in.premises.rows();
  const auto d = p.dim;

  Eigen::VectorXd grad_probs =
      scale * sup.lambda * cross_entropy_grad(f.outcome.probabilities, one_hot(static_cast<int>(sup.gold), kNumDecisions));
  Eigen::VectorXd grad_logits = softmax_backward(f.outcome.probabilities, grad_probs);
  auto dec = decision_backward(in.question, f.summary.summary, p, grad_logits, g);
  auto sum = summary_backward(in.hypotheses, f.state_vectors, p, f.summary, dec.summary, g);

  Eigen::MatrixXd grad_h = sum.hypotheses;
  Eigen::MatrixXd grad_u = Eigen::MatrixXd::Zero(n, d);

  auto st = state_vectors_backward(f.alignment, f.entailment, p, sum.state_vectors, g);
  if (n > 0) {
    Eigen::MatrixXd grad_a = st.alignment;
    Eigen::MatrixXd grad_e = st.entailment;
    if (sup.alignment) {
      for (const auto& [i, target] : sup.alignment->row_targets) {
        Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), static_cast<Eigen::Index>(target.size()));
        grad_a.row(i) += scale * cross_entropy_grad(f.alignment.probs.row(i).transpose(), t).transpose();
      }
    }
    if (sup.entailment) {
      for (const auto& [i, j] : sup.entailment->labeled_pairs) {
        auto state = sup.entailment->pair_labels.at({i, j});
        grad_e.row(i * n + j) +=
            scale * cross_entropy_grad(f.entailment.at(i, j), one_hot(static_cast<int>(state), kNumStates)).transpose();
      }
    }
    auto ag = alignment_backward(in.hypotheses, in.premises, p, f.alignment, grad_a, g);
    auto eg = entailment_backward(in.hypotheses, in.premises, p, f.entailment, grad_e, g);
    grad_h += ag.hypotheses + eg.hypotheses;
    grad_u += ag.premises + eg.premises;
  }

  if (input_grad) {
    input_grad->hypotheses = grad_h;
    input_grad->question = dec.question;
    input_grad->premises = grad_u;
  }
  (void)m;
  return loss;
}

AlignmentLabels restrict_alignment(const AlignmentLabels& labels, int m) {
  AlignmentLabels out;
  out.num_hypotheses = std::min(labels.num_hypotheses, m);
  out.premise_to_hypothesis = labels.premise_to_hypothesis;
  for (const auto& [i, t] : labels.row_targets)
    if (i < m) out.row_targets.emplace(i, t);
  return out;
}

EntailmentLabels restrict_entailment(const EntailmentLabels& labels, int m) {
  EntailmentLabels out;
  out.num_hypotheses = std::min(labels.num_hypotheses, m);
  out.num_premises = labels.num_premises;
  for (const auto& [key, s] : labels.pair_labels)
    if (key.first < m) out.pair_labels.emplace(key, s);
  for (const auto& pr : labels.labeled_pairs)
    if (pr.first < m) out.labeled_pairs.push_back(pr);
  return out;
}

nlohmann::json parameters_to_json(const BiAEParameters& params) {
  auto copy = params;
  auto shadow = params;
  nlohmann::json arrays = nlohmann::json::object();
  for (const auto& s : copy.slots(shadow)) arrays[s.name] = std::vector<double>(s.value, s.value + s.size);
  return {{"d", params.dim}, {"arrays", arrays}};
}

BiAEParameters parameters_from_json(const nlohmann::json& j) {
  auto p = BiAEParameters::zeros(j.at("d").get<int>());
  auto shadow = p;
  const auto& arrays = j.at("arrays");
  for (auto& s : p.slots(shadow)) {
    if (!arrays.contains(s.name)) throw ValidationError("checkpoint is missing parameter '" + s.name + "'");
    auto values = arrays.at(s.name).get<std::vector<double>>();
    if (values.size() != s.size) throw ValidationError("checkpoint parameter '" + s.name + "' has the wrong size");
    std::copy(values.begin(), values.end(), s.value);
  }
  if (!p.all_finite()) throw ValidationError("checkpoint contains non-finite parameters");
  return p;
}

}  // namespace biae
