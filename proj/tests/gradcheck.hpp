#pragma once

// Random BiAE instances and a central finite-difference gradient check,
// shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "biae/biae_core.hpp"

namespace testing {

struct RandomInstance {
  biae::EncodedDialogue input;
  biae::AlignmentLabels alignment;
  biae::EntailmentLabels entailment;
  biae::DecisionLabel gold = biae::DecisionLabel::Yes;
};

inline RandomInstance random_instance(std::mt19937_64& rng, int d, int max_m = 4, int max_n = 3, int min_n = 1) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> mdist(1, max_m), ndist(min_n, max_n), cls(0, 3), st(0, 1);
  RandomInstance r;
  int m = mdist(rng), n = ndist(rng);
  r.input.dimension = d;
  r.input.hypotheses = Eigen::MatrixXd::NullaryExpr(m, d, [&] { return g(rng); });
  r.input.premises = Eigen::MatrixXd::NullaryExpr(n, d, [&] { return g(rng); });
  r.input.question = Eigen::VectorXd::NullaryExpr(d, [&] { return g(rng); });
  std::uniform_int_distribution<int> pick(0, m - 1);
  std::vector<int> mapping;
  for (int j = 0; j < n; ++j) mapping.push_back(pick(rng));
  r.alignment = biae::alignment_from_mapping(m, mapping);
  r.entailment.num_hypotheses = m;
  r.entailment.num_premises = n;
  for (int j = 0; j < n; ++j) {
    auto state = st(rng) ? biae::EntailmentState::Entailment : biae::EntailmentState::Contradiction;
    for (int i = 0; i < m; ++i) {
      r.entailment.pair_labels[{i, j}] = i == mapping[static_cast<std::size_t>(j)] ? state : biae::EntailmentState::Neutral;
      r.entailment.labeled_pairs.emplace_back(i, j);
    }
  }
  r.gold = static_cast<biae::DecisionLabel>(cls(rng));
  return r;
}

// Normwise relative error per parameter group: ||analytic - numeric|| /
// max(||analytic|| + ||numeric||, 1e-10).
inline std::map<std::string, double> gradient_errors(biae::BiAEParameters params,
                                                     const std::function<double(const biae::BiAEParameters&)>& loss,
                                                     const biae::BiAEParameters& analytic, double step = 1e-4) {
  std::map<std::string, double> out;
  auto shadow = analytic;
  auto analytic_copy = analytic;
  auto a_slots = analytic_copy.slots(shadow);
  auto p_shadow = params;
  auto p_slots = params.slots(p_shadow);
  for (std::size_t s = 0; s < p_slots.size(); ++s) {
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t k = 0; k < p_slots[s].size; ++k) {
      double& x = p_slots[s].value[k];
      const double saved = x;
      x = saved + step;
      double up = loss(params);
      x = saved - step;
      double down = loss(params);
      x = saved;
      double numeric = (up - down) / (2 * step);
      double a = a_slots[s].value[k];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    out[p_slots[s].name] = std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-10);
  }
  return out;
}

inline biae::Supervision supervision_of(const RandomInstance& r, double lambda = 2.0) {
  return {r.gold, &r.alignment, &r.entailment, lambda};
}

// Max normwise relative error of d(joint loss)/d(params) over all groups.
inline std::map<std::string, double> joint_loss_gradient_errors(const RandomInstance& r,
                                                                const biae::BiAEParameters& params) {
  auto sup = supervision_of(r);
  auto grad = biae::BiAEParameters::zeros(params.dim);
  auto pass = biae::forward(r.input, params);
  biae::backward(r.input, params, pass, sup, grad);
  auto loss = [&](const biae::BiAEParameters& p) { return biae::compute_loss(biae::forward(r.input, p), sup).total; };
  return gradient_errors(params, loss, grad);
}

}  // namespace testing
