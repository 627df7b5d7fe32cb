#include "biae/encoder.hpp"

#include <iostream>
#include <random>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

bool is_marker(std::string_view token) {
  return token == kHypothesisMarker || token == kClsMarker || token == kSepMarker;
}

ToyEncoder::ToyEncoder(std::uint64_t seed, int dimension, int max_length)
    : scale(Eigen::VectorXd::Ones(dimension)),
      shift(Eigen::VectorXd::Zero(dimension)),
      scale_grad(Eigen::VectorXd::Zero(dimension)),
      shift_grad(Eigen::VectorXd::Zero(dimension)),
      seed_(seed),
      dimension_(dimension),
      max_length_(max_length) {
  if (dimension < 2) throw ValidationError("toy encoder needs d >= 2");
  if (max_length < 4) throw ValidationError("toy encoder max_length too small");
}

std::string ToyEncoder::name() const {
  return "toy:" + std::to_string(seed_) + ":" + std::to_string(dimension_) + ":" + std::to_string(max_length_);
}

std::vector<std::string> ToyEncoder::tokenize(std::string_view s) const { return text::tokenize(s, true); }

Eigen::VectorXd ToyEncoder::token_vector(std::string_view token) const {
  // mt19937_64 output is fixed by the standard, so vectors are identical on
  // every platform; distributions are avoided for the same reason.
  std::mt19937_64 rng(text::fnv1a64(token) ^ (seed_ * 0x9E3779B97F4A7C15ULL));
  Eigen::VectorXd v(dimension_);
  for (int k = 0; k < dimension_; ++k) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v[k] = 2.0 * u - 1.0;
  }
  double n = v.norm();
  return n > 0 ? Eigen::VectorXd(v / n) : v;
}

Eigen::MatrixXd ToyEncoder::raw_rows(const MarkedInput& input) const {
  const int L = input.length();
  Eigen::MatrixXd tok(L, dimension_);
  for (int t = 0; t < L; ++t) tok.row(t) = token_vector(input.tokens[static_cast<std::size_t>(t)]).transpose();
  Eigen::MatrixXd out = tok;
  int seg_start = 0;
  for (int t = 0; t <= L; ++t) {
    bool boundary = t == L || (t > seg_start && is_marker(input.tokens[static_cast<std::size_t>(t)]));
    if (!boundary) continue;
    Eigen::RowVectorXd mean = tok.middleRows(seg_start, t - seg_start).colwise().mean();
    for (int r = seg_start; r < t; ++r) out.row(r) += mean;
    seg_start = t;
  }
  return out;
}

Eigen::MatrixXd ToyEncoder::encode(const MarkedInput& input) const {
  Eigen::MatrixXd raw = raw_rows(input);
  Eigen::MatrixXd out = raw.array().rowwise() * scale.transpose().array();
  out.rowwise() += shift.transpose();
  return out;
}

std::vector<ParamSlot> ToyEncoder::parameters() {
  return {{"encoder.scale", scale.data(), scale_grad.data(), static_cast<std::size_t>(scale.size())},
          {"encoder.shift", shift.data(), shift_grad.data(), static_cast<std::size_t>(shift.size())}};
}

void ToyEncoder::backward(const MarkedInput& input, const Eigen::MatrixXd& output_grad) {
  if (output_grad.rows() != input.length() || output_grad.cols() != dimension_)
    throw InternalError("toy encoder gradient shape mismatch");
  Eigen::MatrixXd raw = raw_rows(input);
  scale_grad += (raw.array() * output_grad.array()).colwise().sum().transpose().matrix();
  shift_grad += output_grad.colwise().sum().transpose();
}

nlohmann::json ToyEncoder::state() const {
  return {{"scale", std::vector<double>(scale.data(), scale.data() + scale.size())},
          {"shift", std::vector<double>(shift.data(), shift.data() + shift.size())}};
}

void ToyEncoder::load_state(const nlohmann::json& state) {
  if (state.is_null() || state.empty()) return;  // untrained affine layer
  if (!state.contains("scale") || !state.contains("shift"))
    throw ValidationError("toy encoder state needs scale and shift");
  auto s = state.at("scale").get<std::vector<double>>();
  auto b = state.at("shift").get<std::vector<double>>();
  if (static_cast<int>(s.size()) != dimension_ || static_cast<int>(b.size()) != dimension_)
    throw ValidationError("toy encoder state has the wrong dimension");
  scale = Eigen::Map<Eigen::VectorXd>(s.data(), dimension_);
  shift = Eigen::Map<Eigen::VectorXd>(b.data(), dimension_);
}

std::unique_ptr<Encoder> make_encoder(std::string_view spec) {
  auto parts = std::vector<std::string>{};
  std::string cur;
  for (char c : spec) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.empty() || parts[0] != "toy" || parts.size() < 3 || parts.size() > 4)
    throw ServiceError("unknown encoder '" + std::string(spec) + "' (expected toy:<seed>:<d>[:<max_length>])");
  try {
    auto seed = std::stoull(parts[1]);
    int d = std::stoi(parts[2]);
    int max_len = parts.size() == 4 ? std::stoi(parts[3]) : 512;
    return std::make_unique<ToyEncoder>(seed, d, max_len);
  } catch (const std::logic_error&) {
    throw ServiceError("malformed encoder spec '" + std::string(spec) + "'");
  }
}

MarkedInput build_input_tokens(const std::vector<std::vector<std::string>>& hypotheses_in,
                               const std::vector<std::string>& question_in,
                               const std::vector<std::vector<std::string>>& premises_in, int max_length) {
  if (hypotheses_in.empty()) throw ValidationError("at least one hypothesis is required");
  auto hyps = hypotheses_in;
  auto question = question_in;
  auto prems = premises_in;

  auto total = [&] {
    std::size_t L = 1;  // [SEP]
    for (const auto& h : hyps) L += 1 + h.size();
    L += 1 + question.size();
    for (const auto& p : prems) L += 1 + p.size();
    return L;
  };
  const auto limit = static_cast<std::size_t>(max_length);
  MarkedInput out;
  if (total() > limit) {
    out.truncated = true;
    // Premise content goes first, last premise first; markers always stay.
    for (auto it = prems.rbegin(); it != prems.rend() && total() > limit; ++it)
      while (!it->empty() && total() > limit) it->pop_back();
    while (!question.empty() && total() > limit) question.pop_back();
    while (hyps.size() > 1 && total() > limit) {
      hyps.pop_back();
      ++out.dropped_hypotheses;
    }
    while (!hyps[0].empty() && total() > limit) hyps[0].pop_back();
    if (total() > limit) throw ValidationError("markers alone exceed the encoder's max_length");
    if (out.dropped_hypotheses > 0)
      std::clog << "warning: input exceeds max_length " << max_length << "; dropped " << out.dropped_hypotheses
                << " trailing hypotheses\n";
  }

  auto push = [&](std::string_view tok) {
    out.tokens.emplace_back(tok);
    return static_cast<int>(out.tokens.size()) - 1;
  };
  for (const auto& h : hyps) {
    out.hypothesis_markers.push_back(push(kHypothesisMarker));
    for (const auto& t : h) push(t);
  }
  out.sep_position = push(kSepMarker);
  out.question_marker = push(kClsMarker);
  for (const auto& t : question) push(t);
  for (const auto& p : prems) {
    out.premise_markers.push_back(push(kClsMarker));
    for (const auto& t : p) push(t);
  }
  return out;
}

MarkedInput build_input(const std::vector<Hypothesis>& hypotheses, std::string_view question,
                        const std::vector<Premise>& premises, const Encoder& encoder) {
  if (text::trim(question).empty()) throw ValidationError("question is empty");
  std::vector<std::vector<std::string>> h;
  std::vector<std::vector<std::string>> u;
  for (const auto& x : hypotheses) h.push_back(encoder.tokenize(x.text));
  for (const auto& x : premises) u.push_back(encoder.tokenize(x.text));
  return build_input_tokens(h, encoder.tokenize(question), u, encoder.max_length());
}

EncodedDialogue select_markers(const MarkedInput& marked, const Eigen::MatrixXd& encoding) {
  if (encoding.rows() != marked.length())
    throw InternalError("encoder returned " + std::to_string(encoding.rows()) + " rows for a sequence of length " +
                        std::to_string(marked.length()));
  const auto d = static_cast<int>(encoding.cols());
  EncodedDialogue out;
  out.dimension = d;
  out.hypotheses.resize(marked.num_hypotheses(), d);
  for (int i = 0; i < marked.num_hypotheses(); ++i)
    out.hypotheses.row(i) = encoding.row(marked.hypothesis_markers[static_cast<std::size_t>(i)]);
  out.question = encoding.row(marked.question_marker).transpose();
  out.premises.resize(marked.num_premises(), d);
  for (int j = 0; j < marked.num_premises(); ++j)
    out.premises.row(j) = encoding.row(marked.premise_markers[static_cast<std::size_t>(j)]);
  if (!out.hypotheses.allFinite() || !out.question.allFinite() || !out.premises.allFinite())
    throw InternalError("encoder produced non-finite values");
  return out;
}

EncodedDialogue encode(const MarkedInput& marked, const Encoder& encoder) {
  return select_markers(marked, encoder.encode(marked));
}

Eigen::MatrixXd scatter_marker_grads(const MarkedInput& marked, int dimension, const Eigen::MatrixXd& hypothesis_grad,
                                     const Eigen::VectorXd& question_grad, const Eigen::MatrixXd& premise_grad) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(marked.length(), dimension);
  for (int i = 0; i < marked.num_hypotheses(); ++i)
    g.row(marked.hypothesis_markers[static_cast<std::size_t>(i)]) += hypothesis_grad.row(i);
  g.row(marked.question_marker) += question_grad.transpose();
  for (int j = 0; j < marked.num_premises(); ++j)
    g.row(marked.premise_markers[static_cast<std::size_t>(j)]) += premise_grad.row(j);
  return g;
}

}  // namespace biae
