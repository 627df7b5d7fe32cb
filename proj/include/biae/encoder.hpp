#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "biae/params.hpp"
#include "biae/segmenter.hpp"

namespace biae {

inline constexpr std::string_view kHypothesisMarker = "[H]";
inline constexpr std::string_view kClsMarker = "[CLS]";
inline constexpr std::string_view kSepMarker = "[SEP]";

bool is_marker(std::string_view token);

// Layout: [H] D1 ... [H] Dm [SEP] [CLS] Q [CLS] U1 ... [CLS] Un
struct MarkedInput {
  std::vector<std::string> tokens;
  std::vector<int> hypothesis_markers;
  int sep_position = -1;
  int question_marker = -1;
  std::vector<int> premise_markers;
  int dropped_hypotheses = 0;  // trailing hypotheses removed by truncation
  bool truncated = false;

  int length() const { return static_cast<int>(tokens.size()); }
  int num_hypotheses() const { return static_cast<int>(hypothesis_markers.size()); }
  int num_premises() const { return static_cast<int>(premise_markers.size()); }
};

// Pluggable text encoder: maps an L-token marked sequence to an L x d matrix.
// Implementations must be safe for concurrent const calls.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  virtual int max_length() const = 0;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual Eigen::MatrixXd encode(const MarkedInput& input) const = 0;
  // How the [H] marker was obtained: "reused" vocabulary slot or "extended".
  virtual std::string marker_policy() const = 0;

  // Trainable parts (may be empty). backward() accumulates d(loss)/d(params)
  // given d(loss)/d(output) for the same input.
  virtual std::vector<ParamSlot> parameters() { return {}; }
  virtual void backward(const MarkedInput& /*input*/, const Eigen::MatrixXd& /*output_grad*/) {}
  virtual nlohmann::json state() const { return nlohmann::json::object(); }
  virtual void load_state(const nlohmann::json& /*state*/) {}
};

// Deterministic stand-in for a pre-trained encoder. Each token maps to a
// seeded pseudo-random unit vector; an output row is that vector plus the
// mean vector of the marker-delimited segment holding the token, passed
// through a trainable per-dimension affine layer (scale, shift).
class ToyEncoder final : public Encoder {
 public:
  ToyEncoder(std::uint64_t seed, int dimension, int max_length = 512);

  std::string name() const override;
  int dimension() const override { return dimension_; }
  int max_length() const override { return max_length_; }
  std::vector<std::string> tokenize(std::string_view text) const override;
  Eigen::MatrixXd encode(const MarkedInput& input) const override;
  std::string marker_policy() const override { return "extended"; }

  std::vector<ParamSlot> parameters() override;
  void backward(const MarkedInput& input, const Eigen::MatrixXd& output_grad) override;
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& state) override;

  Eigen::VectorXd token_vector(std::string_view token) const;
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd scale, shift;
  Eigen::VectorXd scale_grad, shift_grad;

 private:
  // Pre-affine rows.
  Eigen::MatrixXd raw_rows(const MarkedInput& input) const;

  std::uint64_t seed_;
  int dimension_;
  int max_length_;
};

// "toy:<seed>:<d>" or "toy:<seed>:<d>:<max_length>".
std::unique_ptr<Encoder> make_encoder(std::string_view spec);

MarkedInput build_input(const std::vector<Hypothesis>& hypotheses, std::string_view question,
                        const std::vector<Premise>& premises, const Encoder& encoder);

// Same layout from pre-tokenized units; exposed for tests.
MarkedInput build_input_tokens(const std::vector<std::vector<std::string>>& hypotheses,
                               const std::vector<std::string>& question,
                               const std::vector<std::vector<std::string>>& premises, int max_length);

struct EncodedDialogue {
  Eigen::MatrixXd hypotheses;  // m x d
  Eigen::VectorXd question;    // d
  Eigen::MatrixXd premises;    // n x d
  int dimension = 0;
};

// Row selection at the marker positions of an already-computed encoding.
EncodedDialogue select_markers(const MarkedInput& marked, const Eigen::MatrixXd& encoding);

EncodedDialogue encode(const MarkedInput& marked, const Encoder& encoder);

// Scatters gradients w.r.t. the selected vectors back into an L x d matrix.
Eigen::MatrixXd scatter_marker_grads(const MarkedInput& marked, int dimension, const Eigen::MatrixXd& hypothesis_grad,
                                     const Eigen::VectorXd& question_grad, const Eigen::MatrixXd& premise_grad);

}  // namespace biae
