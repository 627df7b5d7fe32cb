#include "biae/train.hpp"

#include <cmath>
#include <sstream>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

Eigen::MatrixXd dropout_mask(int rows, int cols, double p, std::mt19937_64& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = unit(rng) < p ? 0.0 : keep;
  return mask;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda > 0)) throw ValidationError("lambda must be positive");
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ValidationError("warmup_fraction must be in [0, 1)");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
}

std::string TrainConfig::hash() const {
  std::ostringstream out;
  out << std::hex << text::fnv1a64(to_json(*this).dump());
  return out.str();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"dropout", c.dropout},
          {"warmup_fraction", c.warmup_fraction},
          {"seed", c.seed},
          {"encoder_name", c.encoder_name},
          {"oracle", c.oracle},
          {"train_encoder", c.train_encoder},
          {"max_steps", c.max_steps}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    c.lambda = j.value("lambda", c.lambda);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.dropout = j.value("dropout", c.dropout);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.seed = j.value("seed", c.seed);
    c.encoder_name = j.value("encoder_name", c.encoder_name);
    c.oracle = j.value("oracle", c.oracle);
    c.train_encoder = j.value("train_encoder", c.train_encoder);
    c.max_steps = j.value("max_steps", c.max_steps);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad training config: ") + e.what());
  }
  return c;
}

double scheduled_rate(const TrainConfig& config, int step, int total_steps) {
  const int warmup = static_cast<int>(std::floor(config.warmup_fraction * total_steps));
  if (step < warmup) return config.learning_rate * (step + 1) / warmup;
  const int decay = total_steps - warmup;
  if (decay <= 0) return config.learning_rate;
  return config.learning_rate * std::max(0.0, static_cast<double>(total_steps - step) / decay);
}

Trainer::Trainer(const std::vector<DialogueInstance>& train, const LabelCache& labels, TrainConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  encoder_ = make_encoder(config_.encoder_name);
  const int d = encoder_->dimension();
  params_ = BiAEParameters::initialize(d, config_.seed);
  grad_ = BiAEParameters::zeros(d);

  RuleSegmenter segmenter;
  for (const auto& inst : train) {
    auto cached = labels.get(inst.utterance_id, config_.oracle);
    auto prepared = prepare_dialogue(input_of(inst), segmenter, *encoder_);
    if (cached.alignment.num_hypotheses != static_cast<int>(prepared.hypotheses.size()) ||
        cached.entailment.num_premises != static_cast<int>(prepared.premises.size()))
      throw InternalError("label cache entry for " + inst.utterance_id + " does not match its segmentation");
    const int m = prepared.marked.num_hypotheses();
    examples_.push_back({inst.utterance_id, std::move(prepared.marked), inst.gold_decision,
                         restrict_alignment(cached.alignment, m), restrict_entailment(cached.entailment, m)});
  }
  order_.resize(examples_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  shuffle(order_, rng_);

  total_steps_ = config_.max_steps > 0 ? config_.max_steps : config_.epochs * steps_per_epoch();
  slots_ = params_.slots(grad_);
  if (config_.train_encoder)
    for (const auto& s : encoder_->parameters()) slots_.push_back(s);
  for (const auto& s : slots_) {
    adam_m_.emplace_back(s.size, 0.0);
    adam_v_.emplace_back(s.size, 0.0);
  }
}

int Trainer::steps_per_epoch() const {
  const auto n = static_cast<int>(examples_.size());
  return (n + config_.batch_size - 1) / config_.batch_size;
}

int Trainer::next_index() {
  if (cursor_ == order_.size()) {
    shuffle(order_, rng_);
    cursor_ = 0;
  }
  return static_cast<int>(order_[cursor_++]);
}

double Trainer::step() {
  for (auto& s : slots_) std::fill(s.grad, s.grad + s.size, 0.0);
  // Batches never straddle an epoch boundary.
  const std::size_t remaining = cursor_ == order_.size() ? order_.size() : order_.size() - cursor_;
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config_.batch_size), remaining);
  const double scale = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  const int d = encoder_->dimension();
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& ex = examples_[static_cast<std::size_t>(next_index())];
    Eigen::MatrixXd rows = encoder_->encode(ex.marked);
    EncodedDialogue input = select_markers(ex.marked, rows);
    Eigen::MatrixXd mh, mp;
    Eigen::VectorXd mq;
    if (config_.dropout > 0) {
      mh = dropout_mask(static_cast<int>(input.hypotheses.rows()), d, config_.dropout, rng_);
      mp = dropout_mask(static_cast<int>(input.premises.rows()), d, config_.dropout, rng_);
      mq = dropout_mask(d, 1, config_.dropout, rng_);
      input.hypotheses.array() *= mh.array();
      input.premises.array() *= mp.array();
      input.question.array() *= mq.array();
    }
    auto pass = forward(input, params_);
    Supervision sup{ex.gold, &ex.alignment, &ex.entailment, config_.lambda};
    InputGrad ig;
    auto loss = backward(input, params_, pass, sup, grad_, config_.train_encoder ? &ig : nullptr, scale);
    total += loss.total;
    if (config_.train_encoder) {
      if (config_.dropout > 0) {
        ig.hypotheses.array() *= mh.array();
        ig.premises.array() *= mp.array();
        ig.question.array() *= mq.array();
      }
      encoder_->backward(ex.marked, scatter_marker_grads(ex.marked, d, ig.hypotheses, ig.question, ig.premises));
    }
  }

  const double lr = scheduled_rate(config_, steps_, total_steps_);
  ++steps_;
  const double c1 = 1.0 - std::pow(kBeta1, steps_);
  const double c2 = 1.0 - std::pow(kBeta2, steps_);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    auto& m = adam_m_[s];
    auto& v = adam_v_[s];
    for (std::size_t k = 0; k < slots_[s].size; ++k) {
      const double g = slots_[s].grad[k];
      m[k] = kBeta1 * m[k] + (1 - kBeta1) * g;
      v[k] = kBeta2 * v[k] + (1 - kBeta2) * g * g;
      slots_[s].value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + kAdamEps);
    }
  }
  if (!params_.all_finite()) throw InternalError("non-finite parameters after step " + std::to_string(steps_));
  const double mean = total * scale;
  loss_curve_.push_back(mean);
  return mean;
}

double Trainer::training_accuracy() const {
  int correct = 0;
  for (const auto& ex : examples_)
    correct += forward(encode(ex.marked, *encoder_), params_).outcome.decision == ex.gold;
  return static_cast<double>(correct) / static_cast<double>(examples_.size());
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.params = params_;
  c.encoder_name = encoder_->name();
  c.encoder_state = encoder_->state();
  c.marker_policy = encoder_->marker_policy();
  c.oracle = config_.oracle;
  c.seed = config_.seed;
  c.config_hash = config_.hash();
  c.config = to_json(config_);
  return c;
}

TrainResult train_decision(const std::vector<DialogueInstance>& train, const LabelCache& labels,
                           const TrainConfig& config) {
  Trainer trainer(train, labels, config);
  while (trainer.step_count() < trainer.total_steps()) trainer.step();
  return {trainer.checkpoint(), trainer.loss_curve(), trainer.step_count()};
}

}  // namespace biae
