#include "biae/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

DialogueInput input_of(const DialogueInstance& instance) {
  return {instance.document, instance.question, instance.scenario, instance.history};
}

PreparedDialogue prepare_dialogue(const DialogueInput& input, const Segmenter& segmenter, const Encoder& encoder) {
  if (text::trim(input.document).empty()) throw ValidationError("document must be non-empty");
  if (text::trim(input.question).empty()) throw ValidationError("question must be non-empty");
  PreparedDialogue out;
  out.hypotheses = segment_document(input.document, segmenter);
  out.premises = premises_of(input.scenario, input.history);
  out.marked = build_input(out.hypotheses, input.question, out.premises, encoder);
  return out;
}

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json j = parameters_to_json(c.params);
  j["encoder"] = {{"name", c.encoder_name}, {"state", c.encoder_state}, {"marker_policy", c.marker_policy}};
  j["segmenter"] = c.segmenter;
  j["oracle"] = c.oracle;
  j["seed"] = c.seed;
  j["config_hash"] = c.config_hash;
  j["config"] = c.config;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint c;
    c.params = parameters_from_json(j);
    const auto& enc = j.at("encoder");
    c.encoder_name = enc.at("name").get<std::string>();
    c.encoder_state = enc.value("state", nlohmann::json::object());
    c.marker_policy = enc.value("marker_policy", "");
    c.segmenter = j.value("segmenter", "rule:1");
    c.oracle = j.value("oracle", "");
    c.seed = j.value("seed", std::uint64_t{0});
    c.config_hash = j.value("config_hash", "");
    c.config = j.value("config", nlohmann::json::object());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << checkpoint_to_json(checkpoint).dump() << '\n';
  if (!out) throw IoError("write failed: " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

Model::Model(Checkpoint checkpoint, std::shared_ptr<const Generator> generator)
    : checkpoint_(std::move(checkpoint)), generator_(std::move(generator)) {
  encoder_ = make_encoder(checkpoint_.encoder_name);
  encoder_->load_state(checkpoint_.encoder_state);
  if (encoder_->dimension() != checkpoint_.params.dim)
    throw ServiceError("encoder dimension " + std::to_string(encoder_->dimension()) +
                       " does not match checkpoint dimension " + std::to_string(checkpoint_.params.dim));
  if (!generator_) generator_ = std::make_shared<TemplateGenerator>();
}

Model Model::load(const std::filesystem::path& checkpoint_file, const std::string& generator_spec) {
  try {
    return Model(load_checkpoint(checkpoint_file), make_generator(generator_spec));
  } catch (const ServiceError&) {
    throw;
  } catch (const Error& e) {
    throw ServiceError(std::string("model load failed: ") + e.what());
  }
}

Prediction Model::predict(const DialogueInput& input) const {
  Prediction out;
  out.prepared = prepare_dialogue(input, segmenter_, *encoder_);
  out.pass = forward(encode(out.prepared.marked, *encoder_), checkpoint_.params);
  if (out.pass.outcome.decision == DecisionLabel::More) {
    std::vector<std::string> asked;
    for (const auto& t : input.history) asked.push_back(t.follow_up_question);
    out.follow_up = generate_question(input.document, asked, *generator_);
  }
  return out;
}

}  // namespace biae
