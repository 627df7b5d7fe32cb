#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "biae/analysis.hpp"
#include "biae/config.hpp"
#include "biae/errors.hpp"
#include "biae/http_api.hpp"
#include "biae/synthetic.hpp"
#include "biae/train.hpp"

using namespace biae;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
}

// A data path may be a directory holding sharc_<split>.json or a single file.
std::vector<DialogueInstance> load_split(const std::string& data, const std::string& split) {
  if (fs::is_regular_file(data)) return load_dataset_file(data);
  return load_dataset(data, parse_split(split));
}

nlohmann::json prediction_json(const Prediction& p) {
  nlohmann::json j;
  j["decision"] = std::string(to_string(p.decision()));
  nlohmann::json probs;
  for (int k = 0; k < 4; ++k)
    probs[std::string(to_string(static_cast<DecisionLabel>(k)))] = p.pass.outcome.probabilities[k];
  j["probabilities"] = probs;
  j["follow_up_question"] = p.follow_up ? nlohmann::json(*p.follow_up) : nlohmann::json(nullptr);
  auto hyps = nlohmann::json::array();
  for (int i = 0; i < p.prepared.marked.num_hypotheses(); ++i) hyps.push_back(p.prepared.hypotheses[static_cast<std::size_t>(i)].text);
  j["hypotheses"] = hyps;
  auto prem = nlohmann::json::array();
  for (const auto& u : p.prepared.premises) prem.push_back(u.text);
  j["premises"] = prem;
  j["attention"] = std::vector<double>(p.pass.outcome.attention.data(),
                                       p.pass.outcome.attention.data() + p.pass.outcome.attention.size());
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.pass.alignment.probs.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < p.pass.alignment.probs.cols(); ++k) row.push_back(p.pass.alignment.probs(i, k));
    a.push_back(row);
  }
  j["alignment"] = a;
  return j;
}

DialogueInput input_from_json(const nlohmann::json& j) {
  DialogueInput in;
  in.document = j.contains("snippet") ? j.at("snippet").get<std::string>() : j.value("document", std::string());
  in.question = j.value("question", std::string());
  in.scenario = j.value("scenario", std::string());
  if (j.contains("history"))
    for (const auto& t : j["history"])
      in.history.push_back({t.at("follow_up_question").get<std::string>(),
                            parse_answer(t.at("follow_up_answer").get<std::string>())});
  return in;
}

HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversational rule reading: decision model, question generation and dialogue service"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (default: $BIAE_CONFIG)");
  std::string data;
  app.add_option("--data", data, "Dataset directory or file (overrides config data_dir)");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Dataset utilities");
  corpus->require_subcommand(1);
  auto* validate = corpus->add_subcommand("validate", "Check a dataset file against the record schema");
  std::string validate_path;
  validate->add_option("path", validate_path, "Dataset file")->required();
  auto* stats = corpus->add_subcommand("stats", "Decision and subset counts");
  std::string split = "dev";
  stats->add_option("--split", split);

  // segment
  auto* segment = app.add_subcommand("segment", "Split a document into hypothesis units");
  std::string doc_text, instance_id;
  segment->add_option("--doc", doc_text, "Document text");
  segment->add_option("--instance", instance_id, "utterance_id from --split");
  segment->add_option("--split", split);

  // labels
  auto* labels = app.add_subcommand("labels", "Weak alignment/entailment labels");
  labels->require_subcommand(1);
  auto* labels_build = labels->add_subcommand("build", "Build the label cache for a split");
  std::string labels_out;
  unsigned workers = 0;
  labels_build->add_option("--split", split);
  labels_build->add_option("--out", labels_out, "Output JSONL (default: config labels)");
  labels_build->add_option("--workers", workers);
  auto* labels_audit = labels->add_subcommand("audit", "Agreement of cached alignments with a gold file");
  std::string gold_path, labels_in;
  labels_audit->add_option("--gold", gold_path, "Gold JSONL {utterance_id, premise_to_hypothesis}")->required();
  labels_audit->add_option("--labels", labels_in, "Label cache JSONL");

  // train
  auto* train = app.add_subcommand("train", "Train the decision model");
  std::string train_out, loss_curve_out;
  double lr = 0, lambda = 0, dropout = -1;
  int epochs = 0, batch = 0, max_steps = -1;
  std::int64_t seed = -1;
  std::string encoder_name;
  train->add_option("--split", split);
  train->add_option("--labels", labels_in);
  train->add_option("--out", train_out, "Checkpoint path (default: config checkpoint)");
  train->add_option("--loss-curve", loss_curve_out, "CSV of per-step loss");
  train->add_option("--lr", lr);
  train->add_option("--lambda", lambda);
  train->add_option("--dropout", dropout);
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch);
  train->add_option("--max-steps", max_steps);
  train->add_option("--seed", seed);
  train->add_option("--encoder", encoder_name);

  // eval / analyze
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a split");
  std::string checkpoint_path, report_path;
  eval->add_option("--checkpoint", checkpoint_path);
  eval->add_option("--split", split);
  eval->add_option("--report", report_path, "Metrics JSON; predictions go to <report>.csv")->required();
  auto* analyze = app.add_subcommand("analyze-entailment", "Per-document entailment correctness");
  std::string analyze_out = "entailment_analysis";
  analyze->add_option("--checkpoint", checkpoint_path);
  analyze->add_option("--split", split);
  analyze->add_option("--out", analyze_out, "Output directory");

  // predict / serve
  auto* predict = app.add_subcommand("predict", "Predict one instance-shaped JSON input");
  std::string predict_json;
  predict->add_option("--json", predict_json, "Input file")->required();
  predict->add_option("--checkpoint", checkpoint_path);
  auto* serve = app.add_subcommand("serve", "Run the HTTP dialogue service");
  int port = -1;
  std::string host;
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--checkpoint", checkpoint_path);

  // qgen / synth
  auto* qgen = app.add_subcommand("qgen", "Question generation data");
  qgen->require_subcommand(1);
  auto* qgen_export = qgen->add_subcommand("export", "Write {input_text, target_text} JSONL");
  std::string qgen_out;
  bool with_augment = false;
  qgen_export->add_option("--split", split);
  qgen_export->add_option("--out", qgen_out)->required();
  qgen_export->add_flag("--augment", with_augment, "Add history-reduced samples");
  auto* synth = app.add_subcommand("synth", "Write a synthetic rule-world dataset");
  int synth_count = 100;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  synth->add_option("--count", synth_count);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--out", synth_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));
    if (!data.empty()) cfg.data_dir = data;
    if (!checkpoint_path.empty()) cfg.checkpoint = checkpoint_path;

    if (validate->parsed()) {
      auto report = validate_dataset(validate_path);
      for (const auto& v : report.violations) std::cout << v << '\n';
      std::cout << (report.ok() ? "ok" : "invalid") << " (" << report.instance_count << " records)\n";
      return report.ok() ? 0 : 1;
    }
    if (stats->parsed()) {
      auto instances = load_split(cfg.data_dir, split);
      auto c = count_subsets(instances);
      std::map<std::string, std::size_t> decisions;
      for (const auto& inst : instances) ++decisions[std::string(to_string(inst.gold_decision))];
      nlohmann::json j = {{"instances", instances.size()},
                          {"decisions", decisions},
                          {"subsets",
                           {{"all", c.all},
                            {"bullet_point", c.bullet_point},
                            {"regular", c.regular},
                            {"scenario", c.scenario},
                            {"no_scenario", c.no_scenario},
                            {"history", c.history},
                            {"no_history", c.no_history}}}};
      std::cout << j.dump(2) << '\n';
      return 0;
    }
    if (segment->parsed()) {
      std::string document = doc_text;
      if (!instance_id.empty()) {
        for (const auto& inst : load_split(cfg.data_dir, split))
          if (inst.utterance_id == instance_id) document = inst.document;
        if (document.empty()) throw NotFoundError("no instance " + instance_id + " in " + split);
      }
      if (document.empty()) throw ValidationError("pass --doc or --instance");
      auto out = nlohmann::json::array();
      for (const auto& h : segment_document(document))
        out.push_back({{"index", h.index}, {"text", h.text}, {"start", h.span.start}, {"end", h.span.end}});
      std::cout << out.dump(2) << '\n';
      return 0;
    }
    if (labels_build->parsed()) {
      auto instances = load_split(cfg.data_dir, split);
      auto oracle = make_oracle(cfg.train.oracle);
      auto cache = build_label_cache(instances, RuleSegmenter(), *oracle, workers);
      auto out = labels_out.empty() ? cfg.labels : labels_out;
      cache.save(out);
      std::cout << "wrote " << cache.size() << " label records to " << out << '\n';
      return 0;
    }
    if (labels_audit->parsed()) {
      auto cache = LabelCache::load(labels_in.empty() ? cfg.labels : labels_in);
      auto gold = load_gold_alignments(gold_path);
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& [id, mapping] : gold) {
        auto got = cache.get(id, cfg.train.oracle);
        double rate = agreement_rate(got.alignment, mapping);
        std::cout << id << ',' << rate << '\n';
        sum += rate;
        ++n;
      }
      if (n) std::cout << "mean agreement " << sum / static_cast<double>(n) << " over " << n << " instances\n";
      return 0;
    }
    if (train->parsed()) {
      if (lr > 0) cfg.train.learning_rate = lr;
      if (lambda > 0) cfg.train.lambda = lambda;
      if (dropout >= 0) cfg.train.dropout = dropout;
      if (epochs > 0) cfg.train.epochs = epochs;
      if (batch > 0) cfg.train.batch_size = batch;
      if (max_steps >= 0) cfg.train.max_steps = max_steps;
      if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
      if (!encoder_name.empty()) cfg.train.encoder_name = encoder_name;
      cfg.train.validate();
      auto instances = load_split(cfg.data_dir, split == "dev" ? "train" : split);
      auto cache = LabelCache::load(labels_in.empty() ? cfg.labels : labels_in);
      Trainer trainer(instances, cache, cfg.train);
      while (trainer.step_count() < trainer.total_steps()) {
        double loss = trainer.step();
        if (trainer.step_count() % 50 == 0 || trainer.step_count() == trainer.total_steps())
          std::cerr << "step " << trainer.step_count() << "/" << trainer.total_steps() << " loss " << loss << '\n';
      }
      auto out = train_out.empty() ? cfg.checkpoint : train_out;
      save_checkpoint(out, trainer.checkpoint());
      if (!loss_curve_out.empty()) {
        std::ostringstream csv;
        csv << "step,loss\n";
        for (std::size_t k = 0; k < trainer.loss_curve().size(); ++k) csv << k + 1 << ',' << trainer.loss_curve()[k] << '\n';
        write_file(loss_curve_out, csv.str());
      }
      std::cout << "wrote " << out << " (training accuracy " << trainer.training_accuracy() << ")\n";
      return 0;
    }
    if (eval->parsed()) {
      auto model = Model::load(cfg.checkpoint, cfg.generator);
      auto records = predict_all(model, load_split(cfg.data_dir, split));
      auto report = metrics_report(records);
      write_file(report_path, to_json(report).dump(2) + "\n");
      write_predictions_csv(report_path + ".csv", records);
      std::cout << to_json(report).dump(2) << '\n';
      return 0;
    }
    if (analyze->parsed()) {
      auto model = Model::load(cfg.checkpoint, cfg.generator);
      auto oracle = make_oracle(model.checkpoint().oracle.empty() ? cfg.train.oracle : model.checkpoint().oracle);
      auto analysis = analyze_entailment(model, load_split(cfg.data_dir, split), *oracle);
      fs::create_directories(analyze_out);
      write_file(fs::path(analyze_out) / "analysis.json", to_json(analysis).dump(2) + "\n");
      write_file(fs::path(analyze_out) / "alpha_histogram.csv", alpha_histogram_table(analysis));
      write_file(fs::path(analyze_out) / "alpha_density.svg", alpha_histogram_svg(analysis));
      std::cout << alpha_histogram_table(analysis);
      std::cout << "beta success " << analysis.success.beta << ", fail " << analysis.fail.beta << '\n';
      return 0;
    }
    if (predict->parsed()) {
      auto model = Model::load(cfg.checkpoint, cfg.generator);
      auto j = nlohmann::json::parse(read_file(predict_json));
      std::cout << prediction_json(model.predict(input_from_json(j))).dump(2) << '\n';
      return 0;
    }
    if (serve->parsed()) {
      if (port >= 0) cfg.serve.port = port;
      if (!host.empty()) cfg.serve.host = host;
      auto model = std::make_shared<const Model>(Model::load(cfg.checkpoint, cfg.generator));
      SessionOptions opts;
      opts.turn_cap = cfg.serve.turn_cap;
      if (!cfg.serve.persist_dir.empty()) opts.persist_dir = cfg.serve.persist_dir;
      HttpServer server(std::make_shared<SessionStore>(model, opts));
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << cfg.serve.host << ":" << cfg.serve.port << '\n';
      server.run(cfg.serve.host, cfg.serve.port);
      return 0;
    }
    if (qgen_export->parsed()) {
      auto instances = load_split(cfg.data_dir, split);
      auto samples = natural_generation_set(instances);
      if (with_augment) {
        auto extra = augment(instances);
        samples.insert(samples.end(), extra.begin(), extra.end());
      }
      export_generation_file(qgen_out, samples);
      std::cout << "wrote " << samples.size() << " samples to " << qgen_out << '\n';
      return 0;
    }
    if (synth->parsed()) {
      SyntheticConfig sc;
      sc.instances = synth_count;
      sc.seed = synth_seed;
      save_dataset(synth_out, synthetic_dataset(sc));
      std::cout << "wrote " << synth_count << " instances to " << synth_out << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
