#include "biae/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "biae/errors.hpp"

namespace biae {

std::vector<std::string> subset_names() {
  return {"all", "bullet_point", "regular", "scenario", "no_scenario", "history", "no_history"};
}

bool in_subset(const SubsetFlags& f, const std::string& subset) {
  if (subset == "all") return true;
  if (subset == "bullet_point") return f.bullet_point;
  if (subset == "regular") return !f.bullet_point;
  if (subset == "scenario") return f.has_scenario;
  if (subset == "no_scenario") return !f.has_scenario;
  if (subset == "history") return f.has_history;
  if (subset == "no_history") return !f.has_history;
  throw ValidationError("unknown subset: " + subset);
}

std::vector<PredictionRecord> predict_all(const Model& model, const std::vector<DialogueInstance>& instances) {
  std::vector<PredictionRecord> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    auto p = model.predict(input_of(inst));
    PredictionRecord r;
    r.utterance_id = inst.utterance_id;
    r.gold = inst.gold_decision;
    r.predicted = p.decision();
    if (inst.gold_decision == DecisionLabel::More) r.gold_question = inst.gold_answer;
    if (p.follow_up) r.predicted_question = *p.follow_up;
    r.flags = subset_flags(inst);
    out.push_back(std::move(r));
  }
  return out;
}

MetricsReport metrics_report(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw ValidationError("no predictions to score");
  MetricsReport rep;
  for (const auto& name : subset_names()) {
    std::vector<DecisionLabel> p, g;
    for (const auto& r : records)
      if (in_subset(r.flags, name)) {
        p.push_back(r.predicted);
        g.push_back(r.gold);
      }
    rep.counts[name] = g.size();
    if (g.empty()) continue;
    auto mm = micro_macro(p, g);
    rep.subset_micro[name] = mm.micro;
    rep.subset_macro[name] = mm.macro;
    if (name == "all") {
      rep.micro_accuracy = mm.micro;
      rep.macro_accuracy = mm.macro;
      rep.class_wise = class_wise(p, g);
    }
  }
  std::vector<DecisionLabel> pd, gd;
  std::vector<std::string> pq, gq;
  for (const auto& r : records) {
    pd.push_back(r.predicted);
    gd.push_back(r.gold);
    pq.push_back(r.predicted_question);
    gq.push_back(r.gold_question);
  }
  rep.bleu = conditional_bleu(pd, gd, pq, gq);
  return rep;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["micro_accuracy"] = r.micro_accuracy;
  j["macro_accuracy"] = r.macro_accuracy;
  nlohmann::ordered_json cw = nlohmann::ordered_json::object();
  for (const auto& [label, v] : r.class_wise) cw[std::string(to_string(label))] = v;
  j["class_wise"] = cw;
  if (r.bleu) {
    nlohmann::ordered_json b;
    for (const auto& [n, v] : *r.bleu) b["bleu" + std::to_string(n)] = v;
    j["bleu"] = b;
  } else {
    j["bleu"] = nullptr;
  }
  j["subset_micro"] = r.subset_micro;
  j["subset_macro"] = r.subset_macro;
  j["counts"] = r.counts;
  return nlohmann::json::parse(j.dump());
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  double pos = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void write_predictions_csv(const std::filesystem::path& file, const std::vector<PredictionRecord>& records) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  out << "utterance_id,gold,predicted,correct,bullet_point,has_scenario,has_history,gold_question,predicted_question\n";
  for (const auto& r : records) {
    out << csv_field(r.utterance_id) << ',' << to_string(r.gold) << ',' << to_string(r.predicted) << ','
        << (r.gold == r.predicted) << ',' << r.flags.bullet_point << ',' << r.flags.has_scenario << ','
        << r.flags.has_history << ',' << csv_field(r.gold_question) << ',' << csv_field(r.predicted_question) << '\n';
  }
  if (!out) throw IoError("write failed: " + file.string());
}

AlphaStatistics alpha_statistics(std::vector<double> alphas, int bins) {
  AlphaStatistics s;
  s.histogram.assign(static_cast<std::size_t>(bins), 0);
  s.alphas = alphas;
  if (alphas.empty()) return s;
  s.beta = beta(alphas);
  double sum = 0.0;
  for (double a : alphas) sum += a;
  s.mean = sum / static_cast<double>(alphas.size());
  double sq = 0.0;
  for (double a : alphas) sq += (a - s.mean) * (a - s.mean);
  s.variance = sq / static_cast<double>(alphas.size());
  std::sort(alphas.begin(), alphas.end());
  s.quartiles[0] = quantile(alphas, 0.25);
  s.quartiles[1] = quantile(alphas, 0.5);
  s.quartiles[2] = quantile(alphas, 0.75);
  for (double a : alphas) {
    auto b = static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(std::floor(a * bins))));
    ++s.histogram[b];
  }
  return s;
}

EntailmentAnalysis analyze_entailment(const Model& model, const std::vector<DialogueInstance>& instances,
                                      const EmbeddingOracle& oracle) {
  RuleSegmenter segmenter;
  std::vector<double> success, fail;
  EntailmentAnalysis out;
  for (const auto& inst : instances) {
    auto p = model.predict(input_of(inst));
    if (p.pass.alignment.no_premises()) {
      ++out.skipped_without_premises;
      continue;
    }
    const int m = p.prepared.marked.num_hypotheses();
    auto labels = build_instance_labels(inst, segmenter, oracle);
    auto constructed = constructed_hypothesis_states(restrict_entailment(labels.entailment, m));
    auto predicted = predicted_hypothesis_states(p.pass.alignment, p.pass.entailment);
    double a = alpha(predicted, constructed);
    (p.decision() == inst.gold_decision ? success : fail).push_back(a);
  }
  out.success = alpha_statistics(std::move(success));
  out.fail = alpha_statistics(std::move(fail));
  return out;
}

namespace {

nlohmann::json stats_json(const AlphaStatistics& s) {
  return {{"documents", s.alphas.size()},
          {"beta", s.beta},
          {"mean_alpha", s.mean},
          {"variance_alpha", s.variance},
          {"quartiles", {s.quartiles[0], s.quartiles[1], s.quartiles[2]}},
          {"histogram", s.histogram},
          {"alpha_per_document", s.alphas}};
}

}  // namespace

nlohmann::json to_json(const EntailmentAnalysis& a) {
  return {{"success", stats_json(a.success)},
          {"fail", stats_json(a.fail)},
          {"skipped_without_premises", a.skipped_without_premises}};
}

std::string alpha_histogram_table(const EntailmentAnalysis& a) {
  std::ostringstream out;
  const std::size_t bins = a.success.histogram.size();
  out << "bin,success,fail\n";
  out << std::fixed << std::setprecision(1);
  for (std::size_t b = 0; b < bins; ++b) {
    double lo = static_cast<double>(b) / static_cast<double>(bins), hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    out << '[' << lo << ' ' << hi << (b + 1 == bins ? "]" : ")") << ',' << a.success.histogram[b] << ','
        << a.fail.histogram[b] << '\n';
  }
  return out.str();
}

std::string alpha_histogram_svg(const EntailmentAnalysis& a) {
  const int width = 480, height = 240, pad = 30;
  const std::size_t bins = a.success.histogram.size();
  auto density = [&](const AlphaStatistics& s) {
    std::vector<double> d(bins, 0.0);
    if (s.alphas.empty()) return d;
    for (std::size_t b = 0; b < bins; ++b)
      d[b] = static_cast<double>(s.histogram[b]) / static_cast<double>(s.alphas.size());
    return d;
  };
  auto ds = density(a.success), df = density(a.fail);
  double top = 1e-9;
  for (std::size_t b = 0; b < bins; ++b) top = std::max({top, ds[b], df[b]});
  auto polyline = [&](const std::vector<double>& d, const char* colour) {
    std::ostringstream p;
    p << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t b = 0; b < bins; ++b) {
      double x = pad + (static_cast<double>(b) + 0.5) / static_cast<double>(bins) * (width - 2 * pad);
      double y = height - pad - d[b] / top * (height - 2 * pad);
      p << std::fixed << std::setprecision(1) << x << ',' << y << ' ';
    }
    p << "\"/>\n";
    return p.str();
  };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << height - pad << "\" x2=\"" << width - pad << "\" y2=\"" << height - pad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 8 << "\" font-size=\"12\">alpha</text>\n";
  out << polyline(ds, "steelblue") << polyline(df, "firebrick");
  out << "<text x=\"" << pad << "\" y=\"16\" font-size=\"12\" fill=\"steelblue\">success</text>\n";
  out << "<text x=\"" << pad + 70 << "\" y=\"16\" font-size=\"12\" fill=\"firebrick\">fail</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace biae
