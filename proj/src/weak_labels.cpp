#include "biae/weak_labels.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <mutex>
#include <thread>

#include "biae/errors.hpp"
#include "biae/text.hpp"

namespace biae {

namespace {

constexpr std::array<std::string_view, 40> kStopwords = {
    "a",    "an",   "the", "of",   "to",   "in",     "on",   "for",  "at",   "by",
    "is",   "are",  "was", "were", "be",   "been",   "it",   "this", "that", "or",
    "and",  "as",   "with", "do",  "does", "did",    "can",  "i",    "my",   "me",
    "am",   "have", "has", "will", "would", "system", "client", "yes", "no",  "if"};

bool is_stopword(const std::string& w) {
  return std::find(kStopwords.begin(), kStopwords.end(), w) != kStopwords.end();
}

void add_feature(Eigen::VectorXd& v, std::string_view feature, double weight) {
  auto h = text::fnv1a64(feature);
  auto slot = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(v.size()));
  double sign = ((h >> 63) & 1U) ? -1.0 : 1.0;
  v[slot] += sign * weight;
}

}  // namespace

HashingEmbeddingOracle::HashingEmbeddingOracle(int dimension) : dimension_(dimension) {
  if (dimension <= 0) throw ValidationError("embedding dimension must be positive");
}

std::string HashingEmbeddingOracle::name() const { return "hashbow:" + std::to_string(dimension_); }

Eigen::VectorXd HashingEmbeddingOracle::embed(std::string_view s) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dimension_);
  std::vector<std::string> content;
  for (auto& w : text::words(s)) {
    // Crude plural folding so "employers" matches "employer".
    if (w.size() > 3 && w.back() == 's' && w[w.size() - 2] != 's') w.pop_back();
    if (!is_stopword(w)) content.push_back(std::move(w));
  }
  for (const auto& w : content) add_feature(v, "u:" + w, 1.0);
  for (std::size_t i = 0; i + 1 < content.size(); ++i) add_feature(v, "b:" + content[i] + " " + content[i + 1], 0.5);
  double norm = v.norm();
  if (norm > 0) v /= norm;
  return v;
}

std::unique_ptr<EmbeddingOracle> make_oracle(std::string_view spec) {
  if (spec == "hashbow") return std::make_unique<HashingEmbeddingOracle>();
  if (spec.rfind("hashbow:", 0) == 0) {
    int dim = 0;
    try {
      dim = std::stoi(std::string(spec.substr(8)));
    } catch (const std::exception&) {
      throw ValidationError("bad oracle spec '" + std::string(spec) + "'");
    }
    return std::make_unique<HashingEmbeddingOracle>(dim);
  }
  throw ValidationError("unknown embedding oracle '" + std::string(spec) + "'");
}

char to_char(EntailmentState s) {
  switch (s) {
    case EntailmentState::Entailment: return 'E';
    case EntailmentState::Contradiction: return 'C';
    case EntailmentState::Neutral: return 'N';
  }
  return 'N';
}

EntailmentState parse_state(char c) {
  switch (c) {
    case 'E': return EntailmentState::Entailment;
    case 'C': return EntailmentState::Contradiction;
    case 'N': return EntailmentState::Neutral;
    default: throw ValidationError(std::string("unknown entailment state '") + c + "'");
  }
}

std::string_view to_string(EntailmentState s) {
  switch (s) {
    case EntailmentState::Entailment: return "ENTAILMENT";
    case EntailmentState::Contradiction: return "CONTRADICTION";
    case EntailmentState::Neutral: return "NEUTRAL";
  }
  return "NEUTRAL";
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw InternalError("embedding dimension mismatch");
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

AlignmentLabels alignment_from_mapping(int num_hypotheses, std::vector<int> premise_to_hypothesis) {
  AlignmentLabels out;
  out.num_hypotheses = num_hypotheses;
  out.premise_to_hypothesis = std::move(premise_to_hypothesis);
  const auto n = out.premise_to_hypothesis.size();
  std::map<int, std::vector<int>> members;
  for (std::size_t j = 0; j < n; ++j) {
    int i = out.premise_to_hypothesis[j];
    if (i < 0 || i >= num_hypotheses) throw InternalError("alignment target out of range");
    members[i].push_back(static_cast<int>(j));
  }
  for (const auto& [i, js] : members) {
    std::vector<double> row(n, 0.0);
    for (int j : js) row[static_cast<std::size_t>(j)] = 1.0 / static_cast<double>(js.size());
    out.row_targets.emplace(i, std::move(row));
  }
  return out;
}

AlignmentLabels align_embeddings(const std::vector<Eigen::VectorXd>& hyps, const std::vector<Eigen::VectorXd>& prems) {
  if (hyps.empty()) throw ValidationError("alignment needs at least one hypothesis");
  std::vector<int> mapping;
  mapping.reserve(prems.size());
  for (const auto& u : prems) {
    int best = 0;
    double best_sim = cosine_similarity(hyps[0], u);
    for (std::size_t i = 1; i < hyps.size(); ++i) {
      double sim = cosine_similarity(hyps[i], u);
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(i);
      }
    }
    mapping.push_back(best);
  }
  return alignment_from_mapping(static_cast<int>(hyps.size()), std::move(mapping));
}

AlignmentLabels align_labels(const std::vector<Hypothesis>& hypotheses, const std::vector<Premise>& premises,
                             const EmbeddingOracle& oracle) {
  std::vector<Eigen::VectorXd> h;
  std::vector<Eigen::VectorXd> u;
  for (const auto& x : hypotheses) h.push_back(oracle.embed(x.text));
  for (const auto& x : premises) u.push_back(oracle.embed(x.text));
  for (const auto* set : {&h, &u})
    for (const auto& v : *set)
      if (v.size() != oracle.dimension()) throw InternalError("oracle '" + oracle.name() + "' returned wrong dimension");
  return align_embeddings(h, u);
}

EntailmentLabels entailment_labels(const std::vector<Hypothesis>& hypotheses, const std::vector<Premise>& premises,
                                   const AlignmentLabels& alignment) {
  if (alignment.premise_to_hypothesis.size() != premises.size())
    throw ValidationError("alignment does not cover the premise set");
  EntailmentLabels out;
  out.num_hypotheses = static_cast<int>(hypotheses.size());
  out.num_premises = static_cast<int>(premises.size());
  for (std::size_t j = 0; j < premises.size(); ++j) {
    const auto& p = premises[j];
    int aligned = alignment.premise_to_hypothesis[j];
    auto state = EntailmentState::Entailment;
    if (p.source == PremiseSource::Turn && p.answer == Answer::No) state = EntailmentState::Contradiction;
    for (int i = 0; i < out.num_hypotheses; ++i) {
      out.pair_labels[{i, static_cast<int>(j)}] = i == aligned ? state : EntailmentState::Neutral;
      out.labeled_pairs.emplace_back(i, static_cast<int>(j));
    }
  }
  return out;
}

double agreement_rate(const AlignmentLabels& predicted, const std::map<int, int>& gold) {
  if (gold.empty()) throw ValidationError("agreement rate is undefined for an empty gold set");
  std::size_t agree = 0;
  for (const auto& [j, i] : gold) {
    if (j < 0 || static_cast<std::size_t>(j) >= predicted.premise_to_hypothesis.size())
      throw ValidationError("gold premise index " + std::to_string(j) + " out of range");
    if (predicted.premise_to_hypothesis[static_cast<std::size_t>(j)] == i) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(gold.size());
}

InstanceLabels build_instance_labels(const DialogueInstance& instance, const Segmenter& segmenter,
                                     const EmbeddingOracle& oracle) {
  auto hyps = segment_document(instance.document, segmenter);
  auto prems = premises_of(instance.scenario, instance.history);
  InstanceLabels out;
  out.utterance_id = instance.utterance_id;
  out.oracle = oracle.name();
  out.alignment = align_labels(hyps, prems, oracle);
  out.entailment = entailment_labels(hyps, prems, out.alignment);
  return out;
}

nlohmann::json labels_to_json(const InstanceLabels& labels) {
  nlohmann::json rows = nlohmann::json::array();
  const auto& e = labels.entailment;
  for (int i = 0; i < e.num_hypotheses; ++i) {
    std::string row;
    for (int j = 0; j < e.num_premises; ++j) {
      auto it = e.pair_labels.find({i, j});
      row += it == e.pair_labels.end() ? '-' : to_char(it->second);
    }
    rows.push_back(row);
  }
  return {{"utterance_id", labels.utterance_id},
          {"oracle", labels.oracle},
          {"m", labels.alignment.num_hypotheses},
          {"n", static_cast<int>(labels.alignment.premise_to_hypothesis.size())},
          {"premise_to_hypothesis", labels.alignment.premise_to_hypothesis},
          {"pair_labels", rows}};
}

InstanceLabels labels_from_json(const nlohmann::json& r) {
  InstanceLabels out;
  try {
    out.utterance_id = r.at("utterance_id").get<std::string>();
    out.oracle = r.at("oracle").get<std::string>();
    int m = r.at("m").get<int>();
    int n = r.at("n").get<int>();
    out.alignment = alignment_from_mapping(m, r.at("premise_to_hypothesis").get<std::vector<int>>());
    if (static_cast<int>(out.alignment.premise_to_hypothesis.size()) != n)
      throw SchemaError(out.utterance_id, "premise_to_hypothesis", "length differs from n");
    out.entailment.num_hypotheses = m;
    out.entailment.num_premises = n;
    const auto& rows = r.at("pair_labels");
    if (!rows.is_array() || static_cast<int>(rows.size()) != m)
      throw SchemaError(out.utterance_id, "pair_labels", "expected m rows");
    for (int i = 0; i < m; ++i) {
      auto row = rows[static_cast<std::size_t>(i)].get<std::string>();
      if (static_cast<int>(row.size()) != n) throw SchemaError(out.utterance_id, "pair_labels", "row length differs from n");
      for (int j = 0; j < n; ++j) {
        if (row[static_cast<std::size_t>(j)] == '-') continue;
        out.entailment.pair_labels[{i, j}] = parse_state(row[static_cast<std::size_t>(j)]);
        out.entailment.labeled_pairs.emplace_back(i, j);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(r.value("utterance_id", std::string("?")), "<label record>", e.what());
  }
  return out;
}

std::size_t LabelCache::KeyHash::operator()(const Key& k) const {
  return static_cast<std::size_t>(text::fnv1a64(k.second, text::fnv1a64(k.first)));
}

LabelCache::LabelCache(LabelCache&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  entries_ = std::move(other.entries_);
  order_ = std::move(other.order_);
}

LabelCache& LabelCache::operator=(LabelCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
    order_ = std::move(other.order_);
  }
  return *this;
}

void LabelCache::put(InstanceLabels labels) {
  Key key{labels.utterance_id, labels.oracle};
  std::unique_lock lock(mutex_);
  auto [it, inserted] = entries_.insert_or_assign(key, std::move(labels));
  if (inserted) order_.push_back(std::move(key));
}

std::optional<InstanceLabels> LabelCache::find(const std::string& utterance_id, const std::string& oracle) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({utterance_id, oracle});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

InstanceLabels LabelCache::get(const std::string& utterance_id, const std::string& oracle) const {
  auto found = find(utterance_id, oracle);
  if (!found) throw NotFoundError("label cache has no entry for instance '" + utterance_id + "' (oracle " + oracle + ")");
  return *found;
}

std::size_t LabelCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void LabelCache::save(const std::filesystem::path& file) const {
  std::shared_lock lock(mutex_);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write label cache '" + file.string() + "'");
  for (const auto& key : order_) out << labels_to_json(entries_.at(key)).dump() << '\n';
}

LabelCache LabelCache::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open label cache '" + file.string() + "'");
  LabelCache cache;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("line " + std::to_string(lineno), "<record>", e.what());
    }
    cache.put(labels_from_json(record));
  }
  return cache;
}

LabelCache build_label_cache(const std::vector<DialogueInstance>& instances, const Segmenter& segmenter,
                             const EmbeddingOracle& oracle, unsigned workers) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  std::vector<InstanceLabels> results(instances.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = w; k < instances.size(); k += workers)
        results[k] = build_instance_labels(instances[k], segmenter, oracle);
    });
  }
  for (auto& t : pool) t.join();
  LabelCache cache;
  for (auto& r : results) cache.put(std::move(r));
  return cache;
}

std::map<std::string, std::map<int, int>> load_gold_alignments(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open gold alignment file '" + file.string() + "'");
  std::map<std::string, std::map<int, int>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto r = nlohmann::json::parse(line);
    auto& entry = out[r.at("utterance_id").get<std::string>()];
    const auto& mapping = r.at("premise_to_hypothesis");
    if (mapping.is_array()) {
      for (std::size_t j = 0; j < mapping.size(); ++j)
        if (!mapping[j].is_null()) entry[static_cast<int>(j)] = mapping[j].get<int>();
    } else {
      for (auto it = mapping.begin(); it != mapping.end(); ++it) entry[std::stoi(it.key())] = it.value().get<int>();
    }
  }
  return out;
}

}  // namespace biae
