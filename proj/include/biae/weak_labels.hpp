#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "biae/corpus.hpp"
#include "biae/segmenter.hpp"

namespace biae {

// Sentence-embedding contract used to build weak alignment labels offline.
// embed() returns a unit-norm vector (or the zero vector for text with no
// content) of length dimension(), deterministically per (name, text).
class EmbeddingOracle {
 public:
  virtual ~EmbeddingOracle() = default;
  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text) const = 0;
};

// Signed feature hashing of content-word unigrams and bigrams.
class HashingEmbeddingOracle final : public EmbeddingOracle {
 public:
  explicit HashingEmbeddingOracle(int dimension = 512);
  std::string name() const override;
  int dimension() const override { return dimension_; }
  Eigen::VectorXd embed(std::string_view text) const override;

 private:
  int dimension_;
};

// "hashbow" or "hashbow:<dim>".
std::unique_ptr<EmbeddingOracle> make_oracle(std::string_view spec);

struct AlignmentLabels {
  int num_hypotheses = 0;
  std::vector<int> premise_to_hypothesis;               // size n
  std::map<int, std::vector<double>> row_targets;       // hypothesis -> distribution over n premises
};

enum class EntailmentState { Entailment = 0, Contradiction = 1, Neutral = 2 };

inline constexpr int kNumStates = 3;

char to_char(EntailmentState s);  // 'E' / 'C' / 'N'
EntailmentState parse_state(char c);
std::string_view to_string(EntailmentState s);

struct EntailmentLabels {
  int num_hypotheses = 0;
  int num_premises = 0;
  std::map<std::pair<int, int>, EntailmentState> pair_labels;  // (hypothesis, premise)
  std::vector<std::pair<int, int>> labeled_pairs;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Row targets are uniform over the premises aligned to each hypothesis.
AlignmentLabels alignment_from_mapping(int num_hypotheses, std::vector<int> premise_to_hypothesis);

// argmax_i cos(hypothesis_i, premise_j) per premise, ties to the smallest i.
AlignmentLabels align_embeddings(const std::vector<Eigen::VectorXd>& hypothesis_embeddings,
                                 const std::vector<Eigen::VectorXd>& premise_embeddings);

AlignmentLabels align_labels(const std::vector<Hypothesis>& hypotheses, const std::vector<Premise>& premises,
                             const EmbeddingOracle& oracle);

EntailmentLabels entailment_labels(const std::vector<Hypothesis>& hypotheses, const std::vector<Premise>& premises,
                                   const AlignmentLabels& alignment);

double agreement_rate(const AlignmentLabels& predicted, const std::map<int, int>& gold);

// Weak labels for one dialogue instance, as stored in the label cache.
struct InstanceLabels {
  std::string utterance_id;
  std::string oracle;
  AlignmentLabels alignment;
  EntailmentLabels entailment;
};

InstanceLabels build_instance_labels(const DialogueInstance& instance, const Segmenter& segmenter,
                                     const EmbeddingOracle& oracle);

nlohmann::json labels_to_json(const InstanceLabels& labels);
InstanceLabels labels_from_json(const nlohmann::json& record);

// Label cache keyed by (utterance id, oracle name). Concurrent readers,
// serialized writers. Persisted as JSON lines.
class LabelCache {
 public:
  LabelCache() = default;
  LabelCache(const LabelCache&) = delete;
  LabelCache& operator=(const LabelCache&) = delete;
  LabelCache(LabelCache&& other) noexcept;
  LabelCache& operator=(LabelCache&& other) noexcept;

  void put(InstanceLabels labels);
  std::optional<InstanceLabels> find(const std::string& utterance_id, const std::string& oracle) const;
  // Throws NotFoundError naming the instance.
  InstanceLabels get(const std::string& utterance_id, const std::string& oracle) const;
  std::size_t size() const;

  void save(const std::filesystem::path& file) const;
  static LabelCache load(const std::filesystem::path& file);

 private:
  using Key = std::pair<std::string, std::string>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  mutable std::shared_mutex mutex_;
  std::unordered_map<Key, InstanceLabels, KeyHash> entries_;
  std::vector<Key> order_;
};

// Builds labels for every instance, sharding across `workers` threads.
LabelCache build_label_cache(const std::vector<DialogueInstance>& instances, const Segmenter& segmenter,
                             const EmbeddingOracle& oracle, unsigned workers = 0);

// Gold file: JSON lines {utterance_id, premise_to_hypothesis}.
std::map<std::string, std::map<int, int>> load_gold_alignments(const std::filesystem::path& file);

}  // namespace biae
