#pragma once

// C4.5 decision trees over continuous attributes: gain-ratio binary splits,
// recursive growth, pessimistic subtree-replacement pruning.

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgscreen/core.hpp"

namespace dgscreen {

struct FeatureTable;

using ClassCounts = std::array<std::size_t, kNumLabels>;

/// Row-major table of continuous attributes with a label per row.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> attributes) : attributes_(std::move(attributes)) {}
  /// Requires every row to be labeled.
  static Dataset from_table(const FeatureTable& table);

  /// Throws TrainingError on arity mismatch.
  void add_row(std::span<const double> values, Label label);

  std::size_t arity() const noexcept { return attributes_.size(); }
  std::size_t rows() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  double value(std::size_t row, std::size_t attr) const { return values_[row * arity() + attr]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * arity(), arity()};
  }
  Label label(std::size_t r) const { return labels_[r]; }
  const std::vector<std::string>& attributes() const noexcept { return attributes_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  /// In-place overwrite, used by enumeration-heavy callers.
  void set(std::size_t row, std::size_t attr, double v) { values_[row * arity() + attr] = v; }
  void set_label(std::size_t row, Label l) { labels_[row] = l; }

  ClassCounts class_counts() const;

 private:
  std::vector<std::string> attributes_;
  std::vector<double> values_;
  std::vector<Label> labels_;
};

/// Shannon entropy in bits over non-zero classes. Throws UndefinedEntropy
/// when all counts are zero.
double entropy(std::span<const std::size_t> class_counts);

struct SplitScore {
  double gain = 0.0;
  double split_info = 0.0;
  double ratio = 0.0;
};

/// Left side takes value <= threshold. Throws InvalidSplit for an empty side.
SplitScore score_split(const Dataset& data, std::size_t attribute, double threshold);
double gain_ratio(const Dataset& data, std::size_t attribute, double threshold);

struct Split {
  std::size_t attribute = 0;
  double threshold = 0.0;
  double gain = 0.0;
  double ratio = 0.0;
};

/// Splits need information gain above this to be considered.
inline constexpr double kMinGain = 1e-12;
/// Candidates within this of the best gain ratio tie; the lowest attribute,
/// then the lowest threshold, wins.
inline constexpr double kRatioTieTolerance = 1e-9;

/// Midpoints between consecutive distinct values; highest gain ratio among
/// candidates with positive gain. nullopt for pure or unsplittable data.
std::optional<Split> best_split(const Dataset& data);
std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows);

struct TrainParams {
  std::size_t min_split = 2;
  double confidence_factor = 0.25;
  /// Leaf class for an empty dataset; majority of the training set if unset.
  std::optional<Label> default_class;
};

class DecisionTree {
 public:
  struct Node {
    bool is_leaf = true;
    Label label = Label::normal;
    ClassCounts counts{};
    std::size_t attribute = 0;
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;

    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  DecisionTree(std::vector<std::string> attributes, std::vector<Node> nodes)
      : attributes_(std::move(attributes)), nodes_(std::move(nodes)) {}

  static DecisionTree leaf(std::vector<std::string> attributes, Label label, ClassCounts counts);

  const Node& root() const { return nodes_.front(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<std::string>& attributes() const noexcept { return attributes_; }
  std::size_t arity() const noexcept { return attributes_.size(); }

  std::size_t num_leaves() const;
  std::size_t depth() const;
  /// Index of the leaf reached by `features`.
  std::size_t route(std::span<const double> features) const;

  /// Stable content hash of the serialized tree (hex).
  std::string fingerprint() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<std::string> attributes_;
  std::vector<Node> nodes_;  ///< nodes_[0] is the root
};

/// Ties between class counts resolve to the lower label (normal).
Label majority(const ClassCounts& counts);

/// Unpruned growth.
DecisionTree train(const Dataset& data, const TrainParams& params = {});

/// Upper Wilson score bound on the error rate, scaled to n, with
/// z = Phi^-1(1 - confidence_factor). Zero for n = 0.
double pessimistic_errors(std::size_t n, std::size_t errors, double confidence_factor);

/// Sum of pessimistic_errors over the leaves, counts from `data`.
double total_pessimistic_errors(const DecisionTree& tree, const Dataset& data,
                                double confidence_factor);

/// Bottom-up subtree replacement. Class counts are re-derived by routing
/// `training_data` through the tree.
DecisionTree prune(const DecisionTree& tree, const Dataset& training_data,
                   double confidence_factor);

/// train + prune.
DecisionTree fit(const Dataset& data, const TrainParams& params = {});

/// Throws PredictionError on arity mismatch.
Label predict(const DecisionTree& tree, std::span<const double> features);

inline constexpr int kModelFormatVersion = 1;

nlohmann::json serialize(const DecisionTree& tree);
/// Throws DeserializationError on unknown version or malformed input.
DecisionTree deserialize(const nlohmann::json& doc);

}  // namespace dgscreen
