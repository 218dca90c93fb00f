#include "dgscreen/c45.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dgscreen/features.hpp"

namespace dgscreen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Dataset

Dataset Dataset::from_table(const FeatureTable& table) {
  if (!table.has_labels) throw TrainingError("feature table has no label column");
  Dataset d(table.attributes);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    d.add_row(table.rows[r].values, *table.labels[r]);
  }
  return d;
}

void Dataset::add_row(std::span<const double> values, Label label) {
  if (values.size() != arity()) {
    throw TrainingError("row has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(arity()));
  }
  values_.insert(values_.end(), values.begin(), values.end());
  labels_.push_back(label);
}

ClassCounts Dataset::class_counts() const {
  ClassCounts c{};
  for (Label l : labels_) ++c[static_cast<std::size_t>(l)];
  return c;
}

// ---------------------------------------------------------------------------
// Split scoring

double entropy(std::span<const std::size_t> class_counts) {
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (total == 0) throw UndefinedEntropy("entropy of an empty class distribution");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (std::size_t c : class_counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

double binary_entropy(std::size_t a, std::size_t b) {
  const std::array<std::size_t, 2> c{a, b};
  return entropy(c);
}

SplitScore score_counts(const ClassCounts& left, const ClassCounts& right) {
  const std::size_t nl = left[0] + left[1];
  const std::size_t nr = right[0] + right[1];
  const double n = static_cast<double>(nl + nr);
  const ClassCounts parent{left[0] + right[0], left[1] + right[1]};
  const double wl = static_cast<double>(nl) / n;
  const double wr = static_cast<double>(nr) / n;
  SplitScore s;
  s.gain = entropy(parent) - wl * entropy(left) - wr * entropy(right);
  s.split_info = binary_entropy(nl, nr);
  s.ratio = s.split_info > 0.0 ? s.gain / s.split_info : 0.0;
  return s;
}

// n * log2(n), tabulated for small n.
double nlog2n(std::size_t n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(4096, 0.0);
    for (std::size_t i = 2; i < t.size(); ++i) t[i] = static_cast<double>(i) * std::log2(static_cast<double>(i));
    return t;
  }();
  if (n < table.size()) return table[n];
  return static_cast<double>(n) * std::log2(static_cast<double>(n));
}

}  // namespace

SplitScore score_split(const Dataset& data, std::size_t attribute, double threshold) {
  if (attribute >= data.arity()) throw InvalidSplit("attribute index out of range");
  ClassCounts left{}, right{};
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto& side = data.value(r, attribute) <= threshold ? left : right;
    ++side[static_cast<std::size_t>(data.label(r))];
  }
  if (left[0] + left[1] == 0 || right[0] + right[1] == 0) {
    throw InvalidSplit("split leaves one side empty");
  }
  SplitScore s = score_counts(left, right);
  if (s.split_info <= 0.0) throw InvalidSplit("split information is zero");
  return s;
}

double gain_ratio(const Dataset& data, std::size_t attribute, double threshold) {
  return score_split(data, attribute, threshold).ratio;
}

std::optional<Split> best_split(const Dataset& data) {
  thread_local std::vector<std::size_t> rows;
  rows.resize(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return best_split(data, rows);
}

std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.size() < 2) return std::nullopt;
  ClassCounts parent{};
  for (std::size_t r : rows) ++parent[static_cast<std::size_t>(data.label(r))];
  if (parent[0] == 0 || parent[1] == 0) return std::nullopt;

  const std::size_t total = rows.size();
  const double n = static_cast<double>(total);
  // Entropies in the form (N log N - sum c log c) / N.
  const double parent_sum = nlog2n(parent[0]) + nlog2n(parent[1]);
  const double n_log_n = nlog2n(total);

  thread_local std::vector<std::pair<double, Label>> sorted;
  thread_local std::vector<Split> candidates;
  candidates.clear();
  for (std::size_t a = 0; a < data.arity(); ++a) {
    sorted.clear();
    for (std::size_t r : rows) sorted.emplace_back(data.value(r, a), data.label(r));
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      ++left[static_cast<std::size_t>(sorted[i].second)];
      const double lo = sorted[i].first;
      const double hi = sorted[i + 1].first;
      if (!(lo < hi)) continue;

      const std::size_t nl = i + 1;
      const std::size_t nr = total - nl;
      const double sides = nlog2n(nl) + nlog2n(nr);
      const double children_sum = nlog2n(left[0]) + nlog2n(left[1]) +
                                  nlog2n(parent[0] - left[0]) + nlog2n(parent[1] - left[1]);
      const double gain = (children_sum - parent_sum + n_log_n - sides) / n;
      if (gain <= kMinGain) continue;
      double threshold = (lo + hi) / 2.0;
      if (!(threshold < hi)) threshold = lo;  // adjacent doubles
      candidates.push_back(Split{a, threshold, gain, gain / ((n_log_n - sides) / n)});
    }
  }
  if (candidates.empty()) return std::nullopt;
  double top = candidates.front().ratio;
  for (const Split& c : candidates) top = std::max(top, c.ratio);
  // Candidates are in (attribute, threshold) order, so the first near-maximal one wins.
  for (const Split& c : candidates) {
    if (c.ratio >= top - kRatioTieTolerance) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Tree

Label majority(const ClassCounts& counts) {
  return counts[1] > counts[0] ? Label::dysgraphic : Label::normal;
}

DecisionTree DecisionTree::leaf(std::vector<std::string> attributes, Label label,
                                ClassCounts counts) {
  Node n;
  n.is_leaf = true;
  n.label = label;
  n.counts = counts;
  return DecisionTree(std::move(attributes), {n});
}

std::size_t DecisionTree::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf; }));
}

std::size_t DecisionTree::depth() const {
  // Nodes are stored parent-before-child.
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::route(std::span<const double> features) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf) {
    const Node& n = nodes_[i];
    i = features[n.attribute] <= n.threshold ? n.left : n.right;
  }
  return i;
}

namespace {
json serialize_body(const DecisionTree& tree);
}

std::string DecisionTree::fingerprint() const {
  const std::string text = serialize_body(*this).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Growth

namespace {

class Grower {
 public:
  Grower(const Dataset& data, const TrainParams& params, Label default_class)
      : data_(data), params_(params), default_class_(default_class) {}

  std::vector<DecisionTree::Node> grow() {
    std::vector<std::size_t> rows(data_.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    build(rows);
    return std::move(nodes_);
  }

 private:
  // Nodes are laid out in preorder.
  std::size_t build(const std::vector<std::size_t>& rows) {
    const std::size_t at = nodes_.size();
    nodes_.emplace_back();
    ClassCounts counts{};
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data_.label(r))];
    nodes_[at].counts = counts;

    if (rows.empty()) {
      nodes_[at].label = default_class_;
      return at;
    }
    nodes_[at].label = majority(counts);
    if (counts[0] == 0 || counts[1] == 0 || rows.size() < params_.min_split) return at;

    const auto split = best_split(data_, rows);
    if (!split) return at;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (data_.value(r, split->attribute) <= split->threshold ? left : right).push_back(r);
    }
    const std::size_t l = build(left);
    const std::size_t r = build(right);
    auto& n = nodes_[at];
    n.is_leaf = false;
    n.attribute = split->attribute;
    n.threshold = split->threshold;
    n.left = l;
    n.right = r;
    return at;
  }

  const Dataset& data_;
  const TrainParams& params_;
  Label default_class_;
  std::vector<DecisionTree::Node> nodes_;
};

void check_dataset(const Dataset& data, const TrainParams& params) {
  if (params.min_split < 2) throw TrainingError("min_split must be at least 2");
  if (!(params.confidence_factor > 0.0 && params.confidence_factor < 1.0)) {
    throw TrainingError("confidence factor must lie in (0, 1)");
  }
  if (data.labels().size() != data.rows()) throw TrainingError("label count mismatch");
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (double v : data.row(r)) {
      if (!std::isfinite(v)) throw TrainingError("non-finite value in row " + std::to_string(r));
    }
  }
}

}  // namespace

DecisionTree train(const Dataset& data, const TrainParams& params) {
  check_dataset(data, params);
  const Label def = params.default_class.value_or(majority(data.class_counts()));
  return DecisionTree(data.attributes(), Grower(data, params, def).grow());
}

// ---------------------------------------------------------------------------
// Pruning

double pessimistic_errors(std::size_t n, std::size_t errors, double confidence_factor) {
  if (n == 0) return 0.0;
  const boost::math::normal_distribution<double> unit;
  const double z = boost::math::quantile(unit, 1.0 - confidence_factor);
  const double nn = static_cast<double>(n);
  const double f = static_cast<double>(errors) / nn;
  const double z2 = z * z;
  const double upper =
      (f + z2 / (2.0 * nn) + z * std::sqrt(f * (1.0 - f) / nn + z2 / (4.0 * nn * nn))) /
      (1.0 + z2 / nn);
  return nn * upper;
}

namespace {

// Per-node class counts of `data` routed through `tree`.
std::vector<ClassCounts> route_counts(const DecisionTree& tree, const Dataset& data) {
  std::vector<ClassCounts> counts(tree.nodes().size(), ClassCounts{});
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto features = data.row(r);
    const auto lab = static_cast<std::size_t>(data.label(r));
    std::size_t i = 0;
    for (;;) {
      ++counts[i][lab];
      const auto& n = tree.node(i);
      if (n.is_leaf) break;
      i = features[n.attribute] <= n.threshold ? n.left : n.right;
    }
  }
  return counts;
}

double leaf_estimate(const ClassCounts& c, Label label, double cf) {
  const std::size_t n = c[0] + c[1];
  return pessimistic_errors(n, n - c[static_cast<std::size_t>(label)], cf);
}

class Pruner {
 public:
  Pruner(const DecisionTree& tree, std::vector<ClassCounts> counts, double cf)
      : tree_(tree), counts_(std::move(counts)), cf_(cf) {}

  std::vector<DecisionTree::Node> run() {
    visit(0);
    return std::move(out_);
  }

 private:
  struct Visited {
    std::size_t index;
    double estimate;
  };

  // Copies the (possibly collapsed) subtree at `src` into out_ in preorder.
  Visited visit(std::size_t src) {
    const auto& n = tree_.node(src);
    const ClassCounts& c = counts_[src];
    const std::size_t at = out_.size();
    out_.push_back(n);
    out_[at].counts = c;
    if (n.is_leaf) {
      if (c[0] + c[1] > 0) out_[at].label = majority(c);
      return {at, leaf_estimate(c, out_[at].label, cf_)};
    }
    const Visited l = visit(n.left);
    const Visited r = visit(n.right);
    const double subtree = l.estimate + r.estimate;

    const Label as_leaf = c[0] + c[1] > 0 ? majority(c) : n.label;
    const double collapsed = leaf_estimate(c, as_leaf, cf_);
    if (collapsed <= subtree) {
      out_.resize(at + 1);  // the children's subtrees are the tail
      DecisionTree::Node leaf;
      leaf.label = as_leaf;
      leaf.counts = c;
      out_[at] = leaf;
      return {at, collapsed};
    }
    out_[at].left = l.index;
    out_[at].right = r.index;
    out_[at].label = as_leaf;
    return {at, subtree};
  }

  const DecisionTree& tree_;
  std::vector<ClassCounts> counts_;
  double cf_;
  std::vector<DecisionTree::Node> out_;
};

}  // namespace

double total_pessimistic_errors(const DecisionTree& tree, const Dataset& data,
                                double confidence_factor) {
  const auto counts = route_counts(tree, data);
  double total = 0.0;
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const auto& n = tree.node(i);
    if (n.is_leaf) total += leaf_estimate(counts[i], n.label, confidence_factor);
  }
  return total;
}

DecisionTree prune(const DecisionTree& tree, const Dataset& training_data,
                   double confidence_factor) {
  if (tree.nodes().empty()) return tree;
  Pruner p(tree, route_counts(tree, training_data), confidence_factor);
  return DecisionTree(tree.attributes(), p.run());
}

DecisionTree fit(const Dataset& data, const TrainParams& params) {
  return prune(train(data, params), data, params.confidence_factor);
}

Label predict(const DecisionTree& tree, std::span<const double> features) {
  if (features.size() != tree.arity()) {
    throw PredictionError("feature vector has " + std::to_string(features.size()) +
                          " values, model expects " + std::to_string(tree.arity()));
  }
  return tree.node(tree.route(features)).label;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json node_to_json(const DecisionTree& tree, std::size_t i) {
  const auto& n = tree.node(i);
  if (n.is_leaf) {
    return {{"class", std::string(to_string(n.label))}, {"counts", n.counts}};
  }
  return {{"attr", n.attribute},
          {"threshold", n.threshold},
          {"left", node_to_json(tree, n.left)},
          {"right", node_to_json(tree, n.right)}};
}

constexpr std::size_t kMaxDepth = 4096;

std::size_t node_from_json(const json& j, std::size_t arity, std::size_t depth,
                           std::vector<DecisionTree::Node>& out) {
  if (depth > kMaxDepth) throw DeserializationError("tree too deep");
  if (!j.is_object()) throw DeserializationError("node must be an object");
  const std::size_t at = out.size();
  out.emplace_back();

  if (j.contains("class")) {
    for (const auto& [k, _] : j.items()) {
      if (k != "class" && k != "counts") throw DeserializationError("unknown leaf field " + k);
    }
    std::optional<Label> l;
    if (j["class"].is_string()) l = parse_label(j["class"].get<std::string>());
    if (!l) throw DeserializationError("bad leaf class");
    const json& c = j.value("counts", json());
    if (!c.is_array() || c.size() != kNumLabels ||
        !std::all_of(c.begin(), c.end(), [](const json& x) { return x.is_number_unsigned(); })) {
      throw DeserializationError("leaf counts must be two non-negative integers");
    }
    out[at].is_leaf = true;
    out[at].label = *l;
    out[at].counts = {c[0].get<std::size_t>(), c[1].get<std::size_t>()};
    return at;
  }

  for (const auto& [k, _] : j.items()) {
    if (k != "attr" && k != "threshold" && k != "left" && k != "right") {
      throw DeserializationError("unknown node field " + k);
    }
  }
  if (!j.contains("attr") || !j["attr"].is_number_unsigned() ||
      j["attr"].get<std::size_t>() >= arity) {
    throw DeserializationError("bad attr index");
  }
  if (!j.contains("threshold") || !j["threshold"].is_number() ||
      !std::isfinite(j["threshold"].get<double>())) {
    throw DeserializationError("bad threshold");
  }
  if (!j.contains("left") || !j.contains("right")) {
    throw DeserializationError("internal node needs left and right");
  }
  const std::size_t attr = j["attr"].get<std::size_t>();
  const double thr = j["threshold"].get<double>();
  const std::size_t l = node_from_json(j["left"], arity, depth + 1, out);
  const std::size_t r = node_from_json(j["right"], arity, depth + 1, out);
  auto& n = out[at];
  n.is_leaf = false;
  n.attribute = attr;
  n.threshold = thr;
  n.left = l;
  n.right = r;
  n.counts = {out[l].counts[0] + out[r].counts[0], out[l].counts[1] + out[r].counts[1]};
  n.label = majority(n.counts);
  return at;
}

json serialize_body(const DecisionTree& tree) {
  return {{"format", "c45-tree"},
          {"version", kModelFormatVersion},
          {"attributes", tree.attributes()},
          {"root", node_to_json(tree, 0)}};
}

}  // namespace

json serialize(const DecisionTree& tree) {
  json doc = serialize_body(tree);
  doc["model_version"] = tree.fingerprint();
  return doc;
}

DecisionTree deserialize(const json& doc) {
  if (!doc.is_object()) throw DeserializationError("model document must be an object");
  if (doc.value("format", std::string()) != "c45-tree") {
    throw DeserializationError("not a c45-tree document");
  }
  const json& v = doc.value("version", json());
  if (!v.is_number_integer() || v.get<int>() != kModelFormatVersion) {
    throw DeserializationError("unsupported model version " + v.dump());
  }
  const json& attrs = doc.value("attributes", json());
  if (!attrs.is_array() ||
      !std::all_of(attrs.begin(), attrs.end(), [](const json& a) { return a.is_string(); })) {
    throw DeserializationError("attributes must be an array of strings");
  }
  if (!doc.contains("root")) throw DeserializationError("missing root");
  std::vector<DecisionTree::Node> nodes;
  node_from_json(doc["root"], attrs.size(), 0, nodes);
  return DecisionTree(attrs.get<std::vector<std::string>>(), std::move(nodes));
}

}  // namespace dgscreen
