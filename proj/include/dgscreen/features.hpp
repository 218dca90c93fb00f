#pragma once

// Four-value summary per game2 stage, concatenated across stages.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>

#include "dgscreen/core.hpp"

namespace dgscreen {

struct StageFeatures {
  double total_time = 0.0;  ///< seconds; time of the last response
  std::size_t total_score = 0;
  double first_wrong_time = 0.0;   ///< total_time when no wrong response
  double last_correct_time = 0.0;  ///< 0 when no correct response

  friend bool operator==(const StageFeatures&, const StageFeatures&) = default;
};

inline constexpr std::size_t kFeaturesPerStage = 4;
inline constexpr std::size_t kNumAttributes = kFeaturesPerStage * 3;

struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

StageFeatures extract_stage(const SessionRecord& record);

/// Requires all three game2 stages; throws IncompleteSession otherwise.
FeatureVector extract_session(const std::map<GameStage, SessionRecord>& stages);
inline FeatureVector extract_session(const LabeledSession& s) { return extract_session(s.records); }

/// "game2a.total_time", "game2a.total_score", ... in stage order.
const std::vector<std::string>& attribute_names();

/// CSV feature table: header of attribute names plus an optional trailing
/// "label" column.
struct FeatureTable {
  std::vector<std::string> attributes;
  std::vector<FeatureVector> rows;
  std::vector<std::optional<Label>> labels;  ///< parallel to rows; empty when unlabeled
  bool has_labels = false;
};

FeatureTable make_feature_table(std::span<const LabeledSession> sessions);
void write_csv(std::ostream& out, const FeatureTable& table);
FeatureTable read_csv(std::istream& in);
void write_csv_file(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_csv_file(const std::filesystem::path& path);

}  // namespace dgscreen
