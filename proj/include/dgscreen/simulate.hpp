#pragma once

// Seeded synthetic session generator. Profiles are configuration, not
// clinical ground truth.

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>

#include "dgscreen/core.hpp"

namespace dgscreen {

enum class Profile { normal, dysgraphic, confused };

std::string_view to_string(Profile p);
std::optional<Profile> parse_profile(std::string_view s);

struct ProfileParams {
  double interval_median = 1.0;  ///< seconds
  double interval_spread = 0.0;  ///< lognormal sigma
  double error_rate = 0.0;
  double interval_trend = 1.0;  ///< multiplicative drift per event

  void validate() const;
};

struct ProfileConfig {
  ProfileParams normal{1.2, 0.25, 0.08, 1.0};
  ProfileParams dysgraphic{1.6, 0.35, 0.30, 1.0};
  ProfileParams confused{0.5, 0.25, 0.25, 0.93};

  std::size_t game1_events = 20;  ///< 21 frames, one judgment per transition
  std::size_t game2_events = 15;

  const ProfileParams& at(Profile p) const;
  void validate() const;
};

nlohmann::json to_json(const ProfileConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
ProfileConfig profile_config_from_json(const nlohmann::json& doc);

/// Interval i is lognormal(median, spread) * trend^i; event times are the
/// cumulative sums at millisecond resolution. Throws ConfigError if n < 3.
SessionRecord simulate_stage(const ProfileParams& profile, std::size_t n_events,
                             std::uint64_t seed, std::string session_id = "sim",
                             GameStage stage = GameStage::game1);

/// One child. A confused child's game1 is drawn from the confused profile and
/// the rest from `label`'s profile.
LabeledSession simulate_session(const ProfileConfig& config, Label label, bool confused,
                                std::uint64_t seed, std::string session_id);

/// Sessions ordered normal, dysgraphic, confused; confused children are
/// labeled normal and carry condition = confused.
std::vector<LabeledSession> simulate_cohort(const std::map<Profile, std::size_t>& counts,
                                            const ProfileConfig& config, std::uint64_t seed,
                                            const std::string& id_prefix = "sim");

/// Stream-separated seed derivation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace dgscreen
