#include "dgscreen/simulate.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <random>

namespace dgscreen {

using nlohmann::json;

std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::normal:
      return "normal";
    case Profile::dysgraphic:
      return "dysgraphic";
    case Profile::confused:
      return "confused";
  }
  return "normal";
}

std::optional<Profile> parse_profile(std::string_view s) {
  if (s == "normal") return Profile::normal;
  if (s == "dysgraphic") return Profile::dysgraphic;
  if (s == "confused") return Profile::confused;
  return std::nullopt;
}

void ProfileParams::validate() const {
  if (!(interval_median > 0.0) || !std::isfinite(interval_median)) {
    throw ConfigError("interval_median must be > 0");
  }
  if (!(interval_spread >= 0.0) || !std::isfinite(interval_spread)) {
    throw ConfigError("interval_spread must be >= 0");
  }
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) throw ConfigError("error_rate must be in [0, 1]");
  if (!(interval_trend > 0.0) || !std::isfinite(interval_trend)) {
    throw ConfigError("interval_trend must be > 0");
  }
}

const ProfileParams& ProfileConfig::at(Profile p) const {
  switch (p) {
    case Profile::dysgraphic:
      return dysgraphic;
    case Profile::confused:
      return confused;
    case Profile::normal:
      break;
  }
  return normal;
}

void ProfileConfig::validate() const {
  normal.validate();
  dysgraphic.validate();
  confused.validate();
  if (game1_events < 3 || game2_events < 3) throw ConfigError("stages need at least 3 events");
}

namespace {

json params_json(const ProfileParams& p) {
  return {{"interval_median", p.interval_median},
          {"interval_spread", p.interval_spread},
          {"error_rate", p.error_rate},
          {"interval_trend", p.interval_trend}};
}

void read_params(const json& j, ProfileParams& p, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ConfigError(where + "." + k + " must be a number");
    const double d = v.get<double>();
    if (k == "interval_median") {
      p.interval_median = d;
    } else if (k == "interval_spread") {
      p.interval_spread = d;
    } else if (k == "error_rate") {
      p.error_rate = d;
    } else if (k == "interval_trend") {
      p.interval_trend = d;
    } else {
      throw ConfigError("unknown key " + where + "." + k);
    }
  }
}

}  // namespace

json to_json(const ProfileConfig& c) {
  return {{"normal", params_json(c.normal)},
          {"dysgraphic", params_json(c.dysgraphic)},
          {"confused", params_json(c.confused)},
          {"game1_events", c.game1_events},
          {"game2_events", c.game2_events}};
}

ProfileConfig profile_config_from_json(const json& doc) {
  ProfileConfig c;
  if (!doc.is_object()) throw ConfigError("simulator config must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (k == "normal") {
      read_params(v, c.normal, k);
    } else if (k == "dysgraphic") {
      read_params(v, c.dysgraphic, k);
    } else if (k == "confused") {
      read_params(v, c.confused, k);
    } else if (k == "game1_events" || k == "game2_events") {
      if (!v.is_number_unsigned()) throw ConfigError(k + " must be a non-negative integer");
      (k == "game1_events" ? c.game1_events : c.game2_events) = v.get<std::size_t>();
    } else {
      throw ConfigError("unknown simulator config key " + k);
    }
  }
  c.validate();
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

SessionRecord simulate_stage(const ProfileParams& profile, std::size_t n_events,
                             std::uint64_t seed, std::string session_id, GameStage stage) {
  if (n_events < 3) throw ConfigError("simulated stages need at least 3 events");
  profile.validate();

  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> interval(std::log(profile.interval_median),
                                               profile.interval_spread > 0.0 ? profile.interval_spread : 1.0);
  std::bernoulli_distribution correct(1.0 - profile.error_rate);

  SessionRecord rec{std::move(session_id), stage, {}};
  rec.events.reserve(n_events);
  double elapsed = 0.0;
  double drift = 1.0;
  for (std::size_t i = 0; i < n_events; ++i) {
    const double base = profile.interval_spread > 0.0 ? interval(rng) : profile.interval_median;
    elapsed += base * drift;
    drift *= profile.interval_trend;
    Millis t = from_seconds(elapsed);
    if (!rec.events.empty() && t <= rec.events.back().t) t = rec.events.back().t + Millis{1};
    rec.events.push_back({t, correct(rng)});
  }
  return rec;
}

LabeledSession simulate_session(const ProfileConfig& config, Label label, bool confused,
                                std::uint64_t seed, std::string session_id) {
  const ProfileParams& own = label == Label::dysgraphic ? config.dysgraphic : config.normal;
  LabeledSession s;
  s.session_id = std::move(session_id);
  s.actual_label = label;
  s.condition = confused ? Condition::confused : Condition::suitable;
  s.records.emplace(GameStage::game1,
                    simulate_stage(confused ? config.confused : own, config.game1_events,
                                   derive_seed(seed, 0), s.session_id, GameStage::game1));
  for (GameStage stage : kGame2Stages) {
    s.records.emplace(stage, simulate_stage(own, config.game2_events,
                                            derive_seed(seed, static_cast<std::uint64_t>(stage)),
                                            s.session_id, stage));
  }
  return s;
}

std::vector<LabeledSession> simulate_cohort(const std::map<Profile, std::size_t>& counts,
                                            const ProfileConfig& config, std::uint64_t seed,
                                            const std::string& id_prefix) {
  config.validate();
  std::vector<LabeledSession> out;
  for (Profile p : {Profile::normal, Profile::dysgraphic, Profile::confused}) {
    auto it = counts.find(p);
    const std::size_t n = it == counts.end() ? 0 : it->second;
    for (std::size_t i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "-%03zu", i + 1);
      const Label label = p == Profile::dysgraphic ? Label::dysgraphic : Label::normal;
      out.push_back(simulate_session(config, label, p == Profile::confused,
                                     derive_seed(seed, static_cast<std::uint64_t>(p) + 1, i),
                                     id_prefix + "-" + std::string(to_string(p)) + id));
    }
  }
  return out;
}

}  // namespace dgscreen
