#include "dgscreen/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace dgscreen {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Segment make_segment(const SessionRecord& r, SegmentPosition pos, std::size_t begin,
                     std::size_t end) {
  Segment s;
  s.source_id = r.session_id;
  s.stage = r.game_stage;
  s.position = pos;
  s.events.assign(r.events.begin() + static_cast<std::ptrdiff_t>(begin),
                  r.events.begin() + static_cast<std::ptrdiff_t>(end));
  if (begin > 0) s.preceding_interval = r.events[begin].t - r.events[begin - 1].t;
  return s;
}

}  // namespace

Thirds split_thirds(const SessionRecord& record) {
  const std::size_t n = record.events.size();
  if (n < 3) {
    throw InsufficientData("record too short to split into thirds: " + std::to_string(n) +
                           " events");
  }
  // std::lround rounds half away from zero.
  const auto b1 = static_cast<std::size_t>(std::lround(static_cast<double>(n) / 3.0));
  const auto b2 = static_cast<std::size_t>(std::lround(2.0 * static_cast<double>(n) / 3.0));
  return {make_segment(record, SegmentPosition::first, 0, b1),
          make_segment(record, SegmentPosition::middle, b1, b2),
          make_segment(record, SegmentPosition::last, b2, n)};
}

std::optional<SessionRecord> stitch(const Segment& first, const Segment& middle,
                                    const Segment& last) {
  if (first.position != SegmentPosition::first || middle.position != SegmentPosition::middle ||
      last.position != SegmentPosition::last) {
    throw CannotAugment("stitch expects segments in first, middle, last positions");
  }
  if (!middle.preceding_interval || !last.preceding_interval) {
    throw CannotAugment("middle and last segments need a preceding interval");
  }
  if (first.events.empty() || middle.events.empty() || last.events.empty()) {
    throw CannotAugment("segments must be non-empty");
  }

  SessionRecord out{first.source_id, first.stage, first.events};
  out.events.reserve(first.events.size() + middle.events.size() + last.events.size());
  for (const Segment* seg : {&middle, &last}) {
    const Millis start = out.events.back().t + *seg->preceding_interval;
    const Millis shift = start - seg->events.front().t;
    for (const auto& e : seg->events) out.events.push_back({e.t + shift, e.correct});
  }
  if (!is_valid(out)) return std::nullopt;
  return out;
}

AugmentationResult augment_with_trace(std::span<const SessionRecord> minority,
                                      std::size_t target_count, std::uint64_t seed) {
  if (minority.size() < 3) {
    throw CannotAugment("augmentation needs at least 3 minority records, got " +
                        std::to_string(minority.size()));
  }
  for (const auto& r : minority) {
    if (r.events.size() < 3) {
      throw CannotAugment("record " + r.session_id + " has fewer than 3 events");
    }
  }
  if (target_count < minority.size()) {
    throw CannotAugment("target count is below the minority size");
  }

  const std::size_t needed = target_count - minority.size();
  const std::size_t max_attempts = kAugmentationAttemptFactor * needed;

  AugmentationResult result;
  result.records.reserve(needed);
  std::mt19937_64 rng = make_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick_source(0, 2);

  std::vector<std::size_t> pool;
  std::size_t generation = 0;
  auto refill = [&] {
    pool.resize(minority.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::shuffle(pool.begin(), pool.end(), rng);
  };
  refill();

  std::size_t attempts = 0;
  while (result.records.size() < needed) {
    if (attempts++ >= max_attempts) {
      throw AugmentationStalled("augmentation produced " + std::to_string(result.records.size()) +
                                " of " + std::to_string(needed) + " records in " +
                                std::to_string(max_attempts) + " attempts");
    }
    if (pool.size() < 3) {
      refill();
      ++generation;
    }
    AugmentationDraw draw;
    draw.generation = generation;
    for (auto& s : draw.sources) {
      s = pool.back();
      pool.pop_back();
    }

    std::array<Thirds, 3> parts;
    for (std::size_t i = 0; i < 3; ++i) parts[i] = split_thirds(minority[draw.sources[i]]);
    for (auto& slot : draw.slot_source) slot = pick_source(rng);

    auto rec = stitch(parts[draw.slot_source[0]][0], parts[draw.slot_source[1]][1],
                      parts[draw.slot_source[2]][2]);
    draw.valid = rec.has_value();
    if (rec) {
      rec->session_id = minority[draw.sources[draw.slot_source[0]]].session_id + "-aug" +
                        std::to_string(result.records.size() + 1);
      rec->game_stage = minority[draw.sources[0]].game_stage;
      result.records.push_back(std::move(*rec));
    }
    result.draws.push_back(draw);
  }
  return result;
}

std::vector<SessionRecord> augment_to_balance(std::span<const SessionRecord> minority,
                                              std::size_t target_count, std::uint64_t seed) {
  return augment_with_trace(minority, target_count, seed).records;
}

std::vector<LabeledSession> augment_sessions(std::span<const LabeledSession> minority,
                                             std::size_t target_count, std::uint64_t seed) {
  std::vector<std::vector<SessionRecord>> per_stage;
  for (GameStage stage : kGame2Stages) {
    std::vector<SessionRecord> recs;
    recs.reserve(minority.size());
    for (const auto& s : minority) {
      const SessionRecord* r = s.find(stage);
      if (!r) {
        throw IncompleteSession("session " + s.session_id + " lacks stage " +
                                std::string(to_string(stage)));
      }
      recs.push_back(*r);
    }
    const auto stream = static_cast<std::uint64_t>(stage);
    per_stage.push_back(augment_to_balance(recs, target_count, seed ^ (stream * 0x9E3779B97F4A7C15ULL)));
  }

  std::vector<LabeledSession> out;
  const std::size_t n = per_stage.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSession s;
    s.session_id = per_stage.front()[i].session_id;
    s.actual_label = minority.front().actual_label;
    for (auto& stage_recs : per_stage) {
      SessionRecord r = std::move(stage_recs[i]);
      r.session_id = s.session_id;
      s.records.emplace(r.game_stage, std::move(r));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dgscreen
