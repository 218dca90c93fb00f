#pragma once

// Minority-class augmentation by recombining thirds of three records.

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "dgscreen/core.hpp"

namespace dgscreen {

enum class SegmentPosition { first = 0, middle = 1, last = 2 };

struct Segment {
  std::string source_id;
  GameStage stage = GameStage::game1;
  SegmentPosition position = SegmentPosition::first;
  std::vector<ResponseEvent> events;
  /// Source interval just before this segment; empty for the first third.
  std::optional<Millis> preceding_interval;
};

using Thirds = std::array<Segment, 3>;

/// Cuts at round(n/3) and round(2n/3). Throws InsufficientData if n < 3.
Thirds split_thirds(const SessionRecord& record);

/// Rigidly shifts the middle and last segments so each starts one
/// preceding_interval after the assembled prefix. Returns nullopt when the
/// result is not strictly ascending.
std::optional<SessionRecord> stitch(const Segment& first, const Segment& middle,
                                    const Segment& last);

/// One attempt of the augmentation loop, kept for auditing pool discipline.
struct AugmentationDraw {
  std::size_t generation = 0;
  std::array<std::size_t, 3> sources{};  ///< indices into the minority list
  std::array<std::size_t, 3> slot_source{};  ///< which of `sources` fed each slot
  bool valid = false;
};

struct AugmentationResult {
  std::vector<SessionRecord> records;
  std::vector<AugmentationDraw> draws;
};

/// Attempts allowed per needed record before giving up.
inline constexpr std::size_t kAugmentationAttemptFactor = 100;

AugmentationResult augment_with_trace(std::span<const SessionRecord> minority,
                                      std::size_t target_count, std::uint64_t seed);

/// Returns target_count - minority.size() new records, deterministic in seed.
std::vector<SessionRecord> augment_to_balance(std::span<const SessionRecord> minority,
                                              std::size_t target_count, std::uint64_t seed);

/// Session-level balancing: each game2 stage is augmented independently
/// (seed derived per stage) and the i-th outputs are zipped into session i.
std::vector<LabeledSession> augment_sessions(std::span<const LabeledSession> minority,
                                             std::size_t target_count, std::uint64_t seed);

}  // namespace dgscreen
