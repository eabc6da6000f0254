#pragma once

#include <array>
#include <cstdint>

#include "estc/fractal_scheduler.hpp"

namespace estc::detail {

extern const std::array<Projection3, 6> kStage2Projections;
extern const std::array<Projection3, 30> kStage3Projections;
extern const std::array<Projection3, 182> kStage4Projections;

// Order-sensitive checksums of the three tables (see projection_checksum).
inline constexpr std::int64_t kStage2Checksum = -20869;
inline constexpr std::int64_t kStage3Checksum = 177619;
inline constexpr std::int64_t kStage4Checksum = 16612875;

}  // namespace estc::detail
