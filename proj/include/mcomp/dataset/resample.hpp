#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "mcomp/core/motion.hpp"

namespace mcomp {

enum class ClipKind { pair, single };

struct FilterConfig {
    double target_fps = 30.0;
    double min_duration_s = 0.3;
    double max_pair_duration_s = 25.0;
    double max_single_duration_s = 5.0;
};

struct Rejection {
    std::string reason;
};

using FilterOutcome = std::variant<Motion, Rejection>;

// Subsamples to the target rate: an integer stride when the source rate is
// an integer multiple of the target, nearest-frame sampling otherwise.
// Throws std::invalid_argument when the source rate is below the target.
Motion resample(const Motion& motion, double target_fps);

// Pair candidates outside [min, max_pair] seconds and singles shorter than
// min are rejected; singles longer than max_single are cropped to a
// uniformly random window drawn from crop_seed.
FilterOutcome filter_and_resample(const Motion& motion, ClipKind kind, std::uint64_t crop_seed,
                                  const FilterConfig& config = {});

inline bool is_rejected(const FilterOutcome& o) { return std::holds_alternative<Rejection>(o); }

} // namespace mcomp
