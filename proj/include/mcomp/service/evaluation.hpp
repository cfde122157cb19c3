#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "mcomp/compose/compose.hpp"
#include "mcomp/metrics/metrics.hpp"

namespace mcomp {

// Generates both members of a validation pair with the model's own strategy
// at ground-truth durations, in the frame of the canonicalized pair.
PairGenerator pair_generator(const TeachModel& model, StitchOptions stitch = {},
                             SampleMode mode = SampleMode::stochastic);

// Hex SHA-1 of the compact JSON dump, hashed as a git blob.
std::string config_hash(const nlohmann::json& config);

} // namespace mcomp
