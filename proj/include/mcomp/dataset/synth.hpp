#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcomp/core/seed.hpp"
#include "mcomp/dataset/segments.hpp"

namespace mcomp {

class UnknownAction : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Names of the built-in parametric action generators.
std::span<const std::string_view> synth_vocabulary();

// The phrasing templates used as segment text for an action.
std::span<const std::string_view> synth_phrasings(std::string_view action_name);

struct ActionRequest {
    std::string action_name;
    double duration_s = 0.0;
};

struct SynthOptions {
    double fps = 30.0;
    // Seeded overlap between consecutive segments, seconds.
    double min_overlap_s = 0.2;
    double max_overlap_s = 0.6;
    // Probability that a boundary is labeled with a "transition" segment
    // bridging two disjoint action segments instead of an overlap.
    double transition_probability = 0.0;
};

// Generates a continuous motion performing the actions in order, with one
// labeled segment per action. Deterministic given (actions, seed, options).
// Throws UnknownAction for a name outside synth_vocabulary() and
// std::invalid_argument for a non-positive duration.
SequenceRecord synth_generate(const std::vector<ActionRequest>& actions, std::uint64_t seed,
                              const SynthOptions& options = {});

struct CorpusSpec {
    int min_actions = 2;
    int max_actions = 3;
    double min_duration_s = 1.0;
    double max_duration_s = 2.0;
    SynthOptions synth{.transition_probability = 0.3};
};

// Random action sequences; record i is generated from a seed derived from
// (seed, i), so records can be produced independently.
std::vector<ActionRequest> random_action_sequence(const CorpusSpec& spec, std::uint64_t seed);
SequenceRecord synth_record(const CorpusSpec& spec, std::uint64_t seed, std::size_t index);

} // namespace mcomp
