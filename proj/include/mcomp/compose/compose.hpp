#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcomp/model/teach_model.hpp"

namespace mcomp {

enum class StitchMode { overwrite, insert };

std::string to_string(StitchMode m);
// Throws std::invalid_argument for an unknown name.
StitchMode stitch_mode_from_string(const std::string& name);

struct StitchOptions {
    int slerp_frames = 8;
    StitchMode mode = StitchMode::overwrite;
};

// Rotates `second` about the vertical axis and shifts it horizontally so its
// first frame has the root xy and heading of `first`'s last frame. Root z is
// left untouched.
Motion align_second(const Motion& first, const Motion& second);

// overwrite: second's first n frames are replaced by an interpolation from
// first's last pose towards second's frame n (its last frame when n equals
// its length). insert: n new frames between the two motions. Joint rotations
// are slerped, the root translation is interpolated linearly.
// Throws std::invalid_argument when n < 0, when n exceeds second's length in
// overwrite mode, or when the motions do not share fps and skeleton.
Motion slerp_stitch(const Motion& first, const Motion& second, int n, StitchMode mode);

struct CompositionRequest {
    std::vector<Prompt> prompts;
    Strategy strategy = Strategy::teach;
    StitchOptions stitch;
    SampleMode sample = SampleMode::deterministic;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument for an empty prompt list, negative slerp
    // frames or a joint request without exactly two prompts.
    void validate() const;
};

struct FrameSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const FrameSpan&) const = default;
};

struct Composition {
    Motion motion;
    // One span per prompt. Frames inserted by the stitch belong to the
    // following prompt.
    std::vector<FrameSpan> spans;
};

class StrategyMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// `model` must have been trained with request.strategy. For the independent
// strategy it is the single-action model.
Composition compose(const CompositionRequest& request, const TeachModel& model);

// Aligns each motion to the stitched output so far and stitches it on.
Composition stitch_sequence(const std::vector<Motion>& motions, const StitchOptions& stitch);

} // namespace mcomp
