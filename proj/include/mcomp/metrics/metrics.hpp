#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcomp/core/motion.hpp"
#include "mcomp/dataset/segments.hpp"

namespace mcomp {

enum class PositionVariant { root_joint, global_traj, mean_local, mean_global };

std::string to_string(PositionVariant v);
constexpr PositionVariant kPositionVariants[] = {PositionVariant::root_joint, PositionVariant::global_traj,
                                                 PositionVariant::mean_local, PositionVariant::mean_global};

class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Joint positions of every frame plus the root heading used for the local
// coordinate system. Joint 0 is the root.
struct PositionTrack {
    std::vector<JointPositions> global;
    std::vector<double> root_heading;

    static PositionTrack from_motion(const Motion& motion);
    std::size_t size() const { return global.size(); }
    // Positions relative to the root with the root heading removed.
    JointPositions local(std::size_t frame) const;
};

// Average positional error in meters.
double ape(const PositionTrack& gt, const PositionTrack& gen, PositionVariant variant);
double ape(const Motion& gt, const Motion& gen, PositionVariant variant);

// Average variance error: mean over joints of the Euclidean norm of the
// per-coordinate difference of temporal (population) variances. Needs at
// least two frames.
double ave(const PositionTrack& gt, const PositionTrack& gen, PositionVariant variant);
double ave(const Motion& gt, const Motion& gen, PositionVariant variant);

// Mean over joints of the distance between first's last pose and second's
// first pose, after align_second when `align` is set.
double transition_distance(const Motion& first, const Motion& second, bool align);

struct VariantScores {
    double root_joint = 0.0;
    double global_traj = 0.0;
    double mean_local = 0.0;
    double mean_global = 0.0;

    double& operator[](PositionVariant v);
    double operator[](PositionVariant v) const;
    bool operator==(const VariantScores&) const = default;
};

struct MetricReport {
    VariantScores ape;
    VariantScores ave;
    double transition_with_align = 0.0;
    double transition_without_align = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool operator==(const MetricReport&) const = default;
};

nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

// Output of a composition method for one validation pair: the two actions
// as generated (unstitched) and the composed result compared against the
// ground truth. All three live in the coordinate frame of the canonicalized
// ground-truth pair.
struct PairGeneration {
    Motion first;
    Motion second;
    Motion composed;
};

using PairGenerator = std::function<PairGeneration(const ActionPair& pair, std::uint64_t seed)>;

// Ground truth of a pair: both members concatenated and canonicalized.
Motion pair_ground_truth(const ActionPair& pair);

// One sample per pair drawn with derive_seed(seed, k); scores averaged over
// pairs in index order. Throws std::invalid_argument on an empty set.
MetricReport evaluate(const std::vector<ActionPair>& pairs, const PairGenerator& generate, std::uint64_t seed);

} // namespace mcomp
