#include "mcomp/metrics/metrics.hpp"

#include "mcomp/compose/compose.hpp"
#include "mcomp/core/seed.hpp"

namespace mcomp {

std::string to_string(PositionVariant v)
{
    switch (v) {
    case PositionVariant::root_joint:
        return "root_joint";
    case PositionVariant::global_traj:
        return "global_traj";
    case PositionVariant::mean_local:
        return "mean_local";
    case PositionVariant::mean_global:
        return "mean_global";
    }
    return "unknown";
}

PositionTrack PositionTrack::from_motion(const Motion& motion)
{
    PositionTrack t;
    t.global = motion_positions(motion);
    for (const Pose& p : motion.frames()) {
        t.root_heading.push_back(pose_heading(p));
    }
    return t;
}

JointPositions PositionTrack::local(std::size_t frame) const
{
    const JointPositions& g = global.at(frame);
    const Mat3 r = yaw_matrix(-root_heading.at(frame));
    JointPositions out(g.rows(), 3);
    for (Eigen::Index j = 0; j < g.rows(); ++j) {
        out.row(j) = (r * (g.row(j) - g.row(0)).transpose()).transpose();
    }
    return out;
}

namespace {

void check_lengths(const PositionTrack& gt, const PositionTrack& gen)
{
    if (gt.size() != gen.size()) {
        throw LengthMismatch("motions have " + std::to_string(gt.size()) + " and " + std::to_string(gen.size()) +
                             " frames");
    }
    if (gt.size() == 0) {
        throw LengthMismatch("motions are empty");
    }
    if (gt.global[0].rows() != gen.global[0].rows()) {
        throw ShapeMismatch("motions have different joint counts");
    }
}

// The positions a variant compares for one frame: one row per point.
Eigen::MatrixXd points(const PositionTrack& t, std::size_t f, PositionVariant v)
{
    const JointPositions& g = t.global[f];
    const Eigen::Index joints = g.rows();
    switch (v) {
    case PositionVariant::root_joint:
        return g.topRows(1);
    case PositionVariant::global_traj:
        return g.block(0, 0, 1, 2);
    case PositionVariant::mean_global:
        return g.bottomRows(joints - 1);
    case PositionVariant::mean_local:
        return t.local(f).bottomRows(joints - 1);
    }
    return {};
}

} // namespace

double ape(const PositionTrack& gt, const PositionTrack& gen, PositionVariant variant)
{
    check_lengths(gt, gen);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < gt.size(); ++f) {
        const Eigen::MatrixXd d = points(gt, f, variant) - points(gen, f, variant);
        for (Eigen::Index r = 0; r < d.rows(); ++r) {
            sum += d.row(r).norm();
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

double ape(const Motion& gt, const Motion& gen, PositionVariant variant)
{
    return ape(PositionTrack::from_motion(gt), PositionTrack::from_motion(gen), variant);
}

namespace {

// Per-point, per-coordinate population variance over frames.
Eigen::MatrixXd temporal_variance(const PositionTrack& t, PositionVariant v)
{
    const auto n = static_cast<double>(t.size());
    Eigen::MatrixXd mean = points(t, 0, v);
    mean.setZero();
    Eigen::MatrixXd sq = mean;
    for (std::size_t f = 0; f < t.size(); ++f) {
        const Eigen::MatrixXd p = points(t, f, v);
        mean += p;
        sq += p.cwiseProduct(p);
    }
    mean /= n;
    sq /= n;
    return (sq - mean.cwiseProduct(mean)).cwiseMax(0.0);
}

} // namespace

double ave(const PositionTrack& gt, const PositionTrack& gen, PositionVariant variant)
{
    check_lengths(gt, gen);
    if (gt.size() < 2) {
        throw LengthMismatch("variance needs at least 2 frames");
    }
    const Eigen::MatrixXd d = temporal_variance(gt, variant) - temporal_variance(gen, variant);
    return d.rowwise().norm().mean();
}

double ave(const Motion& gt, const Motion& gen, PositionVariant variant)
{
    return ave(PositionTrack::from_motion(gt), PositionTrack::from_motion(gen), variant);
}

double transition_distance(const Motion& first, const Motion& second, bool align)
{
    if (first.skeleton()->joint_count() != second.skeleton()->joint_count()) {
        throw ShapeMismatch("transition between motions of different skeletons");
    }
    const Pose next = align ? align_second(first, second.slice(0, 1)).front() : second.front();
    const JointPositions a = forward_kinematics(first.back(), *first.skeleton());
    const JointPositions b = forward_kinematics(next, *second.skeleton());
    return (a - b).rowwise().norm().mean();
}

double& VariantScores::operator[](PositionVariant v)
{
    switch (v) {
    case PositionVariant::root_joint:
        return root_joint;
    case PositionVariant::global_traj:
        return global_traj;
    case PositionVariant::mean_local:
        return mean_local;
    case PositionVariant::mean_global:
        break;
    }
    return mean_global;
}

double VariantScores::operator[](PositionVariant v) const
{
    return const_cast<VariantScores&>(*this)[v];
}

namespace {

nlohmann::json scores_json(const VariantScores& s)
{
    nlohmann::json j = nlohmann::json::object();
    for (PositionVariant v : kPositionVariants) {
        j[to_string(v)] = s[v];
    }
    return j;
}

VariantScores scores_from_json(const nlohmann::json& j)
{
    VariantScores s;
    for (PositionVariant v : kPositionVariants) {
        s[v] = j.at(to_string(v)).get<double>();
    }
    return s;
}

} // namespace

nlohmann::json to_json(const MetricReport& r)
{
    return {{"ape", scores_json(r.ape)},
            {"ave", scores_json(r.ave)},
            {"transition_dist", {{"with_align", r.transition_with_align}, {"without_align", r.transition_without_align}}},
            {"samples", r.samples},
            {"seed", r.seed}};
}

MetricReport metric_report_from_json(const nlohmann::json& j)
{
    MetricReport r;
    r.ape = scores_from_json(j.at("ape"));
    r.ave = scores_from_json(j.at("ave"));
    r.transition_with_align = j.at("transition_dist").at("with_align").get<double>();
    r.transition_without_align = j.at("transition_dist").at("without_align").get<double>();
    r.samples = j.at("samples").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

Motion pair_ground_truth(const ActionPair& pair)
{
    return canonicalize(concatenate({pair.motion_1, pair.motion_2}));
}

MetricReport evaluate(const std::vector<ActionPair>& pairs, const PairGenerator& generate, std::uint64_t seed)
{
    if (pairs.empty()) {
        throw std::invalid_argument("evaluation needs at least one pair");
    }
    MetricReport r;
    r.seed = seed;
    r.samples = pairs.size();
    const double w = 1.0 / static_cast<double>(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const PairGeneration g = generate(pairs[k], derive_seed(seed, k));
        const PositionTrack gt = PositionTrack::from_motion(pair_ground_truth(pairs[k]));
        const PositionTrack gen = PositionTrack::from_motion(g.composed);
        for (PositionVariant v : kPositionVariants) {
            r.ape[v] += w * ape(gt, gen, v);
            r.ave[v] += w * ave(gt, gen, v);
        }
        r.transition_with_align += w * transition_distance(g.first, g.second, true);
        r.transition_without_align += w * transition_distance(g.first, g.second, false);
    }
    return r;
}

} // namespace mcomp
