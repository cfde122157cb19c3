#include "mcomp/compose/compose.hpp"

namespace mcomp {

std::string to_string(StitchMode m)
{
    return m == StitchMode::overwrite ? "overwrite" : "insert";
}

StitchMode stitch_mode_from_string(const std::string& name)
{
    if (name == "overwrite") {
        return StitchMode::overwrite;
    }
    if (name == "insert") {
        return StitchMode::insert;
    }
    throw std::invalid_argument("unknown stitch mode '" + name + "' (expected overwrite or insert)");
}

Motion align_second(const Motion& first, const Motion& second)
{
    const double yaw = pose_heading(first.back()) - pose_heading(second.front());
    const Vec3 rotated = yaw_matrix(yaw) * second.front().root_translation;
    const Vec3& target = first.back().root_translation;
    return apply_rigid(second, yaw, Vec3(target.x() - rotated.x(), target.y() - rotated.y(), 0.0));
}

namespace {

Pose interpolate(const Pose& a, const Pose& b, double t)
{
    if (t >= 1.0) {
        return b;
    }
    Pose out;
    out.rot6d.reserve(a.rot6d.size());
    for (std::size_t j = 0; j < a.rot6d.size(); ++j) {
        out.rot6d.push_back(sixd_from_quat(slerp(quat_from_6d(a.rot6d[j]), quat_from_6d(b.rot6d[j]), t)));
    }
    out.root_translation = (1.0 - t) * a.root_translation + t * b.root_translation;
    return out;
}

void check_compatible(const Motion& a, const Motion& b)
{
    if (a.fps() != b.fps() || a.skeleton()->joint_count() != b.skeleton()->joint_count()) {
        throw std::invalid_argument("stitched motions must share fps and skeleton");
    }
}

} // namespace

Motion slerp_stitch(const Motion& first, const Motion& second, int n, StitchMode mode)
{
    check_compatible(first, second);
    if (n < 0) {
        throw std::invalid_argument("slerp frame count must be non-negative");
    }
    const auto count = static_cast<std::size_t>(n);
    std::vector<Pose> frames = first.frames();
    frames.reserve(first.size() + second.size() + count);
    const Pose& from = first.back();
    if (mode == StitchMode::insert) {
        for (std::size_t k = 0; k < count; ++k) {
            frames.push_back(interpolate(from, second.front(), static_cast<double>(k + 1) / (n + 1)));
        }
        frames.insert(frames.end(), second.frames().begin(), second.frames().end());
        return first.with_frames(std::move(frames));
    }
    if (count > second.size()) {
        throw std::invalid_argument("cannot overwrite " + std::to_string(n) + " frames of a " +
                                    std::to_string(second.size()) + "-frame motion");
    }
    const std::size_t target = std::min(count, second.size() - 1);
    for (std::size_t k = 0; k < second.size(); ++k) {
        if (k < count) {
            const double t = static_cast<double>(k + 1) / static_cast<double>(target + 1);
            frames.push_back(interpolate(from, second.frame(target), t));
        } else {
            frames.push_back(second.frame(k));
        }
    }
    return first.with_frames(std::move(frames));
}

void CompositionRequest::validate() const
{
    if (prompts.empty()) {
        throw std::invalid_argument("composition needs at least one prompt");
    }
    if (stitch.slerp_frames < 0) {
        throw std::invalid_argument("slerp frame count must be non-negative");
    }
    if (strategy == Strategy::joint && prompts.size() != 2) {
        throw std::invalid_argument("the joint strategy composes exactly 2 prompts, got " +
                                    std::to_string(prompts.size()));
    }
}

Composition stitch_sequence(const std::vector<Motion>& motions, const StitchOptions& stitch)
{
    if (motions.empty()) {
        throw std::invalid_argument("nothing to stitch");
    }
    Composition out{motions.front(), {{0, motions.front().size()}}};
    for (std::size_t i = 1; i < motions.size(); ++i) {
        const std::size_t begin = out.motion.size();
        out.motion = slerp_stitch(out.motion, align_second(out.motion, motions[i]), stitch.slerp_frames, stitch.mode);
        out.spans.push_back({begin, out.motion.size()});
    }
    return out;
}

Composition compose(const CompositionRequest& request, const TeachModel& model)
{
    request.validate();
    if (model.strategy() != request.strategy) {
        throw StrategyMismatch("a " + to_string(model.strategy()) + " model cannot serve a " +
                               to_string(request.strategy) + " request");
    }
    for (const Prompt& p : request.prompts) {
        model.frames_for(p.duration_s);
    }
    switch (request.strategy) {
    case Strategy::joint: {
        const int f1 = model.frames_for(request.prompts[0].duration_s);
        const int f2 = model.frames_for(request.prompts[1].duration_s);
        Motion m = model.generate_next(nullptr, joint_text(request.prompts[0].text, request.prompts[1].text), f1 + f2,
                                       request.sample, derive_seed(request.seed, 0));
        const auto b = static_cast<std::size_t>(f1);
        return {std::move(m), {{0, b}, {b, b + static_cast<std::size_t>(f2)}}};
    }
    case Strategy::independent: {
        std::vector<Motion> parts;
        for (std::size_t i = 0; i < request.prompts.size(); ++i) {
            const Prompt& p = request.prompts[i];
            parts.push_back(model.generate_next(nullptr, p.text, model.frames_for(p.duration_s), request.sample,
                                                derive_seed(request.seed, i)));
        }
        return stitch_sequence(parts, request.stitch);
    }
    case Strategy::teach:
        break;
    }
    return stitch_sequence(model.generate_sequence(request.prompts, request.sample, request.seed), request.stitch);
}

} // namespace mcomp
