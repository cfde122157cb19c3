#include "mcomp/dataset/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>

namespace mcomp {

namespace {

constexpr double kPi = 3.14159265358979323846;

constexpr std::array<std::string_view, 10> kActions = {
    "walk-forward", "turn-left", "turn-right",     "wave-right-hand", "raise-left-hand",
    "sit-down",     "stand-up",  "squat",          "kick-left-foot",  "step-right",
};

constexpr std::array<std::array<std::string_view, 3>, 10> kPhrasings = {{
    {"walk forward", "walking forwards", "a person walks forward"},
    {"turn left", "turning to the left", "a person turns left"},
    {"turn right", "turning to the right", "a person turns right"},
    {"wave the right hand", "right hand wave", "waving with right hand"},
    {"raise the left hand", "left hand raise", "raising the left arm"},
    {"sit down", "sitting down", "a person sits down"},
    {"stand up", "standing up", "a person stands up"},
    {"squat", "squatting down and up", "do a squat"},
    {"kick with the left foot", "left foot kick", "kicking the left leg"},
    {"step to the right", "side step right", "a person steps right"},
}};

enum class Action { walk_forward, turn_left, turn_right, wave_right_hand, raise_left_hand, sit_down, stand_up, squat, kick_left_foot, step_right };

// Joint angle degrees of freedom driving the humanoid, radians.
enum Dof : int {
    kSpine,
    kHipFlexL,
    kHipFlexR,
    kHipAbdL,
    kHipAbdR,
    kKneeL,
    kKneeR,
    kAnkleL,
    kAnkleR,
    kShFlexL,
    kShFlexR,
    kShAbdL,
    kShAbdR,
    kElbowL,
    kElbowR,
    kNeck,
    kDofCount
};
using Dofs = std::array<double, kDofCount>;

enum class Posture { standing, seated };

// Per-frame joint angles plus root increments in the body frame.
struct FrameSpec {
    Dofs dofs{};
    double d_forward = 0.0;
    double d_lateral = 0.0;
    double d_heading = 0.0;
};

struct ActionOutput {
    std::vector<FrameSpec> frames;
    Posture end_posture = Posture::standing;
    // Posture the raw frames assume at their start; the blend into them is
    // lengthened when the body is in a different one.
    Posture start_posture = Posture::standing;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double clamp01(double x)
{
    return std::clamp(x, 0.0, 1.0);
}

double smoothstep(double x)
{
    x = clamp01(x);
    return x * x * (3.0 - 2.0 * x);
}

double bump(double x)
{
    return std::sin(kPi * clamp01(x));
}

Dofs base_dofs(Posture p)
{
    Dofs d{};
    if (p == Posture::seated) {
        d[kHipFlexL] = d[kHipFlexR] = kPi / 2;
        d[kKneeL] = d[kKneeR] = kPi / 2;
    }
    return d;
}

Dofs lerp(const Dofs& a, const Dofs& b, double t)
{
    Dofs out;
    for (int i = 0; i < kDofCount; ++i) {
        out[i] = a[i] + t * (b[i] - a[i]);
    }
    return out;
}

std::optional<Action> parse_action(std::string_view name)
{
    for (std::size_t i = 0; i < kActions.size(); ++i) {
        if (kActions[i] == name) {
            return static_cast<Action>(i);
        }
    }
    return std::nullopt;
}

std::string unknown_action_message(std::string_view name)
{
    std::string out = "unknown action '" + std::string(name) + "' (known:";
    for (std::size_t i = 0; i < kActions.size(); ++i) {
        out += (i == 0 ? " '" : ", '") + std::string(kActions[i]) + "'";
    }
    return out + ")";
}

ActionOutput generate_action(Action action, Posture start, int n, double fps, Rng& rng)
{
    ActionOutput out;
    out.frames.resize(static_cast<std::size_t>(n));
    out.start_posture = Posture::standing;
    out.end_posture = Posture::standing;
    const double span = std::max(n - 1, 1) / fps;
    auto time = [&](int t) { return t / fps; };
    auto progress = [&](int t) { return n > 1 ? static_cast<double>(t) / (n - 1) : 1.0; };

    switch (action) {
    case Action::walk_forward: {
        const double freq = uniform(rng, 0.85, 1.1);
        const double amp = uniform(rng, 0.35, 0.5);
        const double speed = uniform(rng, 0.9, 1.3);
        const double phase0 = uniform(rng, 0.0, 2.0 * kPi);
        for (int t = 0; t < n; ++t) {
            const double ramp = smoothstep(time(t) / 0.4);
            const double phi = phase0 + 2.0 * kPi * freq * time(t);
            FrameSpec& f = out.frames[t];
            f.dofs[kHipFlexL] = ramp * amp * std::sin(phi);
            f.dofs[kHipFlexR] = -ramp * amp * std::sin(phi);
            f.dofs[kKneeL] = ramp * (0.1 + 0.6 * std::max(0.0, std::cos(phi)));
            f.dofs[kKneeR] = ramp * (0.1 + 0.6 * std::max(0.0, -std::cos(phi)));
            f.dofs[kShFlexL] = -ramp * 0.6 * amp * std::sin(phi);
            f.dofs[kShFlexR] = ramp * 0.6 * amp * std::sin(phi);
            f.dofs[kElbowL] = f.dofs[kElbowR] = 0.25 * ramp;
            f.d_forward = speed * ramp / fps;
        }
        break;
    }
    case Action::turn_left:
    case Action::turn_right: {
        const double sign = action == Action::turn_left ? 1.0 : -1.0;
        const double angle = sign * uniform(rng, 1.2, 1.9);
        const double step_freq = uniform(rng, 1.4, 1.8);
        double prev = 0.0;
        for (int t = 0; t < n; ++t) {
            const double u = progress(t);
            const double s = smoothstep(u);
            const double step = std::sin(2.0 * kPi * step_freq * time(t)) * bump(u);
            FrameSpec& f = out.frames[t];
            f.dofs[kHipFlexL] = 0.25 * std::max(0.0, step);
            f.dofs[kHipFlexR] = 0.25 * std::max(0.0, -step);
            f.dofs[kKneeL] = 0.4 * std::max(0.0, step);
            f.dofs[kKneeR] = 0.4 * std::max(0.0, -step);
            f.dofs[kNeck] = 0.35 * sign * bump(u);
            f.d_heading = angle * (s - prev);
            prev = s;
        }
        break;
    }
    case Action::wave_right_hand: {
        const double abd = uniform(rng, 2.2, 2.6);
        const double freq = uniform(rng, 1.8, 2.6);
        const Dofs legs = base_dofs(start);
        for (int t = 0; t < n; ++t) {
            const double env = smoothstep(time(t) / 0.35) * smoothstep((span - time(t)) / 0.35);
            FrameSpec& f = out.frames[t];
            f.dofs = legs;
            f.dofs[kShAbdR] = env * abd;
            f.dofs[kShFlexR] = env * 0.3;
            f.dofs[kElbowR] = env * (0.7 + 0.45 * std::sin(2.0 * kPi * freq * time(t)));
        }
        out.start_posture = out.end_posture = start;
        break;
    }
    case Action::raise_left_hand: {
        const double peak = uniform(rng, 2.5, 2.9);
        const Dofs legs = base_dofs(start);
        for (int t = 0; t < n; ++t) {
            const double u = progress(t);
            const double env = smoothstep(u / 0.4) * smoothstep((1.0 - u) / 0.25);
            FrameSpec& f = out.frames[t];
            f.dofs = legs;
            f.dofs[kShFlexL] = env * peak;
            f.dofs[kElbowL] = env * 0.2;
        }
        out.start_posture = out.end_posture = start;
        break;
    }
    case Action::sit_down:
    case Action::stand_up: {
        const Posture target = action == Action::sit_down ? Posture::seated : Posture::standing;
        const double sway_freq = uniform(rng, 0.3, 0.6);
        const double shift = uniform(rng, 0.12, 0.18);
        if (start == target) {
            const Dofs hold = base_dofs(start);
            for (int t = 0; t < n; ++t) {
                out.frames[t].dofs = hold;
                out.frames[t].dofs[kSpine] = 0.06 * std::sin(2.0 * kPi * sway_freq * time(t));
            }
        } else {
            const double fraction = uniform(rng, 0.6, 0.8);
            const double direction = target == Posture::seated ? -1.0 : 1.0;
            double prev = 0.0;
            for (int t = 0; t < n; ++t) {
                const double k = smoothstep(progress(t) / fraction);
                FrameSpec& f = out.frames[t];
                f.dofs = lerp(base_dofs(start), base_dofs(target), k);
                f.dofs[kSpine] = 0.5 * bump(k);
                f.dofs[kShFlexL] = f.dofs[kShFlexR] = 0.4 * bump(k);
                f.d_forward = direction * shift * (k - prev);
                prev = k;
            }
        }
        out.start_posture = start;
        out.end_posture = target;
        break;
    }
    case Action::squat: {
        const double depth = uniform(rng, 0.8, 1.0);
        for (int t = 0; t < n; ++t) {
            const double k = depth * bump(progress(t));
            FrameSpec& f = out.frames[t];
            f.dofs[kHipFlexL] = f.dofs[kHipFlexR] = 1.7 * k;
            f.dofs[kKneeL] = f.dofs[kKneeR] = 2.2 * k;
            f.dofs[kAnkleL] = f.dofs[kAnkleR] = 0.5 * k;
            f.dofs[kSpine] = 0.4 * k;
            f.dofs[kShFlexL] = f.dofs[kShFlexR] = 1.2 * k;
        }
        break;
    }
    case Action::kick_left_foot: {
        const double amp = uniform(rng, 0.9, 1.2);
        const double center = uniform(rng, 0.35, 0.5);
        for (int t = 0; t < n; ++t) {
            const double u = progress(t);
            const double k = bump((u - center + 0.2) / 0.4);
            FrameSpec& f = out.frames[t];
            f.dofs[kHipFlexL] = amp * k;
            f.dofs[kKneeL] = 1.2 * bump((u - center + 0.25) / 0.3) * (1.0 - 0.7 * k);
            f.dofs[kSpine] = -0.15 * k;
            f.dofs[kShAbdL] = f.dofs[kShAbdR] = 0.35 * k;
        }
        break;
    }
    case Action::step_right: {
        const double dist = uniform(rng, 0.35, 0.5);
        double prev = 0.0;
        for (int t = 0; t < n; ++t) {
            const double u = progress(t);
            const double k = smoothstep(u);
            FrameSpec& f = out.frames[t];
            f.dofs[kHipAbdR] = 0.35 * bump(u / 0.6);
            f.dofs[kHipAbdL] = 0.3 * bump((u - 0.35) / 0.6);
            f.dofs[kKneeR] = 0.2 * bump(u / 0.6);
            f.d_lateral = dist * (k - prev);
            prev = k;
        }
        break;
    }
    }
    return out;
}

Mat3 rx(double a)
{
    return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
}

Mat3 ry(double a)
{
    return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}

Mat3 rz(double a)
{
    return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}

Pose dofs_to_pose(const Dofs& d, double heading, const Skeleton& skeleton)
{
    Pose p = Pose::identity(skeleton.joint_count());
    auto set = [&](int j, const Mat3& m) { p.rot6d[j] = sixd_from_matrix(m); };
    set(joints::pelvis, rz(heading));
    // Forward lean tilts the torso toward +y, i.e. a negative x rotation.
    set(joints::spine1, rx(-0.4 * d[kSpine]));
    set(joints::spine2, rx(-0.3 * d[kSpine]));
    set(joints::spine3, rx(-0.3 * d[kSpine]));
    set(joints::left_hip, rx(d[kHipFlexL]) * ry(d[kHipAbdL]));
    set(joints::right_hip, rx(d[kHipFlexR]) * ry(-d[kHipAbdR]));
    set(joints::left_knee, rx(-d[kKneeL]));
    set(joints::right_knee, rx(-d[kKneeR]));
    set(joints::left_ankle, rx(d[kAnkleL]));
    set(joints::right_ankle, rx(d[kAnkleR]));
    set(joints::left_shoulder, ry(d[kShAbdL]) * rx(d[kShFlexL]));
    set(joints::right_shoulder, ry(-d[kShAbdR]) * rx(d[kShFlexR]));
    set(joints::left_elbow, rx(d[kElbowL]));
    set(joints::right_elbow, rx(d[kElbowR]));
    set(joints::neck, rz(d[kNeck]));
    return p;
}

// Root height that puts the lowest foot joint on the ground plane.
double ground_height(const Pose& pose, const Skeleton& skeleton)
{
    Pose at_zero = pose;
    at_zero.root_translation = Vec3::Zero();
    const JointPositions pos = forward_kinematics(at_zero, skeleton);
    double lowest = 0.0;
    for (int j : {joints::left_ankle, joints::right_ankle, joints::left_foot, joints::right_foot}) {
        lowest = std::min(lowest, pos(j, 2));
    }
    return -lowest;
}

struct Boundary {
    bool transition = false;
    int back = 0;    // frames the later segment starts before the boundary
    int forward = 0; // frames the earlier segment ends after the boundary
    int gap_before = 0;
    int gap_after = 0;
};

} // namespace

std::span<const std::string_view> synth_vocabulary()
{
    return kActions;
}

std::span<const std::string_view> synth_phrasings(std::string_view action_name)
{
    const auto a = parse_action(action_name);
    if (!a) {
        throw UnknownAction(unknown_action_message(action_name));
    }
    return kPhrasings[static_cast<std::size_t>(*a)];
}

SequenceRecord synth_generate(const std::vector<ActionRequest>& actions, std::uint64_t seed,
                              const SynthOptions& options)
{
    if (actions.empty()) {
        throw std::invalid_argument("synth_generate: no actions");
    }
    std::vector<Action> kinds;
    std::vector<int> lengths;
    for (const ActionRequest& r : actions) {
        const auto a = parse_action(r.action_name);
        if (!a) {
            throw UnknownAction(unknown_action_message(r.action_name));
        }
        if (!(r.duration_s > 0.0)) {
            throw std::invalid_argument("synth_generate: duration must be positive");
        }
        kinds.push_back(*a);
        lengths.push_back(std::max(1, static_cast<int>(std::lround(r.duration_s * options.fps))));
    }

    Rng rng(seed);
    const SkeletonPtr skeleton = default_skeleton();
    double x = uniform(rng, -2.0, 2.0);
    double y = uniform(rng, -2.0, 2.0);
    double heading = uniform(rng, -kPi, kPi);
    Posture posture = Posture::standing;
    Dofs last = base_dofs(posture);

    std::vector<Pose> frames;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const int n = lengths[i];
        const auto phrasings = kPhrasings[static_cast<std::size_t>(kinds[i])];
        texts.emplace_back(phrasings[std::uniform_int_distribution<std::size_t>(0, phrasings.size() - 1)(rng)]);

        const ActionOutput out = generate_action(kinds[i], posture, n, options.fps, rng);
        const double blend_s = (out.start_posture != posture) ? 0.6 : 0.25;
        const int blend = std::min(n, static_cast<int>(std::lround(blend_s * options.fps)));
        for (int t = 0; t < n; ++t) {
            const FrameSpec& f = out.frames[t];
            const Dofs d = t < blend ? lerp(last, f.dofs, smoothstep((t + 1.0) / (blend + 1.0))) : f.dofs;
            heading += f.d_heading;
            const Vec3 fwd = rz(heading) * Vec3::UnitY();
            const Vec3 right = rz(heading) * Vec3::UnitX();
            x += f.d_forward * fwd.x() + f.d_lateral * right.x();
            y += f.d_forward * fwd.y() + f.d_lateral * right.y();
            Pose p = dofs_to_pose(d, heading, *skeleton);
            p.root_translation = Vec3(x, y, ground_height(p, *skeleton));
            frames.push_back(std::move(p));
            if (t == n - 1) {
                last = d;
            }
        }
        posture = out.end_posture;
    }

    // Segment layout: nominal action i covers [starts[i], starts[i+1]).
    std::vector<int> starts{0};
    for (int n : lengths) {
        starts.push_back(starts.back() + n);
    }
    std::vector<Boundary> boundaries(kinds.size() > 0 ? kinds.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < kinds.size(); ++i) {
        Boundary& b = boundaries[i];
        const int limit = std::min((lengths[i] - 1) / 2, (lengths[i + 1] - 1) / 2);
        const bool transition = uniform(rng, 0.0, 1.0) < options.transition_probability;
        const int overlap = std::min(
            limit, static_cast<int>(std::lround(uniform(rng, options.min_overlap_s, options.max_overlap_s) * options.fps)));
        const int gap_before = static_cast<int>(std::lround(uniform(rng, 0.1, 0.25) * options.fps));
        const int gap_after = static_cast<int>(std::lround(uniform(rng, 0.1, 0.25) * options.fps));
        constexpr int kTransitionMargin = 3;
        if (transition && gap_before + kTransitionMargin <= limit && gap_after + kTransitionMargin <= limit) {
            b.transition = true;
            b.gap_before = gap_before;
            b.gap_after = gap_after;
        } else {
            b.back = overlap / 2;
            b.forward = overlap - b.back;
        }
    }

    SequenceRecord record{Motion(std::move(frames), options.fps, skeleton), {}};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        int begin = starts[i];
        int end = starts[i + 1];
        if (i > 0) {
            const Boundary& b = boundaries[i - 1];
            begin = b.transition ? begin + b.gap_after : begin - b.back;
        }
        if (i + 1 < kinds.size()) {
            const Boundary& b = boundaries[i];
            end = b.transition ? end - b.gap_before : end + b.forward;
        }
        record.segments.push_back({texts[i], begin, end});
    }
    for (std::size_t i = 0; i + 1 < kinds.size(); ++i) {
        const Boundary& b = boundaries[i];
        if (b.transition) {
            constexpr int kTransitionMargin = 3;
            const int at = starts[i + 1];
            record.segments.push_back(
                {"transition", at - b.gap_before - kTransitionMargin, at + b.gap_after + kTransitionMargin});
        }
    }
    record.validate();
    return record;
}

std::vector<ActionRequest> random_action_sequence(const CorpusSpec& spec, std::uint64_t seed)
{
    Rng rng(seed);
    const int count = std::uniform_int_distribution<int>(spec.min_actions, spec.max_actions)(rng);
    std::vector<ActionRequest> out;
    std::size_t prev = kActions.size();
    for (int i = 0; i < count; ++i) {
        std::size_t a;
        do {
            a = std::uniform_int_distribution<std::size_t>(0, kActions.size() - 1)(rng);
        } while (a == prev);
        prev = a;
        out.push_back({std::string(kActions[a]), uniform(rng, spec.min_duration_s, spec.max_duration_s)});
    }
    return out;
}

SequenceRecord synth_record(const CorpusSpec& spec, std::uint64_t seed, std::size_t index)
{
    const auto actions = random_action_sequence(spec, derive_seed(seed, 2 * index));
    return synth_generate(actions, derive_seed(seed, 2 * index + 1), spec.synth);
}

} // namespace mcomp
