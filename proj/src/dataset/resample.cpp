#include "mcomp/dataset/resample.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mcomp {

namespace {
constexpr double kEps = 1e-9;
}

Motion resample(const Motion& motion, double target_fps)
{
    if (!(target_fps > 0.0)) {
        throw std::invalid_argument("target fps must be positive");
    }
    if (motion.fps() < target_fps - kEps) {
        throw std::invalid_argument("cannot resample " + std::to_string(motion.fps()) + " fps up to " +
                                    std::to_string(target_fps) + " fps");
    }
    const double ratio = motion.fps() / target_fps;
    const double stride = std::round(ratio);
    std::vector<Pose> frames;
    if (std::abs(ratio - stride) < kEps) {
        const auto step = static_cast<std::size_t>(stride);
        for (std::size_t f = 0; f < motion.size(); f += step) {
            frames.push_back(motion.frame(f));
        }
    } else {
        const auto count = static_cast<std::size_t>(std::floor((motion.size() - 1) / ratio)) + 1;
        for (std::size_t k = 0; k < count; ++k) {
            const auto src = static_cast<std::size_t>(std::llround(static_cast<double>(k) * ratio));
            frames.push_back(motion.frame(std::min(src, motion.size() - 1)));
        }
    }
    return Motion(std::move(frames), target_fps, motion.skeleton());
}

FilterOutcome filter_and_resample(const Motion& motion, ClipKind kind, std::uint64_t crop_seed,
                                  const FilterConfig& config)
{
    Motion m = resample(motion, config.target_fps);
    const double duration = m.duration_seconds();
    if (duration < config.min_duration_s - kEps) {
        return Rejection{"shorter than " + std::to_string(config.min_duration_s) + " s"};
    }
    if (kind == ClipKind::pair) {
        if (duration > config.max_pair_duration_s + kEps) {
            return Rejection{"pair longer than " + std::to_string(config.max_pair_duration_s) + " s"};
        }
        return m;
    }
    const auto window = static_cast<std::size_t>(std::llround(config.max_single_duration_s * config.target_fps));
    if (m.size() <= window) {
        return m;
    }
    std::mt19937_64 rng(crop_seed);
    std::uniform_int_distribution<std::size_t> start(0, m.size() - window);
    const std::size_t s = start(rng);
    return m.slice(s, s + window);
}

} // namespace mcomp
