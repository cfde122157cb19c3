#include "mcomp/service/evaluation.hpp"

#include <openssl/sha.h>

#include <cstdio>

namespace mcomp {

PairGenerator pair_generator(const TeachModel& model, StitchOptions stitch, SampleMode mode)
{
    return [&model, stitch, mode](const ActionPair& pair, std::uint64_t seed) {
        const auto f1 = static_cast<int>(pair.motion_1.size());
        const auto f2 = static_cast<int>(pair.motion_2.size());
        const double fps = model.config().fps;
        if (model.strategy() == Strategy::joint) {
            const Motion m = model.generate_next(nullptr, joint_text(pair.text_1, pair.text_2), f1 + f2, mode,
                                                 derive_seed(seed, 0));
            return PairGeneration{m.slice(0, static_cast<std::size_t>(f1)), m.slice(static_cast<std::size_t>(f1), m.size()),
                                  m};
        }
        CompositionRequest req{{{pair.text_1, f1 / fps}, {pair.text_2, f2 / fps}}, model.strategy(), stitch, mode, seed};
        std::vector<Motion> parts;
        if (model.strategy() == Strategy::teach) {
            parts = model.generate_sequence(req.prompts, mode, seed);
        } else {
            for (std::size_t i = 0; i < 2; ++i) {
                parts.push_back(model.generate_next(nullptr, req.prompts[i].text,
                                                    model.frames_for(req.prompts[i].duration_s), mode,
                                                    derive_seed(seed, i)));
            }
        }
        Motion composed = stitch_sequence(parts, stitch).motion;
        return PairGeneration{std::move(parts[0]), std::move(parts[1]), std::move(composed)};
    };
}

std::string config_hash(const nlohmann::json& config)
{
    const std::string body = config.dump();
    const std::string blob = "blob " + std::to_string(body.size()) + '\0' + body;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
    std::string hex;
    char buf[3];
    for (unsigned char c : digest) {
        std::snprintf(buf, sizeof buf, "%02x", c);
        hex += buf;
    }
    return hex;
}

} // namespace mcomp
