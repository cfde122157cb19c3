#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace mcomp {

enum class Strategy { teach, independent, joint };

std::string to_string(Strategy s);
// Throws std::invalid_argument for anything but "teach", "independent", "joint".
Strategy strategy_from_string(const std::string& s);

struct ModelConfig {
    int layers = 6;
    int heads = 4;
    double dropout = 0.1;
    int feedforward = 1024;
    int latent_dim = 256;
    int past_frames = 5;
    double lambda_kl = 1e-5;
    double learning_rate = 1e-4;
    int batch_size = 32;
    double weight_decay = 1e-4;
    double fps = 30.0;
    // Condition pass 2 on ground-truth instead of generated past frames.
    bool ground_truth_past = false;
    bool freeze_text = false;

    // Full-size network (4 heads: 256 is not divisible by 6).
    static ModelConfig full();
    // Small enough to train on one CPU core in well under an hour.
    static ModelConfig desk();
    // 2 layers, 2 heads, width 32, no dropout; used by tests.
    static ModelConfig tiny();
    // "full" | "desk" | "tiny"; throws std::invalid_argument otherwise.
    static ModelConfig preset(const std::string& name);

    // Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

} // namespace mcomp
