#include "mcomp/model/config.hpp"

#include <stdexcept>

namespace mcomp {

std::string to_string(Strategy s)
{
    switch (s) {
    case Strategy::teach:
        return "teach";
    case Strategy::independent:
        return "independent";
    case Strategy::joint:
        return "joint";
    }
    return "teach";
}

Strategy strategy_from_string(const std::string& s)
{
    if (s == "teach") {
        return Strategy::teach;
    }
    if (s == "independent") {
        return Strategy::independent;
    }
    if (s == "joint") {
        return Strategy::joint;
    }
    throw std::invalid_argument("unknown strategy \"" + s + "\" (teach, independent, joint)");
}

ModelConfig ModelConfig::full()
{
    return ModelConfig{};
}

ModelConfig ModelConfig::desk()
{
    ModelConfig c;
    c.layers = 2;
    c.heads = 4;
    c.feedforward = 128;
    c.latent_dim = 64;
    c.learning_rate = 5e-4;
    c.batch_size = 16;
    return c;
}

ModelConfig ModelConfig::tiny()
{
    ModelConfig c;
    c.layers = 2;
    c.heads = 2;
    c.feedforward = 64;
    c.latent_dim = 32;
    c.dropout = 0.0;
    c.learning_rate = 1e-3;
    c.batch_size = 8;
    return c;
}

ModelConfig ModelConfig::preset(const std::string& name)
{
    if (name == "full") {
        return full();
    }
    if (name == "desk") {
        return desk();
    }
    if (name == "tiny") {
        return tiny();
    }
    throw std::invalid_argument("unknown preset \"" + name + "\" (full, desk, tiny)");
}

void ModelConfig::validate() const
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (layers < 1) {
        fail("layers must be at least 1");
    }
    if (heads < 1 || latent_dim < 1 || latent_dim % heads != 0) {
        fail("latent_dim (" + std::to_string(latent_dim) + ") must be divisible by heads (" + std::to_string(heads) +
             ")");
    }
    if (feedforward < 1) {
        fail("feedforward must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        fail("dropout must be in [0, 1)");
    }
    if (past_frames < 0) {
        fail("past_frames must be >= 0");
    }
    if (!(lambda_kl >= 0.0) || !(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
        fail("lambda_kl, learning_rate and weight_decay must be non-negative (learning_rate positive)");
    }
    if (batch_size < 1) {
        fail("batch_size must be at least 1");
    }
    if (!(fps > 0.0)) {
        fail("fps must be positive");
    }
}

nlohmann::json to_json(const ModelConfig& c)
{
    return {{"layers", c.layers},
            {"heads", c.heads},
            {"dropout", c.dropout},
            {"feedforward", c.feedforward},
            {"latent_dim", c.latent_dim},
            {"past_frames", c.past_frames},
            {"lambda_kl", c.lambda_kl},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"weight_decay", c.weight_decay},
            {"fps", c.fps},
            {"ground_truth_past", c.ground_truth_past},
            {"freeze_text", c.freeze_text}};
}

ModelConfig model_config_from_json(const nlohmann::json& j)
{
    ModelConfig c;
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.dropout = j.value("dropout", c.dropout);
    c.feedforward = j.value("feedforward", c.feedforward);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.past_frames = j.value("past_frames", c.past_frames);
    c.lambda_kl = j.value("lambda_kl", c.lambda_kl);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.fps = j.value("fps", c.fps);
    c.ground_truth_past = j.value("ground_truth_past", c.ground_truth_past);
    c.freeze_text = j.value("freeze_text", c.freeze_text);
    c.validate();
    return c;
}

} // namespace mcomp
