#pragma once

#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mcomp/nn/autodiff.hpp"

namespace mcomp::nn {

// Named parameters with stable addresses, kept in creation order.
class ParameterStore {
public:
    Parameter& add(const std::string& name, Mat init);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::deque<Parameter>& all() { return params_; }
    const std::deque<Parameter>& all() const { return params_; }
    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::deque<Parameter> params_;
    std::map<std::string, Parameter*> index_;
};

// Deterministic initializers.
Mat xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);
Mat normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng);

// Sinusoidal encodings for positions [0, n), width d.
Mat sinusoidal_encoding(Eigen::Index n, Eigen::Index d);

struct Context {
    Graph& graph;
    bool training = false;
    double dropout = 0.0;
    std::mt19937_64* rng = nullptr;

    Var drop(const Var& x) const;
};

struct Linear {
    Parameter* w = nullptr;
    Parameter* b = nullptr;

    static Linear create(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
                         std::mt19937_64& rng);
    Var operator()(Context& ctx, const Var& x) const;
};

struct LayerNorm {
    Parameter* gamma = nullptr;
    Parameter* beta = nullptr;

    static LayerNorm create(ParameterStore& store, const std::string& name, Eigen::Index d);
    Var operator()(Context& ctx, const Var& x) const;
};

struct Attention {
    Linear q;
    Linear kv;
    Linear out;
    int heads = 1;

    static Attention create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                            std::mt19937_64& rng);
    Var operator()(Context& ctx, const Var& x, const Var& memory) const;
};

struct FeedForward {
    Linear in;
    Linear out;

    static FeedForward create(ParameterStore& store, const std::string& name, Eigen::Index d, Eigen::Index ff,
                              std::mt19937_64& rng);
    Var operator()(Context& ctx, const Var& x) const;
};

// Post-norm layers with GELU feed-forward.
struct EncoderLayer {
    Attention self_attn;
    FeedForward ff;
    LayerNorm norm1;
    LayerNorm norm2;

    static EncoderLayer create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                               Eigen::Index ff, std::mt19937_64& rng);
    Var operator()(Context& ctx, const Var& x) const;
};

struct DecoderLayer {
    Attention self_attn;
    Attention cross_attn;
    FeedForward ff;
    LayerNorm norm1;
    LayerNorm norm2;
    LayerNorm norm3;

    static DecoderLayer create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                               Eigen::Index ff, std::mt19937_64& rng);
    Var operator()(Context& ctx, const Var& x, const Var& memory) const;
};

struct TransformerEncoder {
    std::vector<EncoderLayer> layers;

    static TransformerEncoder create(ParameterStore& store, const std::string& name, int count, Eigen::Index d,
                                     int heads, Eigen::Index ff, std::mt19937_64& rng);
    Var operator()(Context& ctx, Var x) const;
};

struct TransformerDecoder {
    std::vector<DecoderLayer> layers;

    static TransformerDecoder create(ParameterStore& store, const std::string& name, int count, Eigen::Index d,
                                     int heads, Eigen::Index ff, std::mt19937_64& rng);
    Var operator()(Context& ctx, Var x, const Var& memory) const;
};

// Decoupled weight decay Adam.
struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

class AdamW {
public:
    explicit AdamW(AdamWConfig config = {}) : config_(config) {}

    // Applies one update from Parameter::grad of every trainable parameter;
    // frozen names are skipped.
    void step(ParameterStore& store, const std::vector<std::string>& frozen = {});

    const AdamWConfig& config() const { return config_; }
    void set_lr(double lr) { config_.lr = lr; }
    std::int64_t steps() const { return t_; }

    // Moment buffers by parameter name, for checkpoints.
    std::map<std::string, Mat>& first_moments() { return m_; }
    std::map<std::string, Mat>& second_moments() { return v_; }
    const std::map<std::string, Mat>& first_moments() const { return m_; }
    const std::map<std::string, Mat>& second_moments() const { return v_; }
    void set_steps(std::int64_t t) { t_ = t; }

private:
    AdamWConfig config_;
    std::int64_t t_ = 0;
    std::map<std::string, Mat> m_;
    std::map<std::string, Mat> v_;
};

} // namespace mcomp::nn
