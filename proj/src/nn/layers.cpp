#include "mcomp/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcomp::nn {

Parameter& ParameterStore::add(const std::string& name, Mat init)
{
    if (index_.count(name) != 0) {
        throw std::invalid_argument("duplicate parameter " + name);
    }
    params_.push_back({name, std::move(init), Mat()});
    index_[name] = &params_.back();
    return params_.back();
}

Parameter* ParameterStore::find(const std::string& name)
{
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
}

const Parameter* ParameterStore::find(const std::string& name) const
{
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : it->second;
}

std::size_t ParameterStore::scalar_count() const
{
    std::size_t n = 0;
    for (const Parameter& p : params_) {
        n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

void ParameterStore::zero_grad()
{
    for (Parameter& p : params_) {
        p.grad = Mat::Zero(p.value.rows(), p.value.cols());
    }
}

Mat xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng)
{
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    Mat m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = u(rng);
    }
    return m;
}

Mat normal_init(Eigen::Index rows, Eigen::Index cols, double stddev, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n(rng);
    }
    return m;
}

Mat sinusoidal_encoding(Eigen::Index n, Eigen::Index d)
{
    Mat pe(n, d);
    for (Eigen::Index pos = 0; pos < n; ++pos) {
        for (Eigen::Index i = 0; i < d; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
            pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
        }
    }
    return pe;
}

Var Context::drop(const Var& x) const
{
    if (!training || dropout <= 0.0) {
        return x;
    }
    if (rng == nullptr) {
        throw std::logic_error("training context without a random stream");
    }
    return nn::dropout(x, dropout, *rng);
}

Linear Linear::create(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
                      std::mt19937_64& rng)
{
    Linear l;
    l.w = &store.add(name + ".w", xavier_uniform(in, out, rng));
    l.b = &store.add(name + ".b", Mat::Zero(1, out));
    return l;
}

Var Linear::operator()(Context& ctx, const Var& x) const
{
    return linear(x, ctx.graph.param(*w), ctx.graph.param(*b));
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, Eigen::Index d)
{
    LayerNorm l;
    l.gamma = &store.add(name + ".gamma", Mat::Ones(1, d));
    l.beta = &store.add(name + ".beta", Mat::Zero(1, d));
    return l;
}

Var LayerNorm::operator()(Context& ctx, const Var& x) const
{
    return layer_norm(x, ctx.graph.param(*gamma), ctx.graph.param(*beta));
}

Attention Attention::create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                            std::mt19937_64& rng)
{
    if (heads <= 0 || d % heads != 0) {
        throw std::invalid_argument("model width must be divisible by the head count");
    }
    Attention a;
    a.q = Linear::create(store, name + ".q", d, d, rng);
    a.kv = Linear::create(store, name + ".kv", d, 2 * d, rng);
    a.out = Linear::create(store, name + ".out", d, d, rng);
    a.heads = heads;
    return a;
}

Var Attention::operator()(Context& ctx, const Var& x, const Var& memory) const
{
    const Eigen::Index d = x.cols();
    const Var q_ = q(ctx, x);
    const Var kv_ = kv(ctx, memory);
    const Var att = multihead_attention(q_, slice_cols(kv_, 0, d), slice_cols(kv_, d, d), heads);
    return out(ctx, att);
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& name, Eigen::Index d, Eigen::Index ff,
                                std::mt19937_64& rng)
{
    return {Linear::create(store, name + ".in", d, ff, rng), Linear::create(store, name + ".out", ff, d, rng)};
}

Var FeedForward::operator()(Context& ctx, const Var& x) const
{
    return out(ctx, ctx.drop(gelu(in(ctx, x))));
}

EncoderLayer EncoderLayer::create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                                  Eigen::Index ff, std::mt19937_64& rng)
{
    EncoderLayer l;
    l.self_attn = Attention::create(store, name + ".self_attn", d, heads, rng);
    l.ff = FeedForward::create(store, name + ".ff", d, ff, rng);
    l.norm1 = LayerNorm::create(store, name + ".norm1", d);
    l.norm2 = LayerNorm::create(store, name + ".norm2", d);
    return l;
}

Var EncoderLayer::operator()(Context& ctx, const Var& x) const
{
    const Var h = norm1(ctx, add(x, ctx.drop(self_attn(ctx, x, x))));
    return norm2(ctx, add(h, ctx.drop(ff(ctx, h))));
}

DecoderLayer DecoderLayer::create(ParameterStore& store, const std::string& name, Eigen::Index d, int heads,
                                  Eigen::Index ff, std::mt19937_64& rng)
{
    DecoderLayer l;
    l.self_attn = Attention::create(store, name + ".self_attn", d, heads, rng);
    l.cross_attn = Attention::create(store, name + ".cross_attn", d, heads, rng);
    l.ff = FeedForward::create(store, name + ".ff", d, ff, rng);
    l.norm1 = LayerNorm::create(store, name + ".norm1", d);
    l.norm2 = LayerNorm::create(store, name + ".norm2", d);
    l.norm3 = LayerNorm::create(store, name + ".norm3", d);
    return l;
}

Var DecoderLayer::operator()(Context& ctx, const Var& x, const Var& memory) const
{
    const Var h1 = norm1(ctx, add(x, ctx.drop(self_attn(ctx, x, x))));
    const Var h2 = norm2(ctx, add(h1, ctx.drop(cross_attn(ctx, h1, memory))));
    return norm3(ctx, add(h2, ctx.drop(ff(ctx, h2))));
}

TransformerEncoder TransformerEncoder::create(ParameterStore& store, const std::string& name, int count,
                                              Eigen::Index d, int heads, Eigen::Index ff, std::mt19937_64& rng)
{
    TransformerEncoder t;
    for (int i = 0; i < count; ++i) {
        t.layers.push_back(EncoderLayer::create(store, name + "." + std::to_string(i), d, heads, ff, rng));
    }
    return t;
}

Var TransformerEncoder::operator()(Context& ctx, Var x) const
{
    for (const EncoderLayer& l : layers) {
        x = l(ctx, x);
    }
    return x;
}

TransformerDecoder TransformerDecoder::create(ParameterStore& store, const std::string& name, int count,
                                              Eigen::Index d, int heads, Eigen::Index ff, std::mt19937_64& rng)
{
    TransformerDecoder t;
    for (int i = 0; i < count; ++i) {
        t.layers.push_back(DecoderLayer::create(store, name + "." + std::to_string(i), d, heads, ff, rng));
    }
    return t;
}

Var TransformerDecoder::operator()(Context& ctx, Var x, const Var& memory) const
{
    for (const DecoderLayer& l : layers) {
        x = l(ctx, x, memory);
    }
    return x;
}

void AdamW::step(ParameterStore& store, const std::vector<std::string>& frozen)
{
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (Parameter& p : store.all()) {
        if (std::find(frozen.begin(), frozen.end(), p.name) != frozen.end() || p.grad.size() == 0) {
            continue;
        }
        Mat& m = m_[p.name];
        Mat& v = v_[p.name];
        if (m.size() == 0) {
            m = Mat::Zero(p.value.rows(), p.value.cols());
            v = Mat::Zero(p.value.rows(), p.value.cols());
        }
        p.value *= 1.0 - config_.lr * config_.weight_decay;
        m = config_.beta1 * m + (1.0 - config_.beta1) * p.grad;
        v = config_.beta2 * v + (1.0 - config_.beta2) * p.grad.cwiseAbs2();
        p.value.array() -= config_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config_.eps);
    }
}

} // namespace mcomp::nn
