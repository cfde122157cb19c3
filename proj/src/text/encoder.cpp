#include "mcomp/text/encoder.hpp"

#include <stdexcept>

namespace mcomp {

TextEncoder TextEncoder::create(nn::ParameterStore& store, std::size_t vocab_size, Eigen::Index d_model,
                                std::mt19937_64& rng, bool frozen)
{
    TextEncoder e;
    e.embedding_ = &store.add("text.embedding", nn::normal_init(static_cast<Eigen::Index>(vocab_size), d_model, 1.0, rng));
    e.frozen_ = frozen;
    return e;
}

nn::Var TextEncoder::encode(nn::Context& ctx, const TokenSequence& tokens) const
{
    if (tokens.ids.empty()) {
        throw std::invalid_argument("encode of an empty token sequence");
    }
    const nn::Var table = frozen_ ? nn::constant(embedding_->value) : ctx.graph.param(*embedding_);
    const nn::Var rows = nn::gather_rows(table, tokens.ids);
    return nn::add(rows, nn::constant(nn::sinusoidal_encoding(rows.rows(), rows.cols())));
}

} // namespace mcomp
