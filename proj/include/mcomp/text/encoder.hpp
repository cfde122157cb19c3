#pragma once

#include "mcomp/nn/layers.hpp"
#include "mcomp/text/tokenizer.hpp"

namespace mcomp {

// Per-token features: a learned embedding row plus a sinusoidal position
// code. A frozen encoder enters graphs as a constant and is skipped by the
// optimizer.
class TextEncoder {
public:
    static TextEncoder create(nn::ParameterStore& store, std::size_t vocab_size, Eigen::Index d_model,
                              std::mt19937_64& rng, bool frozen = false);

    // N x d_model features for N tokens.
    nn::Var encode(nn::Context& ctx, const TokenSequence& tokens) const;

    bool frozen() const { return frozen_; }
    void set_frozen(bool f) { frozen_ = f; }
    nn::Parameter& embedding() const { return *embedding_; }

private:
    nn::Parameter* embedding_ = nullptr;
    bool frozen_ = false;
};

} // namespace mcomp
