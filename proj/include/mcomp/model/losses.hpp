#pragma once

#include "mcomp/nn/autodiff.hpp"

namespace mcomp {

// Diagonal Gaussian; sigma is a standard deviation, not a variance.
struct LatentDistribution {
    nn::Var mu;
    nn::Var sigma;
};

// Smooth-L1 (threshold 1) averaged over elements, summed over both members.
nn::Var reconstruction_loss(const nn::Var& gt_1, const nn::Var& gen_1, const nn::Var& gt_2, const nn::Var& gen_2);

// KL of each text distribution from the standard normal prior.
nn::Var prior_kl(const LatentDistribution& text_1, const LatentDistribution& text_2);

// KL(text, motion) + KL(motion, text) + KL(motion, prior).
nn::Var cross_modal_kl(const LatentDistribution& text, const LatentDistribution& motion);

// prior_kl plus cross_modal_kl for both members.
nn::Var kl_losses(const LatentDistribution& text_1, const LatentDistribution& text_2,
                  const LatentDistribution& motion_1, const LatentDistribution& motion_2);

// Mean absolute difference between a text and a motion latent.
nn::Var latent_l1(const nn::Var& z_text, const nn::Var& z_motion);

} // namespace mcomp
