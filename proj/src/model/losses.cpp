#include "mcomp/model/losses.hpp"

namespace mcomp {

nn::Var reconstruction_loss(const nn::Var& gt_1, const nn::Var& gen_1, const nn::Var& gt_2, const nn::Var& gen_2)
{
    return nn::add(nn::smooth_l1_mean(gen_1, gt_1), nn::smooth_l1_mean(gen_2, gt_2));
}

nn::Var prior_kl(const LatentDistribution& text_1, const LatentDistribution& text_2)
{
    return nn::add(nn::kl_standard(text_1.mu, text_1.sigma), nn::kl_standard(text_2.mu, text_2.sigma));
}

nn::Var cross_modal_kl(const LatentDistribution& text, const LatentDistribution& motion)
{
    return nn::add(nn::add(nn::kl_diag(text.mu, text.sigma, motion.mu, motion.sigma),
                           nn::kl_diag(motion.mu, motion.sigma, text.mu, text.sigma)),
                   nn::kl_standard(motion.mu, motion.sigma));
}

nn::Var kl_losses(const LatentDistribution& text_1, const LatentDistribution& text_2,
                  const LatentDistribution& motion_1, const LatentDistribution& motion_2)
{
    return nn::add(prior_kl(text_1, text_2),
                   nn::add(cross_modal_kl(text_1, motion_1), cross_modal_kl(text_2, motion_2)));
}

nn::Var latent_l1(const nn::Var& z_text, const nn::Var& z_motion)
{
    return nn::l1_mean(z_text, z_motion);
}

} // namespace mcomp
