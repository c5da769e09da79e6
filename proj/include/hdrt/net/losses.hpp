#pragma once

#include "hdrt/net/hdrtnet.hpp"

namespace hdrt::net {

inline constexpr float kPixelL1Weight = 0.99f;
inline constexpr float kPixelCosWeight = 0.01f;

/// 0.99 * mean|gt - out| + 0.01 * (1 - cos(gt, out)). When gt (or out) has
/// zero norm the cosine term is dropped and *cos_skipped set.
Tensor pixel_loss(const Tensor& out, const Tensor& gt, bool* cos_skipped = nullptr);

/// Mean over the extractor stages of the L1 distance between feature maps.
Tensor perceptual_loss(const Tensor& out, const Tensor& gt, FeatureExtractor& extractor);

struct GanLosses {
    Tensor d_loss;  ///< gradients reach the discriminator only
    Tensor g_loss;  ///< gradients reach the generator (and the discriminator)
};

/// Non-saturating GAN losses; `fake` is detached inside d_loss.
GanLosses gan_losses(Discriminator& disc, const Tensor& real, const Tensor& fake);

struct LossWeights {
    double alpha = 1.0;
    double beta = 1e-5;
};

}  // namespace hdrt::net
