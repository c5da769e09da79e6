#include "hdrt/net/losses.hpp"

namespace hdrt::net {

namespace {

bool zero_norm(const Tensor& t) {
    for (float v : t.data())
        if (v != 0.0f) return false;
    return true;
}

}  // namespace

Tensor pixel_loss(const Tensor& out, const Tensor& gt, bool* cos_skipped) {
    Tensor l1 = nn::scale(nn::l1_mean(out, gt), kPixelL1Weight);
    const bool skip = zero_norm(gt) || zero_norm(out);
    if (cos_skipped) *cos_skipped = skip;
    if (skip) return l1;
    Tensor one_minus_cos = nn::add_scalar(nn::scale(nn::cosine_sim(out, gt), -1.0f), 1.0f);
    return nn::add(l1, nn::scale(one_minus_cos, kPixelCosWeight));
}

Tensor perceptual_loss(const Tensor& out, const Tensor& gt, FeatureExtractor& extractor) {
    if (out.shape() != gt.shape()) throw nn::NnError("perceptual_loss: shape mismatch");
    const auto fo = extractor.forward(out);
    std::vector<Tensor> fg;
    {
        nn::NoGradGuard ng;
        fg = extractor.forward(gt.detach());
    }
    Tensor total = nn::l1_mean(fo[0], fg[0]);
    for (std::size_t k = 1; k < fo.size(); ++k) total = nn::add(total, nn::l1_mean(fo[k], fg[k]));
    return nn::scale(total, 1.0f / static_cast<float>(fo.size()));
}

GanLosses gan_losses(Discriminator& disc, const Tensor& real, const Tensor& fake) {
    if (real.shape() != fake.shape()) throw nn::NnError("gan_losses: shape mismatch");
    GanLosses g;
    g.d_loss = nn::add(nn::bce(disc.forward(real.detach()), 1.0f), nn::bce(disc.forward(fake.detach()), 0.0f));
    g.g_loss = nn::bce(disc.forward(fake), 1.0f);
    return g;
}

}  // namespace hdrt::net
