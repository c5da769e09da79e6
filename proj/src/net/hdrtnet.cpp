#include "hdrt/net/hdrtnet.hpp"

#include <algorithm>
#include <cmath>

#include "hdrt/nn/checkpoint.hpp"

namespace hdrt::net {

using nn::NnError;

UNetSpec UNetSpec::full_scale() {
    UNetSpec s;
    s.widths = {64, 128, 256, 512};
    s.ir_widths = s.widths;
    return s;
}

bool UNetSpec::fuses(int level) const {
    return std::find(fusion_points.begin(), fusion_points.end(), level) != fusion_points.end();
}

void UNetSpec::validate() const {
    if (in_channels <= 0 || out_channels <= 0) throw NnError("unet: channel counts must be positive");
    for (int k = 0; k < 4; ++k) {
        if (widths[k] <= 0 || ir_widths[k] <= 0) throw NnError("unet: widths must be positive");
        if (k > 0 && widths[k] != 2 * widths[k - 1]) throw NnError("unet: widths must double by stage");
    }
    for (int f : fusion_points)
        if (f < 0 || f > 3) throw NnError("unet: fusion points must lie in {0,1,2,3}");
}

nlohmann::json UNetSpec::to_json() const {
    return {{"in_channels", in_channels},
            {"out_channels", out_channels},
            {"widths", widths},
            {"fusion_points", fusion_points},
            {"ir_widths", ir_widths}};
}

UNetSpec UNetSpec::from_json(const nlohmann::json& j) {
    UNetSpec s;
    s.in_channels = j.value("in_channels", s.in_channels);
    s.out_channels = j.value("out_channels", s.out_channels);
    s.widths = j.value("widths", s.widths);
    s.fusion_points = j.value("fusion_points", s.fusion_points);
    s.ir_widths = j.value("ir_widths", s.widths);
    s.validate();
    return s;
}

namespace {

int fused(const UNetSpec& s, int level, int c) { return s.fuses(level) ? c + s.ir_widths[level] : c; }

const UNetSpec& checked(const UNetSpec& s) {
    s.validate();
    return s;
}

}  // namespace

UNet::UNet(const UNetSpec& spec, std::uint64_t seed)
    : spec_(checked(spec)),
      rng_(seed),
      inc_(spec.in_channels, spec.widths[0], rng_),
      d1_(fused(spec, 0, spec.widths[0]), spec.widths[1], rng_),
      d2_(fused(spec, 1, spec.widths[1]), spec.widths[2], rng_),
      d3_(fused(spec, 2, spec.widths[2]), spec.widths[3], rng_),
      d4_(fused(spec, 3, spec.widths[3]), 2 * spec.widths[3], rng_),
      u1_(2 * spec.widths[3], spec.widths[3], spec.widths[3], rng_),
      u2_(spec.widths[3], spec.widths[2], spec.widths[2], rng_),
      u3_(spec.widths[2], spec.widths[1], spec.widths[1], rng_),
      u4_(spec.widths[1], spec.widths[0], spec.widths[0], rng_),
      outc_(spec.widths[0], spec.out_channels, 1, 1, 0, true, rng_) {
    register_module("inc", inc_);
    register_module("down1", d1_);
    register_module("down2", d2_);
    register_module("down3", d3_);
    register_module("down4", d4_);
    register_module("up1", u1_);
    register_module("up2", u2_);
    register_module("up3", u3_);
    register_module("up4", u4_);
    register_module("outc", outc_);
}

Tensor UNet::forward(const Tensor& x, const Features* ir) {
    if (x.rank() != 4 || x.dim(1) != spec_.in_channels)
        throw NnError("unet: expected (n, " + std::to_string(spec_.in_channels) + ", h, w) input, got " +
                      nn::shape_str(x.shape()));
    if (x.dim(2) % 16 || x.dim(3) % 16) throw NnError("unet: height and width must be multiples of 16");
    if (!spec_.fusion_points.empty() && !ir) throw NnError("unet: fusion network needs IR features");
    if (spec_.fusion_points.empty() && ir) throw NnError("unet: plain network does not accept IR features");

    auto fuse = [&](int level, const Tensor& h) {
        if (!spec_.fuses(level)) return h;
        return nn::concat_channels<float>({h, (*ir)[level]});
    };
    const Tensor x1 = inc_.forward(x);
    const Tensor x2 = d1_.forward(fuse(0, x1));
    const Tensor x3 = d2_.forward(fuse(1, x2));
    const Tensor x4 = d3_.forward(fuse(2, x3));
    const Tensor x5 = d4_.forward(fuse(3, x4));
    // Decoder skips carry HDR-branch features only.
    Tensor y = u1_.forward(x5, x4);
    y = u2_.forward(y, x3);
    y = u3_.forward(y, x2);
    y = u4_.forward(y, x1);
    return outc_.forward(y);
}

Features UNet::encode_prefix(const Tensor& x) {
    if (!spec_.fusion_points.empty()) throw NnError("unet: encode_prefix is defined for plain networks");
    Features f;
    f[0] = inc_.forward(x);
    f[1] = d1_.forward(f[0]);
    f[2] = d2_.forward(f[1]);
    f[3] = d3_.forward(f[2]);
    return f;
}

std::vector<nn::NamedTensor> UNet::prefix_parameters() const {
    std::vector<nn::NamedTensor> out;
    for (auto* m : std::initializer_list<const nn::Module*>{&inc_, &d1_, &d2_, &d3_}) {
        auto p = m->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

void UNet::freeze_prefix() {
    inc_.freeze();
    d1_.freeze();
    d2_.freeze();
    d3_.freeze();
}

void UNet::set_prefix_training(bool on) {
    inc_.train(on);
    d1_.train(on);
    d2_.train(on);
    d3_.train(on);
}

Discriminator::Discriminator(int in_channels, std::uint64_t seed)
    : rng_(seed),
      c1_(in_channels, 8, 3, 2, 1, true, rng_),
      c2_(8, 16, 3, 2, 1, true, rng_),
      c3_(16, 32, 3, 2, 1, true, rng_),
      c4_(32, 1, 3, 1, 1, true, rng_) {
    register_module("conv1", c1_);
    register_module("conv2", c2_);
    register_module("conv3", c3_);
    register_module("conv4", c4_);
}

Tensor Discriminator::forward(const Tensor& x) {
    using nn::relu;
    return nn::sigmoid(c4_.forward(relu(c3_.forward(relu(c2_.forward(relu(c1_.forward(x))))))));
}

FeatureExtractor::FeatureExtractor(int in_channels, std::uint64_t seed)
    : rng_(seed), c1_(in_channels, 8, 3, 1, 1, true, rng_), c2_(8, 16, 3, 1, 1, true, rng_),
      c3_(16, 32, 3, 1, 1, true, rng_) {
    register_module("conv1", c1_);
    register_module("conv2", c2_);
    register_module("conv3", c3_);
    freeze();
}

std::vector<Tensor> FeatureExtractor::forward(const Tensor& x) {
    std::vector<Tensor> f;
    f.push_back(nn::relu(c1_.forward(x)));
    f.push_back(nn::relu(c2_.forward(nn::maxpool2x2(f.back()))));
    f.push_back(nn::relu(c3_.forward(nn::maxpool2x2(f.back()))));
    return f;
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::rgb: return "rgb";
        case Variant::pixel: return "pixel";
        case Variant::combined: return "combined";
        case Variant::full: return "full";
    }
    return "full";
}

Variant parse_variant(const std::string& s) {
    for (Variant v : kAllVariants)
        if (to_string(v) == s) return v;
    throw NnError("unknown variant '" + s + "' (expected rgb, pixel, combined or full)");
}

namespace {

UNetSpec hdr_spec(Variant v, const std::array<int, 4>& widths) {
    UNetSpec s;
    s.widths = widths;
    s.ir_widths = widths;
    s.in_channels = v == Variant::pixel ? 4 : 3;
    s.out_channels = 3;
    if (v == Variant::combined || v == Variant::full) s.fusion_points = {0, 1, 2, 3};
    return s;
}

}  // namespace

Model::Model(Variant v, const std::array<int, 4>& widths, std::uint64_t seed) : variant_(v), widths_(widths) {
    hdr_ = std::make_unique<UNet>(hdr_spec(v, widths), seed);
    if (v == Variant::combined || v == Variant::full) {
        UNetSpec is;
        is.in_channels = 1;
        is.out_channels = 3;
        is.widths = widths;
        is.ir_widths = widths;
        ir_ = std::make_unique<UNet>(is, seed + 1);
    }
}

Tensor Model::forward(const Tensor& sdr, const Tensor* ir) {
    if (variant_ == Variant::rgb) {
        if (ir) throw NnError("model: the rgb variant takes no IR input");
        return hdr_->forward(sdr);
    }
    if (!ir) throw NnError("model: variant '" + to_string(variant_) + "' needs an IR input");
    if (ir->rank() != 4 || ir->dim(1) != 1 || ir->dim(0) != sdr.dim(0) || ir->dim(2) != sdr.dim(2) ||
        ir->dim(3) != sdr.dim(3))
        throw NnError("model: IR tensor " + nn::shape_str(ir->shape()) + " does not match SDR " +
                      nn::shape_str(sdr.shape()));
    if (variant_ == Variant::pixel) return hdr_->forward(nn::concat_channels<float>({sdr, *ir}));
    const Features f = ir_->encode_prefix(*ir);
    return hdr_->forward(sdr, &f);
}

std::vector<Tensor> Model::trainable() const {
    std::vector<Tensor> out = hdr_->trainable();
    if (ir_)
        for (auto& p : ir_->prefix_parameters())
            if (p.tensor.requires_grad()) out.push_back(p.tensor);
    return out;
}

void Model::train(bool on) {
    hdr_->train(on);
    if (ir_) {
        ir_->train(on);
        if (ir_frozen_) ir_->set_prefix_training(false);
    }
}

std::size_t Model::parameter_count() const {
    return hdr_->parameter_count() + (ir_ ? ir_->parameter_count() : 0);
}

void mark_ir_frozen(Model& m) {
    if (!m.ir_) throw NnError("model: variant has no IR branch");
    m.ir_->freeze_prefix();
    m.ir_->set_prefix_training(false);
    m.ir_frozen_ = true;
}

void Model::save(const std::string& base) const {
    nlohmann::json meta = {{"variant", to_string(variant_)},
                           {"widths", widths_},
                           {"e0", e0},
                           {"ir_frozen", ir_frozen_}};
    nn::save_checkpoint(*hdr_, base + ".hdr", meta);
    if (ir_) nn::save_checkpoint(*ir_, base + ".ir", meta);
}

std::unique_ptr<Model> Model::load(const std::string& base) {
    const auto meta = nn::read_checkpoint_meta(base + ".hdr");
    auto m = std::make_unique<Model>(parse_variant(meta.at("variant").get<std::string>()),
                                     meta.at("widths").get<std::array<int, 4>>(), 0);
    nn::load_checkpoint(*m->hdr_, base + ".hdr");
    if (m->ir_) {
        nn::load_checkpoint(*m->ir_, base + ".ir");
        m->ir_frozen_ = meta.value("ir_frozen", false);
    }
    m->e0 = meta.at("e0").get<double>();
    return m;
}

float encode_radiance(float e, double e0) { return static_cast<float>(std::log1p(std::max(e, 0.0f) / e0)); }

float decode_radiance(float y, double e0) {
    // Cap keeps decoded values finite for wild outputs.
    const double v = e0 * std::expm1(std::clamp(static_cast<double>(y), 0.0, 60.0));
    return static_cast<float>(std::min(v, 1e30));
}

}  // namespace hdrt::net
