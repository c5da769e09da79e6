#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hdrt/nn/layers.hpp"

namespace hdrt::net {

using nn::Tensor;

struct UNetSpec {
    int in_channels = 3;
    int out_channels = 3;
    std::array<int, 4> widths{8, 16, 32, 64};
    /// Encoder levels k in {0..3} whose IR features are concatenated before
    /// downsampling module k+1.
    std::vector<int> fusion_points;
    /// Channel widths of the IR features offered at each level.
    std::array<int, 4> ir_widths{8, 16, 32, 64};

    static UNetSpec full_scale();
    bool fuses(int level) const;
    void validate() const;
    nlohmann::json to_json() const;
    static UNetSpec from_json(const nlohmann::json& j);
};

/// Encoder features x1..x4 (full, 1/2, 1/4, 1/8 resolution).
using Features = std::array<Tensor, 4>;

/// Four downsampling and four upsampling modules with classic skips.
class UNet : public nn::Module {
public:
    UNet(const UNetSpec& spec, std::uint64_t seed);

    /// `ir` must be given exactly when the UNetSpec has fusion points.
    Tensor forward(const Tensor& x, const Features* ir = nullptr);
    /// Input layer and the first three downsampling modules.
    Features encode_prefix(const Tensor& x);

    const UNetSpec& spec() const { return spec_; }
    /// Parameters of the input layer and downsampling modules 1-3.
    std::vector<nn::NamedTensor> prefix_parameters() const;
    void freeze_prefix();
    /// Puts only the prefix layers in eval (running-statistics) mode.
    void set_prefix_training(bool on);

private:
    UNetSpec spec_;
    nn::Rng rng_;
    nn::DoubleConv inc_;
    nn::Down d1_, d2_, d3_, d4_;
    nn::Up u1_, u2_, u3_, u4_;
    nn::Conv2d outc_;
};

/// Strided patch classifier; sigmoid output per patch (receptive field 31 px).
class Discriminator : public nn::Module {
public:
    Discriminator(int in_channels, std::uint64_t seed);
    Tensor forward(const Tensor& x);
    static constexpr int kReceptiveField = 31;

private:
    nn::Rng rng_;
    nn::Conv2d c1_, c2_, c3_, c4_;
};

/// Fixed random-weight three-stage feature pyramid used by the perceptual loss.
class FeatureExtractor : public nn::Module {
public:
    explicit FeatureExtractor(int in_channels = 3, std::uint64_t seed = 0x5eed);
    std::vector<Tensor> forward(const Tensor& x);

private:
    nn::Rng rng_;
    nn::Conv2d c1_, c2_, c3_;
};

enum class Variant { rgb, pixel, combined, full };
std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
inline constexpr std::array<Variant, 4> kAllVariants = {Variant::rgb, Variant::pixel, Variant::combined,
                                                        Variant::full};

/// One of the ablation models. `hdr` maps SDR (+IR) to log-encoded HDR; `ir`
/// exists for the two-branch variants and maps IR to RGB.
class Model {
public:
    Model(Variant v, const std::array<int, 4>& widths, std::uint64_t seed);

    Variant variant() const { return variant_; }
    bool uses_ir() const { return variant_ != Variant::rgb; }

    /// sdr: (n,3,h,w) in [0,1]; ir: (n,1,h,w) normalized, or nullptr.
    Tensor forward(const Tensor& sdr, const Tensor* ir);
    /// Parameters that take part in forward() and are not frozen.
    std::vector<Tensor> trainable() const;
    void train(bool on);

    UNet& hdr() { return *hdr_; }
    const UNet& hdr() const { return *hdr_; }
    UNet* ir() { return ir_.get(); }
    const UNet* ir() const { return ir_.get(); }
    std::size_t parameter_count() const;

    /// Median training radiance used by the log output encoding.
    double e0 = 1.0;

    void save(const std::string& base) const;
    static std::unique_ptr<Model> load(const std::string& base);

private:
    Variant variant_;
    std::array<int, 4> widths_;
    std::unique_ptr<UNet> hdr_;
    std::unique_ptr<UNet> ir_;
    bool ir_frozen_ = false;

    friend void mark_ir_frozen(Model& m);
};

/// Freezes the IR prefix and switches it to eval mode (stage-2 contract).
void mark_ir_frozen(Model& m);

/// log(1 + E / e0) and its inverse (negative network outputs decode to 0).
float encode_radiance(float e, double e0);
float decode_radiance(float y, double e0);

}  // namespace hdrt::net
