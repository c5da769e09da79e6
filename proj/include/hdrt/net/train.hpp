#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <json.hpp>
#include <string>
#include <vector>

#include "hdrt/metrics.hpp"
#include "hdrt/net/dataset.hpp"
#include "hdrt/net/hdrtnet.hpp"
#include "hdrt/net/losses.hpp"

namespace hdrt::net {

struct TrainConfig {
    std::array<int, 4> widths{8, 16, 32, 64};
    int crop = 64;
    int batch = 8;
    int steps = 2000;     ///< HDR-stage (or joint) steps
    int ir_steps = 2000;  ///< IR->RGB pre-training steps (full variant)
    double lr = 1e-3;
    long halve_every = 20000;
    LossWeights weights;
    std::uint64_t seed = 0;
    int log_every = 10;

    /// Full-size network and the published optimizer settings.
    static TrainConfig full_scale();
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static TrainConfig from_json(const nlohmann::json& j);
};

struct LogRow {
    long step = 0;
    double l_pix = 0;
    double l_per = 0;
    double l_gan = 0;
    double lr = 0;
};

struct TrainLog {
    std::vector<LogRow> rows;     ///< every step
    double first_epoch_loss = 0;  ///< mean total loss over the first epoch
    double final_epoch_loss = 0;  ///< mean total loss over the last epoch
    double final_l1 = 0;          ///< L1 part of the last step's pixel loss

    /// CSV `step,l_pix,l_per,l_gan,lr`, one row per `every` steps (and the last).
    void write_csv(const std::string& path, int every = 1) const;
};

/// Optional per-step observer (step index, row).
using StepHook = std::function<void(long, const LogRow&)>;

/// Stage 1: IR -> RGB with pixel + alpha * perceptual loss. Trains the whole
/// IR U-Net in `model.ir()`.
TrainLog train_ir_branch(Model& model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                         const StepHook& hook = {});

/// HDR stage: pixel + alpha * perceptual + beta * GAN with alternating
/// discriminator updates (skipped when beta == 0). For the full variant the IR
/// prefix must already be frozen and is verified bit-identical afterwards.
/// `disc_out`, if given, receives the trained discriminator.
TrainLog train_hdr_branch(Model& model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                          std::unique_ptr<Discriminator>* disc_out = nullptr, const StepHook& hook = {});

/// Builds and trains one ablation variant end to end (e0 from `samples`).
std::unique_ptr<Model> train_variant(Variant v, const std::vector<Sample>& samples, const TrainConfig& cfg,
                                     TrainLog* ir_log = nullptr, TrainLog* hdr_log = nullptr);

/// Eval-mode prediction for a prepared sample.
RadianceImage predict(Model& model, const Sample& s);

/// Eval-mode prediction for arbitrary registered inputs (edge-padded to a
/// multiple of 16 internally). `ir` may be null only for the rgb variant.
RadianceImage infer(Model& model, const SdrImage& sdr, const IrImage* ir);

struct EvalRow {
    std::string scene_id;
    data::ExposureClass exposure_class;
    metrics::MetricReport report;
};

std::vector<EvalRow> evaluate(Model& model, const std::vector<Sample>& samples);

struct GroupMeans {
    double pu_psnr = 0, pu_ssim = 0, pu_vsi = 0;
    int count = 0;
};

/// Means over the over-exposed, under-exposed and all rows (NaN when empty).
struct GroupedMetrics {
    GroupMeans over, under, all;
};
GroupedMetrics group_means(const std::vector<EvalRow>& rows);

/// Pearson correlation between predicted and true luminance over pixels whose
/// input frame is saturated in all channels. NaN with fewer than 3 pixels.
double saturated_pearson(Model& model, const std::vector<Sample>& samples);

struct VariantResult {
    Variant variant;
    std::vector<EvalRow> rows;
    GroupedMetrics groups;
    double saturated_r = 0;
};

std::vector<VariantResult> run_ablation(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                        const TrainConfig& cfg,
                                        const std::vector<Variant>& variants = {kAllVariants.begin(),
                                                                                kAllVariants.end()});

inline constexpr const char* kAblationCsvHeader =
    "variant,over_pu_psnr,over_pu_ssim,over_pu_vsi,under_pu_psnr,under_pu_ssim,under_pu_vsi,all_pu_psnr,all_pu_ssim,"
    "all_pu_vsi";
std::string ablation_csv(const std::vector<VariantResult>& results);

struct SweepCell {
    double alpha = 0, beta = 0;
    GroupMeans all;
    bool argmax = false;
};

inline constexpr std::array<double, 3> kSweepAlphas = {0.1, 1.0, 10.0};
inline constexpr std::array<double, 3> kSweepBetas = {1e-6, 1e-5, 1e-4};

/// Trains the full variant for every (alpha, beta) cell; marks the best
/// all-scene pu-PSNR cell.
std::vector<SweepCell> run_sweep(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                 const TrainConfig& cfg);

inline constexpr const char* kSweepCsvHeader = "alpha,beta,pu_psnr,pu_ssim,pu_vsi,argmax";
std::string sweep_csv(const std::vector<SweepCell>& cells);

/// "%.6f", or "nan".
std::string format_metric(double v);

}  // namespace hdrt::net
