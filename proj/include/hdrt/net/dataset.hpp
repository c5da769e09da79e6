#pragma once

#include <string>
#include <vector>

#include "hdrt/data.hpp"
#include "hdrt/image.hpp"
#include "hdrt/nn/tensor.hpp"

namespace hdrt::net {

/// One registered, cropped training/evaluation example. Planar (CHW) arrays.
struct Sample {
    std::string scene_id;
    data::ExposureClass exposure_class = data::ExposureClass::well;
    int width = 0;
    int height = 0;
    std::vector<float> sdr;  ///< 3 planes, codes / 255
    std::vector<float> ir;   ///< 1 plane, (T - calib_min) / (calib_max - calib_min)
    RadianceImage gt;        ///< linear radiance (interleaved)
    Mask saturated;          ///< 1 where every channel of the input frame is 255
};

/// Registers the scene's IR frame onto the input SDR frame using its
/// correspondences, restricts both to the valid overlap and takes a centred
/// crop x crop window (crop must be a multiple of 16).
Sample load_sample(const data::Manifest& manifest, const data::SceneRecord& record, int crop);

std::vector<Sample> load_samples(const data::Manifest& manifest, const std::vector<std::string>& ids, int crop);

/// Builds a sample straight from in-memory images that already share a grid.
Sample make_sample(const SdrImage& sdr, const IrImage& ir, const RadianceImage& gt, const std::string& id = "");

/// Median of all gt radiance samples (the output-encoding scale).
double median_radiance(const std::vector<Sample>& samples);

/// Batched tensors for samples[idx...].
nn::Tensor batch_sdr(const std::vector<Sample>& s, const std::vector<std::size_t>& idx);
nn::Tensor batch_ir(const std::vector<Sample>& s, const std::vector<std::size_t>& idx);
/// gt encoded as log(1 + E / e0), planar.
nn::Tensor batch_gt_log(const std::vector<Sample>& s, const std::vector<std::size_t>& idx, double e0);

}  // namespace hdrt::net
