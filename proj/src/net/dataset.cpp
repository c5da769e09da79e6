#include "hdrt/net/dataset.hpp"

#include <algorithm>

#include "hdrt/imgio.hpp"
#include "hdrt/net/hdrtnet.hpp"
#include "hdrt/register.hpp"

namespace hdrt::net {

Sample make_sample(const SdrImage& sdr, const IrImage& ir, const RadianceImage& gt, const std::string& id) {
    if (sdr.width() != ir.width() || sdr.height() != ir.height() || sdr.width() != gt.width() ||
        sdr.height() != gt.height())
        throw nn::NnError("sample: SDR, IR and gt sizes differ");
    Sample s;
    s.scene_id = id;
    s.width = sdr.width();
    s.height = sdr.height();
    const std::size_t n = sdr.pixel_count();
    s.sdr.resize(3 * n);
    s.saturated = Mask(s.width, s.height, 1);
    for (std::size_t i = 0; i < n; ++i) {
        bool all = true;
        for (int c = 0; c < 3; ++c) {
            const auto v = sdr.samples()[3 * i + c];
            s.sdr[c * n + i] = v / 255.0f;
            all = all && v == 255;
        }
        s.saturated.samples()[i] = all ? 1 : 0;
    }
    const Plane norm = ir.normalized();
    s.ir.assign(norm.samples().begin(), norm.samples().end());
    s.gt = gt;
    s.exposure_class = data::classify_exposure(sdr);
    return s;
}

Sample load_sample(const data::Manifest& manifest, const data::SceneRecord& record, int size) {
    if (size <= 0 || size % 16) throw nn::NnError("sample: crop must be a positive multiple of 16");
    const SdrImage sdr = io::read_sdr(manifest.resolve(record.brackets.at(record.input_frame())));
    const IrImage ir = io::read_ir(manifest.resolve(record.ir));
    const RadianceImage gt = io::read_radiance(manifest.resolve(record.hdr_gt));
    const auto pairs = reg::load_correspondences(manifest.resolve(record.correspondences));
    const auto fit = reg::estimate_homography(pairs);
    const auto warped = reg::warp_image(ir, fit.h, sdr.width(), sdr.height());
    const IrImage ir_on_rgb(warped.image, ir.calib_min(), ir.calib_max());
    const reg::Rect r = reg::largest_valid_rectangle(warped.valid);
    if (r.width < size || r.height < size)
        throw nn::NnError("sample " + record.scene_id + ": overlap " + std::to_string(r.width) + "x" +
                          std::to_string(r.height) + " is smaller than the crop");
    const int x0 = r.x + (r.width - size) / 2, y0 = r.y + (r.height - size) / 2;
    Sample s = make_sample(SdrImage(crop(static_cast<const Raster<std::uint8_t>&>(sdr), x0, y0, size, size), sdr.exposure_time()),
                           IrImage(hdrt::crop(static_cast<const Raster<float>&>(ir_on_rgb), x0, y0, size, size),
                                   ir.calib_min(), ir.calib_max()),
                           RadianceImage(hdrt::crop(static_cast<const Raster<float>&>(gt), x0, y0, size, size)),
                           record.scene_id);
    s.exposure_class = record.exposure_class;
    return s;
}

std::vector<Sample> load_samples(const data::Manifest& manifest, const std::vector<std::string>& ids, int size) {
    std::vector<Sample> out;
    for (const auto& id : ids) out.push_back(load_sample(manifest, manifest.scene(id), size));
    return out;
}

double median_radiance(const std::vector<Sample>& samples) {
    std::vector<float> v;
    for (const auto& s : samples) v.insert(v.end(), s.gt.samples().begin(), s.gt.samples().end());
    if (v.empty()) throw nn::NnError("median_radiance: no samples");
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return std::max(static_cast<double>(*mid), 1e-6);
}

namespace {

void check_batch(const std::vector<Sample>& s, const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw nn::NnError("batch: empty index list");
    for (auto i : idx)
        if (s.at(i).width != s[idx[0]].width || s[i].height != s[idx[0]].height)
            throw nn::NnError("batch: samples differ in size");
}

}  // namespace

nn::Tensor batch_sdr(const std::vector<Sample>& s, const std::vector<std::size_t>& idx) {
    check_batch(s, idx);
    const auto& f = s[idx[0]];
    std::vector<float> v;
    for (auto i : idx) v.insert(v.end(), s[i].sdr.begin(), s[i].sdr.end());
    return nn::Tensor::from({static_cast<int>(idx.size()), 3, f.height, f.width}, std::move(v));
}

nn::Tensor batch_ir(const std::vector<Sample>& s, const std::vector<std::size_t>& idx) {
    check_batch(s, idx);
    const auto& f = s[idx[0]];
    std::vector<float> v;
    for (auto i : idx) v.insert(v.end(), s[i].ir.begin(), s[i].ir.end());
    return nn::Tensor::from({static_cast<int>(idx.size()), 1, f.height, f.width}, std::move(v));
}

nn::Tensor batch_gt_log(const std::vector<Sample>& s, const std::vector<std::size_t>& idx, double e0) {
    check_batch(s, idx);
    const auto& f = s[idx[0]];
    const std::size_t n = f.gt.pixel_count();
    std::vector<float> v;
    v.reserve(idx.size() * 3 * n);
    for (auto i : idx)
        for (int c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < n; ++p) v.push_back(encode_radiance(s[i].gt.samples()[3 * p + c], e0));
    return nn::Tensor::from({static_cast<int>(idx.size()), 3, f.height, f.width}, std::move(v));
}

}  // namespace hdrt::net
