#include "hdrt/net/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "hdrt/imgio.hpp"
#include "hdrt/nn/optim.hpp"

namespace hdrt::net {

using nn::NnError;

TrainConfig TrainConfig::full_scale() {
    TrainConfig c;
    c.widths = {64, 128, 256, 512};
    c.lr = 4e-5;
    c.halve_every = 20000;
    return c;
}

nlohmann::json TrainConfig::to_json() const {
    return {{"widths", widths},     {"crop", crop},
            {"batch", batch},       {"steps", steps},
            {"ir_steps", ir_steps}, {"lr", lr},
            {"halve_every", halve_every},
            {"alpha", weights.alpha}, {"beta", weights.beta},
            {"seed", seed},         {"log_every", log_every}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.widths = j.value("widths", c.widths);
    c.crop = j.value("crop", c.crop);
    c.batch = j.value("batch", c.batch);
    c.steps = j.value("steps", c.steps);
    c.ir_steps = j.value("ir_steps", c.ir_steps);
    c.lr = j.value("lr", c.lr);
    c.halve_every = j.value("halve_every", c.halve_every);
    c.weights.alpha = j.value("alpha", c.weights.alpha);
    c.weights.beta = j.value("beta", c.weights.beta);
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    return c;
}

void TrainLog::write_csv(const std::string& path, int every) const {
    std::string out = "step,l_pix,l_per,l_gan,lr\n";
    char buf[160];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (every > 1 && r.step % every != 0 && i + 1 != rows.size()) continue;
        std::snprintf(buf, sizeof buf, "%ld,%.6g,%.6g,%.6g,%.6g\n", r.step, r.l_pix, r.l_per, r.l_gan, r.lr);
        out += buf;
    }
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(out.data()), out.size()));
}

namespace {

/// Endless stream of shuffled sample indices.
class BatchStream {
public:
    BatchStream(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) { refill(); }
    std::vector<std::size_t> next(int batch) {
        std::vector<std::size_t> out;
        for (int i = 0; i < batch; ++i) {
            if (pos_ == order_.size()) refill();
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void refill() {
        order_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }
    std::size_t n_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

void check_inputs(const std::vector<Sample>& samples, const TrainConfig& cfg) {
    if (samples.empty()) throw NnError("training: empty dataset");
    if (cfg.batch <= 0 || cfg.steps < 0 || cfg.ir_steps < 0) throw NnError("training: bad batch size or step count");
}

void check_finite(double v, const char* what, long step) {
    if (!std::isfinite(v))
        throw NnError(std::string("training: ") + what + " became non-finite at step " + std::to_string(step));
}

/// Mean of the first and last `epoch`-step windows of the total loss.
void summarize(TrainLog& log, const std::vector<double>& totals, std::size_t epoch) {
    if (totals.empty()) return;
    epoch = std::clamp<std::size_t>(epoch, 1, totals.size());
    double a = 0, b = 0;
    for (std::size_t i = 0; i < epoch; ++i) {
        a += totals[i];
        b += totals[totals.size() - 1 - i];
    }
    log.first_epoch_loss = a / epoch;
    log.final_epoch_loss = b / epoch;
}

int batch_size(const std::vector<Sample>& s, const TrainConfig& cfg) {
    return std::min<int>(cfg.batch, static_cast<int>(s.size()));
}

std::size_t epoch_steps(const std::vector<Sample>& s, int batch) { return (s.size() + batch - 1) / batch; }

}  // namespace

TrainLog train_ir_branch(Model& model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                         const StepHook& hook) {
    check_inputs(samples, cfg);
    UNet* ir = model.ir();
    if (!ir) throw NnError("train_ir_branch: variant has no IR branch");
    ir->unfreeze();
    ir->train(true);
    FeatureExtractor extractor;
    nn::Adam opt(ir->trainable(), {cfg.lr, 0.9, 0.999, 1e-8, cfg.halve_every});
    const int b = batch_size(samples, cfg);
    BatchStream stream(samples.size(), cfg.seed ^ 0x1d2c3b4aULL);

    TrainLog log;
    std::vector<double> totals;
    for (long step = 0; step < cfg.ir_steps; ++step) {
        const auto idx = stream.next(b);
        const Tensor x = batch_ir(samples, idx);
        const Tensor target = batch_sdr(samples, idx);
        const double lr = opt.lr();
        opt.zero_grad();
        const Tensor out = ir->forward(x);
        const Tensor l_pix = pixel_loss(out, target);
        const Tensor l_per = perceptual_loss(out, target, extractor);
        Tensor total = nn::add(l_pix, nn::scale(l_per, static_cast<float>(cfg.weights.alpha)));
        check_finite(total.item(), "IR loss", step);
        LogRow row{step, l_pix.item(), l_per.item(), 0.0, lr};
        {
            nn::NoGradGuard ng;
            log.final_l1 = nn::l1_mean(out.detach(), target).item();
        }
        total.backward();
        opt.step();
        totals.push_back(total.item());
        log.rows.push_back(row);
        if (hook) hook(step, row);
    }
    summarize(log, totals, epoch_steps(samples, b));
    ir->train(false);
    return log;
}

TrainLog train_hdr_branch(Model& model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                          std::unique_ptr<Discriminator>* disc_out, const StepHook& hook) {
    check_inputs(samples, cfg);
    std::vector<std::vector<float>> prefix_before;
    if (model.variant() == Variant::full) {
        for (auto& p : model.ir()->prefix_parameters()) {
            if (p.tensor.requires_grad())
                throw NnError("train_hdr_branch: IR prefix parameter '" + p.name + "' is not frozen");
            prefix_before.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
        }
    }
    model.train(true);
    FeatureExtractor extractor;
    const bool use_gan = cfg.weights.beta != 0.0;
    auto disc = std::make_unique<Discriminator>(3, cfg.seed + 17);
    const nn::AdamConfig acfg{cfg.lr, 0.9, 0.999, 1e-8, cfg.halve_every};
    nn::Adam opt_g(model.trainable(), acfg);
    nn::Adam opt_d(disc->trainable(), acfg);
    const int b = batch_size(samples, cfg);
    BatchStream stream(samples.size(), cfg.seed ^ 0x5a17ULL);

    TrainLog log;
    std::vector<double> totals;
    for (long step = 0; step < cfg.steps; ++step) {
        const auto idx = stream.next(b);
        const Tensor sdr = batch_sdr(samples, idx);
        const Tensor ir = batch_ir(samples, idx);
        const Tensor gt = batch_gt_log(samples, idx, model.e0);
        const double lr = opt_g.lr();
        opt_g.zero_grad();
        const Tensor out = model.forward(sdr, model.uses_ir() ? &ir : nullptr);
        const Tensor l_pix = pixel_loss(out, gt);
        const Tensor l_per = perceptual_loss(out, gt, extractor);
        Tensor total = nn::add(l_pix, nn::scale(l_per, static_cast<float>(cfg.weights.alpha)));
        double l_gan = 0.0;
        Tensor d_loss;
        if (use_gan) {
            GanLosses g = gan_losses(*disc, gt, out);
            l_gan = g.g_loss.item();
            total = nn::add(total, nn::scale(g.g_loss, static_cast<float>(cfg.weights.beta)));
            d_loss = g.d_loss;
        }
        check_finite(total.item(), "HDR loss", step);
        LogRow row{step, l_pix.item(), l_per.item(), l_gan, lr};
        {
            nn::NoGradGuard ng;
            log.final_l1 = nn::l1_mean(out.detach(), gt).item();
        }
        total.backward();
        opt_g.step();
        if (use_gan) {
            // Discriminator update on the same batch (1:1 alternation).
            disc->zero_grad();
            d_loss.backward();
            opt_d.step();
        }
        totals.push_back(total.item());
        log.rows.push_back(row);
        if (hook) hook(step, row);
    }
    summarize(log, totals, epoch_steps(samples, b));
    model.train(false);

    if (model.variant() == Variant::full) {
        const auto after = model.ir()->prefix_parameters();
        for (std::size_t k = 0; k < after.size(); ++k)
            if (!std::equal(prefix_before[k].begin(), prefix_before[k].end(), after[k].tensor.data().begin()))
                throw NnError("train_hdr_branch: frozen IR parameter '" + after[k].name + "' changed");
    }
    if (disc_out) *disc_out = std::move(disc);
    return log;
}

std::unique_ptr<Model> train_variant(Variant v, const std::vector<Sample>& samples, const TrainConfig& cfg,
                                     TrainLog* ir_log, TrainLog* hdr_log) {
    check_inputs(samples, cfg);
    auto model = std::make_unique<Model>(v, cfg.widths, cfg.seed);
    model->e0 = median_radiance(samples);
    if (v == Variant::full) {
        TrainLog l = train_ir_branch(*model, samples, cfg);
        if (ir_log) *ir_log = std::move(l);
        mark_ir_frozen(*model);
    }
    TrainLog l = train_hdr_branch(*model, samples, cfg);
    if (hdr_log) *hdr_log = std::move(l);
    return model;
}

namespace {

RadianceImage decode_output(const Tensor& out, int n_index, int w, int h, double e0) {
    RadianceImage img(w, h);
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    const float* p = out.data().data() + static_cast<std::size_t>(n_index) * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c) img.samples()[3 * i + c] = decode_radiance(p[c * plane + i], e0);
    return img;
}

}  // namespace

RadianceImage predict(Model& model, const Sample& s) {
    model.train(false);
    nn::NoGradGuard ng;
    const std::vector<Sample> one{s};
    const Tensor sdr = batch_sdr(one, {0});
    const Tensor ir = batch_ir(one, {0});
    const Tensor out = model.forward(sdr, model.uses_ir() ? &ir : nullptr);
    return decode_output(out, 0, s.width, s.height, model.e0);
}

RadianceImage infer(Model& model, const SdrImage& sdr, const IrImage* ir) {
    if (model.uses_ir() && !ir) throw NnError("infer: this model needs an IR frame");
    if (!model.uses_ir() && ir) throw NnError("infer: the rgb variant takes no IR frame");
    if (ir && (ir->width() != sdr.width() || ir->height() != sdr.height()))
        throw NnError("infer: IR frame is " + std::to_string(ir->width()) + "x" + std::to_string(ir->height()) +
                      ", SDR frame is " + std::to_string(sdr.width()) + "x" + std::to_string(sdr.height()));
    const int w = sdr.width(), h = sdr.height();
    if (w == 0 || h == 0) throw NnError("infer: empty image");
    const int pw = (w + 15) / 16 * 16, ph = (h + 15) / 16 * 16;
    // Edge-replicate padding up to the next multiple of 16.
    SdrImage ps(pw, ph, sdr.exposure_time());
    IrImage pi(pw, ph, 0.0f, ir ? ir->calib_min() : kDefaultCalibMin, ir ? ir->calib_max() : kDefaultCalibMax);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
            const int sx = std::min(x, w - 1), sy = std::min(y, h - 1);
            for (int c = 0; c < 3; ++c) ps.at(x, y, c) = sdr.at(sx, sy, c);
            if (ir) pi.at(x, y) = ir->at(sx, sy);
        }
    Sample s = make_sample(ps, pi, RadianceImage(pw, ph));
    const RadianceImage full = predict(model, s);
    return RadianceImage(crop(static_cast<const Raster<float>&>(full), 0, 0, w, h));
}

std::vector<EvalRow> evaluate(Model& model, const std::vector<Sample>& samples) {
    std::vector<EvalRow> rows;
    for (const auto& s : samples) {
        const RadianceImage pred = predict(model, s);
        rows.push_back({s.scene_id, s.exposure_class, metrics::evaluate(pred, s.gt, s.saturated)});
    }
    return rows;
}

GroupedMetrics group_means(const std::vector<EvalRow>& rows) {
    GroupedMetrics g;
    auto add = [](GroupMeans& m, const metrics::MetricReport& r) {
        m.pu_psnr += r.pu_psnr;
        m.pu_ssim += r.pu_ssim;
        m.pu_vsi += r.pu_vsi;
        ++m.count;
    };
    for (const auto& r : rows) {
        add(g.all, r.report);
        if (r.exposure_class == data::ExposureClass::over) add(g.over, r.report);
        if (r.exposure_class == data::ExposureClass::under) add(g.under, r.report);
    }
    for (GroupMeans* m : {&g.over, &g.under, &g.all}) {
        if (m->count == 0) {
            m->pu_psnr = m->pu_ssim = m->pu_vsi = std::nan("");
        } else {
            m->pu_psnr /= m->count;
            m->pu_ssim /= m->count;
            m->pu_vsi /= m->count;
        }
    }
    return g;
}

double saturated_pearson(Model& model, const std::vector<Sample>& samples) {
    std::vector<double> a, b;
    for (const auto& s : samples) {
        const RadianceImage pred = predict(model, s);
        for (std::size_t i = 0; i < s.saturated.size(); ++i) {
            if (!s.saturated.samples()[i]) continue;
            const float* p = pred.samples().data() + 3 * i;
            const float* g = s.gt.samples().data() + 3 * i;
            a.push_back(luminance(p[0], p[1], p[2]));
            b.push_back(luminance(g[0], g[1], g[2]));
        }
    }
    if (a.size() < 3) return std::nan("");
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0) || !(sbb > 0)) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<VariantResult> run_ablation(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                        const TrainConfig& cfg, const std::vector<Variant>& variants) {
    if (val.empty()) throw NnError("ablation: empty evaluation set");
    std::vector<VariantResult> out;
    for (Variant v : variants) {
        auto model = train_variant(v, train, cfg);
        VariantResult r;
        r.variant = v;
        r.rows = evaluate(*model, val);
        r.groups = group_means(r.rows);
        r.saturated_r = saturated_pearson(*model, val);
        out.push_back(std::move(r));
    }
    return out;
}

std::string format_metric(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string ablation_csv(const std::vector<VariantResult>& results) {
    std::string out = std::string(kAblationCsvHeader) + "\n";
    for (const auto& r : results) {
        out += to_string(r.variant);
        for (const GroupMeans* g : {&r.groups.over, &r.groups.under, &r.groups.all})
            out += "," + format_metric(g->pu_psnr) + "," + format_metric(g->pu_ssim) + "," + format_metric(g->pu_vsi);
        out += "\n";
    }
    return out;
}

std::vector<SweepCell> run_sweep(const std::vector<Sample>& train, const std::vector<Sample>& val,
                                 const TrainConfig& cfg) {
    if (val.empty()) throw NnError("sweep: empty evaluation set");
    std::vector<SweepCell> cells;
    for (double a : kSweepAlphas)
        for (double b : kSweepBetas) {
            TrainConfig c = cfg;
            c.weights = {a, b};
            auto model = train_variant(Variant::full, train, c);
            SweepCell cell;
            cell.alpha = a;
            cell.beta = b;
            cell.all = group_means(evaluate(*model, val)).all;
            cells.push_back(cell);
        }
    std::size_t best = 0;
    for (std::size_t i = 1; i < cells.size(); ++i)
        if (cells[i].all.pu_psnr > cells[best].all.pu_psnr) best = i;
    cells[best].argmax = true;
    return cells;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = std::string(kSweepCsvHeader) + "\n";
    char buf[64];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof buf, "%g,%g,", c.alpha, c.beta);
        out += buf + format_metric(c.all.pu_psnr) + "," + format_metric(c.all.pu_ssim) + "," +
               format_metric(c.all.pu_vsi) + "," + (c.argmax ? "1" : "0") + "\n";
    }
    return out;
}

}  // namespace hdrt::net
