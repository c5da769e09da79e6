#include "hdrt/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "hdrt/data.hpp"
#include "hdrt/hdr.hpp"
#include "hdrt/imgio.hpp"
#include "hdrt/metrics.hpp"
#include "hdrt/net/train.hpp"
#include "hdrt/register.hpp"
#include "hdrt/tonemap.hpp"

namespace hdrt::cli {

namespace fs = std::filesystem;

namespace {

struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::exists(p)) throw MissingInput(what + " '" + p.string() + "' does not exist");
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

fs::path manifest_file(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.json" : p; }

data::Manifest open_manifest(const fs::path& p) {
    const fs::path m = manifest_file(p);
    require_file(m, "manifest");
    return data::load_manifest(m);
}

void write_radiance(const RadianceImage& img, const fs::path& path) {
    const auto f = io::format_from_path(path);
    if (f != io::Format::pfm && f != io::Format::rgbe)
        throw std::runtime_error("'" + path.string() + "': radiance output needs a .pfm or .hdr extension");
    io::write_image(img, path, f);
}

// ---------------------------------------------------------------- training flags

struct TrainFlags {
    std::string config;
    std::vector<int> widths;
    int crop = 0, batch = 0, steps = 0, ir_steps = 0, log_every = 0;
    double lr = 0, alpha = 0, beta = 0;
    long halve_every = 0;
    std::uint64_t seed = 0;
    std::map<std::string, CLI::Option*> opts;

    void add(CLI::App* app, bool with_beta) {
        opts["config"] = app->add_option("--config", config, "Training config JSON (flags override its keys)");
        opts["widths"] = app->add_option("--widths", widths, "Four encoder widths, e.g. 8 16 32 64")->expected(4);
        opts["crop"] = app->add_option("--crop", crop, "Square crop size, multiple of 16 (default 64)");
        opts["batch"] = app->add_option("--batch", batch, "Batch size (default 8)");
        opts["steps"] = app->add_option("--steps", steps, "HDR-stage optimizer steps (default 2000)");
        opts["ir_steps"] = app->add_option("--ir-steps", ir_steps, "IR-stage optimizer steps (default 2000)");
        opts["lr"] = app->add_option("--lr", lr, "Adam learning rate (default 1e-3)");
        opts["halve_every"] = app->add_option("--halve-every", halve_every, "Halve the learning rate every N steps");
        opts["alpha"] = app->add_option("--alpha", alpha, "Perceptual loss weight (default 1.0)");
        if (with_beta) opts["beta"] = app->add_option("--beta", beta, "Adversarial loss weight (default 1e-5)");
        opts["log_every"] = app->add_option("--log-every", log_every, "Progress/log interval in steps (default 10)");
        opts["seed"] = app->add_option("--seed", seed, "Random seed (required)")->required();
    }

    bool given(const std::string& k) const {
        auto it = opts.find(k);
        return it != opts.end() && it->second->count() > 0;
    }

    net::TrainConfig resolve() const {
        net::TrainConfig c;
        if (given("config")) {
            require_file(config, "config");
            const auto bytes = io::read_file(config);
            c = net::TrainConfig::from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
        }
        if (given("widths")) std::copy(widths.begin(), widths.end(), c.widths.begin());
        if (given("crop")) c.crop = crop;
        if (given("batch")) c.batch = batch;
        if (given("steps")) c.steps = steps;
        if (given("ir_steps")) c.ir_steps = ir_steps;
        if (given("lr")) c.lr = lr;
        if (given("halve_every")) c.halve_every = halve_every;
        if (given("alpha")) c.weights.alpha = alpha;
        if (given("beta")) c.weights.beta = beta;
        if (given("log_every")) c.log_every = log_every;
        c.seed = seed;
        return c;
    }
};

net::StepHook progress(const std::string& tag, const net::TrainConfig& cfg, long total) {
    const int every = std::max(1, cfg.log_every);
    return [tag, every, total](long step, const net::LogRow& r) {
        if ((step + 1) % every == 0 || step + 1 == total)
            std::fprintf(stderr, "[%s] step %ld/%ld  l_pix %.5f  l_per %.5f  l_gan %.5f  lr %.3g\n", tag.c_str(),
                         step + 1, total, r.l_pix, r.l_per, r.l_gan, r.lr);
    };
}

// ---------------------------------------------------------------- report

struct CsvRow {
    std::string scene_id, exposure_class;
    double psnr, ssim, vsi;
};

std::vector<CsvRow> read_metric_csv(const fs::path& p) {
    require_file(p, "CSV");
    std::ifstream in(p);
    std::string line;
    if (!std::getline(in, line) || line != metrics::kCsvHeader)
        throw std::runtime_error("'" + p.string() + "': expected header '" + metrics::kCsvHeader + "'");
    std::vector<CsvRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[5];
        int k = 0;
        while (k < 5 && std::getline(ss, f[k], ',')) ++k;
        if (k != 5) throw std::runtime_error("'" + p.string() + "' line " + std::to_string(lineno) + ": 5 fields expected");
        try {
            rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
        } catch (const std::exception&) {
            throw std::runtime_error("'" + p.string() + "' line " + std::to_string(lineno) + ": bad number");
        }
        data::parse_exposure_class(f[1]);
    }
    return rows;
}

std::string report_csv(const std::vector<CsvRow>& rows) {
    struct Acc {
        double p = 0, s = 0, v = 0;
        int n = 0;
    };
    Acc over, under, all;
    for (const auto& r : rows) {
        for (Acc* a : {&all, r.exposure_class == "over" ? &over : r.exposure_class == "under" ? &under : nullptr}) {
            if (!a) continue;
            a->p += r.psnr;
            a->s += r.ssim;
            a->v += r.vsi;
            ++a->n;
        }
    }
    std::string out = "group,count,pu_psnr,pu_ssim,pu_vsi\n";
    const std::pair<const char*, Acc*> groups[] = {{"over", &over}, {"under", &under}, {"all", &all}};
    for (auto [name, a] : groups) {
        const double nan = std::nan("");
        out += std::string(name) + "," + std::to_string(a->n) + "," + net::format_metric(a->n ? a->p / a->n : nan) +
               "," + net::format_metric(a->n ? a->s / a->n : nan) + "," +
               net::format_metric(a->n ? a->v / a->n : nan) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------- subcommands

struct Cli {
    CLI::App app{"IR-guided HDR imaging toolkit", "hdrt"};

    // gen-data
    int gd_n = 0;
    std::uint64_t gd_seed = 0;
    std::string gd_out, gd_config, gd_crf;
    int gd_width = 0, gd_height = 0, gd_objects = 0;
    double gd_decor = 0, gd_parallax = 0, gd_noise = 0;
    CLI::App* gen_data = nullptr;
    std::map<std::string, CLI::Option*> gd_opts;

    // merge
    std::vector<std::string> mg_inputs;
    std::vector<double> mg_times;
    std::string mg_out, mg_crf, mg_save_crf, mg_mask;
    double mg_lambda = hdr::kDefaultLambda;
    int mg_samples = 0;
    CLI::App* merge = nullptr;

    // register
    std::string rg_rgb, rg_ir, rg_pairs, rg_out_rgb, rg_out_ir, rg_out_h;
    CLI::App* reg = nullptr;

    // tonemap
    std::string tm_in, tm_out;
    tonemap::DurandParams tm_params;
    CLI::App* tmo = nullptr;

    // metrics
    std::string mt_test, mt_ref, mt_id = "scene", mt_class = "well", mt_out;
    double mt_peak = metrics::kDefaultPeakLuminance;
    CLI::App* mets = nullptr;

    // train-ir / train-hdr
    std::string ti_data, ti_out, ti_log;
    TrainFlags ti_flags;
    CLI::App* train_ir = nullptr;
    std::string th_data, th_out, th_log, th_init, th_variant = "full";
    TrainFlags th_flags;
    CLI::App* train_hdr = nullptr;

    // infer
    std::string if_model, if_sdr, if_ir, if_pairs, if_out;
    CLI::App* inf = nullptr;

    // ablate / sweep
    std::string ab_data, ab_out, ab_per_scene;
    std::vector<std::string> ab_variants;
    TrainFlags ab_flags;
    CLI::App* ablate = nullptr;
    std::string sw_data, sw_out;
    TrainFlags sw_flags;
    CLI::App* sweep = nullptr;

    // report
    std::vector<std::string> rp_inputs;
    std::string rp_out;
    CLI::App* report = nullptr;

    Cli() {
        app.require_subcommand(1);

        gen_data = app.add_subcommand("gen-data", "Generate a synthetic RGB/IR/HDR dataset with manifest.json");
        gen_data->add_option("--n", gd_n, "Number of scenes")->required()->check(CLI::PositiveNumber);
        gen_data->add_option("--seed", gd_seed, "Dataset seed (required)")->required();
        gen_data->add_option("--out", gd_out, "Output directory")->required();
        gd_opts["config"] = gen_data->add_option("--config", gd_config, "Generator config JSON (flags override)");
        gd_opts["width"] = gen_data->add_option("--width", gd_width, "Scene width in pixels (default 56)");
        gd_opts["height"] = gen_data->add_option("--height", gd_height, "Scene height in pixels (default 56)");
        gd_opts["objects"] = gen_data->add_option("--objects", gd_objects, "Objects per scene (default 6)");
        gd_opts["decor"] = gen_data->add_option("--decorrelated", gd_decor,
                                                "Fraction of objects with radiance-independent temperature (default 0.2)");
        gd_opts["parallax"] = gen_data->add_option("--max-parallax", gd_parallax,
                                                   "Maximum RGB/IR corner displacement in pixels (default 8)");
        gd_opts["noise"] = gen_data->add_option("--noise", gd_noise, "Sensor noise sigma in code units (default 0)");
        gd_opts["crf"] = gen_data->add_option("--crf", gd_crf, "Camera response: linear or gamma (default linear)");

        merge = app.add_subcommand("merge", "Merge an exposure bracket into a radiance map");
        merge->add_option("--inputs", mg_inputs, "SDR frames (PNG/PPM), increasing exposure")->required();
        merge->add_option("--times", mg_times, "Exposure times in seconds (default: image sidecars)");
        merge->add_option("--out", mg_out, "Output radiance (.pfm or .hdr)")->required();
        merge->add_option("--crf", mg_crf, "Response curve JSON to use instead of recovering one");
        merge->add_option("--save-crf", mg_save_crf, "Write the recovered response curve JSON here");
        merge->add_option("--lambda", mg_lambda, "Smoothness weight for response recovery (default 50)");
        merge->add_option("--samples", mg_samples, "Pixel samples for response recovery (default 4096, or every pixel of smaller frames)");
        merge->add_option("--saturated-mask", mg_mask, "Write the zero-weight pixel mask as PNG");

        reg = app.add_subcommand("register", "Warp an IR frame onto an RGB frame and crop to the overlap");
        reg->add_option("--rgb", rg_rgb, "RGB frame (PNG/PPM)")->required();
        reg->add_option("--ir", rg_ir, "IR frame (PGM16)")->required();
        reg->add_option("--pairs", rg_pairs, "Correspondence JSON {pairs: [[ir_x, ir_y, rgb_x, rgb_y], ...]}")
            ->required();
        reg->add_option("--out-rgb", rg_out_rgb, "Cropped RGB output")->required();
        reg->add_option("--out-ir", rg_out_ir, "Registered, cropped IR output (PGM16)")->required();
        reg->add_option("--out-homography", rg_out_h, "Write the fitted IR->RGB homography JSON");

        tmo = app.add_subcommand("tonemap", "Durand bilateral tone mapping to PNG");
        tmo->add_option("--in", tm_in, "Input radiance (.pfm or .hdr)")->required();
        tmo->add_option("--out", tm_out, "Output PNG/PPM")->required();
        tmo->add_option("--sigma-s", tm_params.sigma_s, "Spatial sigma in pixels (default 2% of the diagonal)");
        tmo->add_option("--sigma-r", tm_params.sigma_r, "Range sigma in log10 units (default 0.4)");
        tmo->add_option("--contrast", tm_params.target_contrast, "Target base contrast in log10 units (default 1.5)");
        tmo->add_option("--saturation", tm_params.saturation, "Colour saturation exponent (default 0.6)");
        tmo->add_option("--gamma", tm_params.gamma, "Display gamma (default 2.2)");

        mets = app.add_subcommand("metrics", "pu-PSNR, pu-SSIM and pu-VSI of a test radiance map");
        mets->add_option("--test", mt_test, "Test radiance (.pfm or .hdr)")->required();
        mets->add_option("--ref", mt_ref, "Reference radiance (.pfm or .hdr)")->required();
        mets->add_option("--scene-id", mt_id, "Scene id written to the CSV (default 'scene')");
        mets->add_option("--class", mt_class, "Exposure class written to the CSV: over, under or well (default well)");
        mets->add_option("--peak", mt_peak, "Display peak luminance in cd/m2 (default 1000)");
        mets->add_option("--out", mt_out, "CSV output (default stdout)");

        train_ir = app.add_subcommand("train-ir", "Stage 1: train the IR->RGB branch of the full model");
        train_ir->add_option("--data", ti_data, "Dataset directory or manifest.json")->required();
        train_ir->add_option("--out", ti_out, "Output checkpoint base path")->required();
        train_ir->add_option("--log", ti_log, "Loss log CSV");
        ti_flags.add(train_ir, false);

        train_hdr = app.add_subcommand("train-hdr", "Stage 2: train the HDR branch of one variant");
        train_hdr->add_option("--data", th_data, "Dataset directory or manifest.json")->required();
        train_hdr->add_option("--out", th_out, "Output checkpoint base path")->required();
        train_hdr->add_option("--variant", th_variant, "rgb, pixel, combined or full (default full)");
        train_hdr->add_option("--init", th_init, "Checkpoint from train-ir (required for the full variant)");
        train_hdr->add_option("--log", th_log, "Loss log CSV");
        th_flags.add(train_hdr, true);

        inf = app.add_subcommand("infer", "Reconstruct HDR radiance from one SDR frame (and IR)");
        inf->add_option("--model", if_model, "Checkpoint base path")->required();
        inf->add_option("--sdr", if_sdr, "SDR frame (PNG/PPM)")->required();
        inf->add_option("--ir", if_ir, "IR frame (PGM16); needed for every variant but rgb");
        inf->add_option("--pairs", if_pairs, "Correspondences to register the IR frame first");
        inf->add_option("--out", if_out, "Output radiance (.pfm or .hdr)")->required();

        ablate = app.add_subcommand("ablate", "Train and evaluate the rgb/pixel/combined/full variants");
        ablate->add_option("--data", ab_data, "Dataset directory or manifest.json")->required();
        ablate->add_option("--out", ab_out, "Ablation CSV")->required();
        ablate->add_option("--variants", ab_variants, "Subset of variants (default all four)");
        ablate->add_option("--per-scene", ab_per_scene, "Directory for per-scene metric CSVs (<variant>.csv)");
        ab_flags.add(ablate, true);

        sweep = app.add_subcommand("sweep", "alpha/beta grid search for the full variant");
        sweep->add_option("--data", sw_data, "Dataset directory or manifest.json")->required();
        sweep->add_option("--out", sw_out, "Sweep CSV")->required();
        sw_flags.add(sweep, false);

        report = app.add_subcommand("report", "Per-class means of per-scene metric CSVs");
        report->add_option("--inputs", rp_inputs, "Per-scene metric CSVs")->required();
        report->add_option("--out", rp_out, "Report CSV (default stdout)");
    }

    int dispatch() {
        if (gen_data->parsed()) return do_gen_data();
        if (merge->parsed()) return do_merge();
        if (reg->parsed()) return do_register();
        if (tmo->parsed()) return do_tonemap();
        if (mets->parsed()) return do_metrics();
        if (train_ir->parsed()) return do_train_ir();
        if (train_hdr->parsed()) return do_train_hdr();
        if (inf->parsed()) return do_infer();
        if (ablate->parsed()) return do_ablate();
        if (sweep->parsed()) return do_sweep();
        if (report->parsed()) return do_report();
        return kExitUsage;
    }

    int do_gen_data() {
        data::GeneratorConfig cfg;
        auto given = [&](const char* k) { return gd_opts[k]->count() > 0; };
        if (given("config")) {
            require_file(gd_config, "config");
            const auto bytes = io::read_file(gd_config);
            cfg = data::GeneratorConfig::from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
        }
        if (given("width")) cfg.width = gd_width;
        if (given("height")) cfg.height = gd_height;
        if (given("objects")) cfg.object_count = gd_objects;
        if (given("decor")) cfg.decorrelated_fraction = gd_decor;
        if (given("parallax")) cfg.max_parallax = gd_parallax;
        if (given("noise")) cfg.noise_sigma = gd_noise;
        if (given("crf")) cfg.crf = gd_crf;
        cfg.validate();
        const auto m = data::build_dataset(gd_n, gd_out, cfg, gd_seed);
        std::fprintf(stderr, "wrote %zu scenes (%zu train, %zu val) to %s\n", m.scenes.size(), m.train.size(),
                     m.val.size(), gd_out.c_str());
        return kExitOk;
    }

    int do_merge() {
        std::vector<SdrImage> frames;
        for (const auto& p : mg_inputs) {
            require_file(p, "input frame");
            frames.push_back(io::read_sdr(p));
        }
        if (!mg_times.empty()) {
            if (mg_times.size() != frames.size())
                throw CLI::ValidationError("--times", "needs one value per input frame");
            for (std::size_t i = 0; i < frames.size(); ++i) frames[i].set_exposure_time(mg_times[i]);
        }
        const hdr::Bracket bracket(std::move(frames));
        hdr::CameraResponse resp;
        if (!mg_crf.empty()) {
            require_file(mg_crf, "response curve");
            resp = hdr::load_crf(mg_crf);
        } else {
            resp = hdr::recover_crf(bracket, mg_lambda, mg_samples);
        }
        if (!mg_save_crf.empty()) hdr::save_crf(resp, mg_save_crf);
        const auto merged = hdr::merge_brackets(bracket, resp);
        write_radiance(merged.radiance, mg_out);
        if (!mg_mask.empty()) {
            SdrImage m(merged.saturated.width(), merged.saturated.height());
            for (std::size_t i = 0; i < merged.saturated.size(); ++i)
                for (int c = 0; c < 3; ++c) m.samples()[3 * i + c] = merged.saturated.samples()[i] ? 255 : 0;
            io::write_image(m, mg_mask, io::format_from_path(mg_mask));
        }
        std::fprintf(stderr, "merged %zu frames, %.4f of pixels saturated in every frame\n", bracket.size(),
                     merged.saturated_fraction());
        return kExitOk;
    }

    int do_register() {
        require_file(rg_rgb, "RGB frame");
        require_file(rg_ir, "IR frame");
        require_file(rg_pairs, "correspondence file");
        const SdrImage rgb = io::read_sdr(rg_rgb);
        const IrImage ir = io::read_ir(rg_ir);
        const auto fit = reg::estimate_homography(reg::load_correspondences(rg_pairs));
        const auto warped = reg::warp_image(ir, fit.h, rgb.width(), rgb.height());
        const auto pair = reg::overlap_crop(rgb, IrImage(warped.image, ir.calib_min(), ir.calib_max()), warped.valid);
        io::write_image(pair.rgb, rg_out_rgb, io::format_from_path(rg_out_rgb));
        io::write_image(pair.ir, rg_out_ir, io::Format::pgm16);
        if (!rg_out_h.empty()) reg::save_homography(fit.h, rg_out_h);
        std::fprintf(stderr, "reprojection rmse %.3g px, overlap %dx%d at (%d, %d)\n", fit.rmse, pair.rect.width,
                     pair.rect.height, pair.rect.x, pair.rect.y);
        return kExitOk;
    }

    int do_tonemap() {
        require_file(tm_in, "input radiance");
        const SdrImage out = tonemap::durand_tonemap(io::read_radiance(tm_in), tm_params);
        io::write_image(out, tm_out, io::format_from_path(tm_out));
        return kExitOk;
    }

    int do_metrics() {
        require_file(mt_test, "test image");
        require_file(mt_ref, "reference image");
        data::parse_exposure_class(mt_class);
        const auto r = metrics::evaluate(io::read_radiance(mt_test), io::read_radiance(mt_ref), {}, mt_peak);
        const std::string csv = std::string(metrics::kCsvHeader) + "\n" + metrics::csv_row(mt_id, mt_class, r) + "\n";
        if (mt_out.empty())
            std::cout << csv;
        else
            write_text(mt_out, csv);
        return kExitOk;
    }

    static std::vector<net::Sample> samples(const data::Manifest& m, const std::vector<std::string>& ids,
                                            const net::TrainConfig& cfg, const char* split) {
        if (ids.empty()) throw std::runtime_error(std::string("dataset has an empty ") + split + " split");
        return net::load_samples(m, ids, cfg.crop);
    }

    int do_train_ir() {
        const auto cfg = ti_flags.resolve();
        const auto m = open_manifest(ti_data);
        const auto train = samples(m, m.train, cfg, "train");
        net::Model model(net::Variant::full, cfg.widths, cfg.seed);
        model.e0 = net::median_radiance(train);
        const auto log = net::train_ir_branch(model, train, cfg, progress("train-ir", cfg, cfg.ir_steps));
        mark_ir_frozen(model);
        model.save(ti_out);
        if (!ti_log.empty()) log.write_csv(ti_log, cfg.log_every);
        std::fprintf(stderr, "IR branch: first-epoch loss %.5f, final-epoch loss %.5f\n", log.first_epoch_loss,
                     log.final_epoch_loss);
        return kExitOk;
    }

    int do_train_hdr() {
        const auto cfg = th_flags.resolve();
        const net::Variant v = net::parse_variant(th_variant);
        const auto m = open_manifest(th_data);
        const auto train = samples(m, m.train, cfg, "train");
        std::unique_ptr<net::Model> model;
        if (!th_init.empty()) {
            require_file(th_init + ".hdr.json", "checkpoint");
            model = net::Model::load(th_init);
            if (model->variant() != v)
                throw std::runtime_error("--init holds a '" + net::to_string(model->variant()) +
                                         "' model, not '" + th_variant + "'");
            if (v == net::Variant::full) mark_ir_frozen(*model);
        } else if (v == net::Variant::full) {
            throw CLI::ValidationError("--init", "the full variant needs a checkpoint from train-ir");
        } else {
            model = std::make_unique<net::Model>(v, cfg.widths, cfg.seed);
            model->e0 = net::median_radiance(train);
        }
        const auto log = net::train_hdr_branch(*model, train, cfg, nullptr, progress("train-hdr", cfg, cfg.steps));
        model->save(th_out);
        if (!th_log.empty()) log.write_csv(th_log, cfg.log_every);
        std::fprintf(stderr, "HDR branch: first-epoch loss %.5f, final-epoch loss %.5f\n", log.first_epoch_loss,
                     log.final_epoch_loss);
        return kExitOk;
    }

    int do_infer() {
        require_file(if_model + ".hdr.json", "checkpoint");
        require_file(if_sdr, "SDR frame");
        auto model = net::Model::load(if_model);
        const SdrImage sdr = io::read_sdr(if_sdr);
        std::optional<IrImage> ir;
        if (!if_ir.empty()) {
            require_file(if_ir, "IR frame");
            ir = io::read_ir(if_ir);
            if (!if_pairs.empty()) {
                require_file(if_pairs, "correspondence file");
                const auto fit = reg::estimate_homography(reg::load_correspondences(if_pairs));
                const auto w = reg::warp_image(*ir, fit.h, sdr.width(), sdr.height());
                ir = IrImage(w.image, ir->calib_min(), ir->calib_max());
            }
        } else if (model->uses_ir()) {
            throw CLI::ValidationError("--ir", "the '" + net::to_string(model->variant()) + "' model needs an IR frame");
        }
        const RadianceImage out = net::infer(*model, sdr, model->uses_ir() ? &*ir : nullptr);
        write_radiance(out, if_out);
        return kExitOk;
    }

    int do_ablate() {
        const auto cfg = ab_flags.resolve();
        std::vector<net::Variant> variants;
        for (const auto& s : ab_variants) variants.push_back(net::parse_variant(s));
        if (variants.empty()) variants.assign(net::kAllVariants.begin(), net::kAllVariants.end());
        const auto m = open_manifest(ab_data);
        const auto train = samples(m, m.train, cfg, "train");
        const auto val = samples(m, m.val, cfg, "val");
        std::vector<net::VariantResult> results;
        for (net::Variant v : variants) {
            std::fprintf(stderr, "[ablate] training %s\n", net::to_string(v).c_str());
            auto r = net::run_ablation(train, val, cfg, {v});
            std::fprintf(stderr, "[ablate] %s: all pu-PSNR %s\n", net::to_string(v).c_str(),
                         net::format_metric(r[0].groups.all.pu_psnr).c_str());
            results.push_back(std::move(r[0]));
        }
        write_text(ab_out, net::ablation_csv(results));
        if (!ab_per_scene.empty()) {
            for (const auto& r : results) {
                std::string csv = std::string(metrics::kCsvHeader) + "\n";
                for (const auto& row : r.rows)
                    csv += metrics::csv_row(row.scene_id, data::to_string(row.exposure_class), row.report) + "\n";
                write_text(fs::path(ab_per_scene) / (net::to_string(r.variant) + ".csv"), csv);
            }
        }
        return kExitOk;
    }

    int do_sweep() {
        const auto cfg = sw_flags.resolve();
        const auto m = open_manifest(sw_data);
        const auto cells = net::run_sweep(samples(m, m.train, cfg, "train"), samples(m, m.val, cfg, "val"), cfg);
        write_text(sw_out, net::sweep_csv(cells));
        return kExitOk;
    }

    int do_report() {
        std::vector<CsvRow> rows;
        for (const auto& p : rp_inputs) {
            auto r = read_metric_csv(p);
            rows.insert(rows.end(), r.begin(), r.end());
        }
        const std::string csv = report_csv(rows);
        if (rp_out.empty())
            std::cout << csv;
        else
            write_text(rp_out, csv);
        return kExitOk;
    }
};

}  // namespace

int run(int argc, const char* const* argv) {
    Cli cli;
    try {
        cli.app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return cli.app.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.app.exit(e);
        return kExitUsage;
    }
    try {
        return cli.dispatch();
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"hdrt"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hdrt::cli
