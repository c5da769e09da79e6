#include "hdrt/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "hdrt/imgio.hpp"
#include "hdrt/kernels.hpp"

namespace hdrt::data {

namespace fs = std::filesystem;
using Rng = std::mt19937_64;

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::array<double, 3> random_color(Rng& rng, double spread) {
    std::array<double, 3> c;
    for (double& v : c) v = uniform(rng, 1.0 - spread, 1.0 + spread);
    const double y = luminance(static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2]));
    for (double& v : c) v /= y;
    return c;
}

struct Texture {
    double fx, fy, px, py, amp;
    double operator()(double x, double y) const { return 1.0 + amp * std::sin(fx * x + px) * std::sin(fy * y + py); }
};

Texture random_texture(Rng& rng) {
    return {uniform(rng, 0.08, 0.4), uniform(rng, 0.08, 0.4), uniform(rng, 0, 6.283), uniform(rng, 0, 6.283),
            uniform(rng, 0.1, 0.3)};
}

bool inside(const SceneObject& o, double x, double y) {
    const double dx = (x - o.cx) / o.rx, dy = (y - o.cy) / o.ry;
    return o.ellipse ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
}

void write_json(const fs::path& p, const nlohmann::json& j) {
    const std::string text = j.dump(2);
    io::write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON '" + p.string() + "': " + e.what());
    }
}

}  // namespace

void GeneratorConfig::validate() const {
    if (width <= 0 || height <= 0) throw DataError("generator: image size must be positive");
    if (!(radiance_min > 0.0) || !(radiance_max > radiance_min)) throw DataError("generator: bad radiance range");
    if (object_count < 0) throw DataError("generator: negative object count");
    if (decorrelated_fraction < 0.0 || decorrelated_fraction > 1.0)
        throw DataError("generator: decorrelated_fraction must be in [0, 1]");
    if (max_parallax < 0.0 || ir_blur_sigma < 0.0 || noise_sigma < 0.0)
        throw DataError("generator: negative parallax, blur or noise");
    if (exposures.size() < 2) throw DataError("generator: need at least two exposures");
    for (std::size_t i = 0; i < exposures.size(); ++i)
        if (!(exposures[i] > 0.0) || (i > 0 && !(exposures[i] > exposures[i - 1])))
            throw DataError("generator: exposures must be positive and strictly increasing");
    if (crf != "linear" && crf != "gamma") throw DataError("generator: crf must be 'linear' or 'gamma'");
    if (key_min > key_max) throw DataError("generator: key_min > key_max");
}

nlohmann::json GeneratorConfig::to_json() const {
    return {{"width", width},
            {"height", height},
            {"radiance_min", radiance_min},
            {"radiance_max", radiance_max},
            {"object_count", object_count},
            {"decorrelated_fraction", decorrelated_fraction},
            {"ir_blur_sigma", ir_blur_sigma},
            {"max_parallax", max_parallax},
            {"exposures", exposures},
            {"crf", crf},
            {"noise_sigma", noise_sigma},
            {"key_min", key_min},
            {"key_max", key_max}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.radiance_min = j.value("radiance_min", c.radiance_min);
    c.radiance_max = j.value("radiance_max", c.radiance_max);
    c.object_count = j.value("object_count", c.object_count);
    c.decorrelated_fraction = j.value("decorrelated_fraction", c.decorrelated_fraction);
    c.ir_blur_sigma = j.value("ir_blur_sigma", c.ir_blur_sigma);
    c.max_parallax = j.value("max_parallax", c.max_parallax);
    c.exposures = j.value("exposures", c.exposures);
    c.crf = j.value("crf", c.crf);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.key_min = j.value("key_min", c.key_min);
    c.key_max = j.value("key_max", c.key_max);
    c.validate();
    return c;
}

hdr::CameraResponse GeneratorConfig::response() const {
    return hdr::CameraResponse::uniform(crf == "gamma" ? hdr::Crf::power(2.2) : hdr::Crf::linear());
}

double correlated_temperature(double log10_luminance, const GeneratorConfig& cfg) {
    const double lo = std::log10(cfg.radiance_min), hi = std::log10(cfg.radiance_max);
    const double t = kTempMin + (kTempMax - kTempMin) * (log10_luminance - lo) / (hi - lo);
    return std::clamp(t, kTempMin, kTempMax);
}

Scene generate_scene(std::uint64_t seed, const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(seed);
    const int w = cfg.width, h = cfg.height;
    const int m = static_cast<int>(std::ceil(cfg.max_parallax)) + 8;
    const int cw = w + 2 * m, ch = h + 2 * m;
    const double lo = std::log10(cfg.radiance_min), hi = std::log10(cfg.radiance_max);
    const double key = uniform(rng, cfg.key_min, cfg.key_max);
    const double size = std::min(w, h);

    Scene s;
    s.margin = m;
    const auto sky_color = random_color(rng, 0.15);
    const Texture sky_tex = random_texture(rng);
    const double sky_top = key + uniform(rng, 0.5, 1.2), sky_bottom = key - uniform(rng, 0.3, 0.8);

    // Regular objects first, then a dark and a bright anchor on top so every
    // scene spans the configured radiance range.
    const int n = cfg.object_count;
    std::vector<Texture> textures;
    for (int i = 0; i < n; ++i) {
        SceneObject o;
        const bool dark_anchor = n >= 2 && i == n - 2, bright_anchor = n >= 2 && i == n - 1;
        const bool anchor = dark_anchor || bright_anchor;
        o.ellipse = uniform(rng, 0, 1) < 0.5;
        o.cx = uniform(rng, 0, w);
        o.cy = uniform(rng, 0, h);
        o.rx = size * (anchor ? uniform(rng, 0.06, 0.12) : uniform(rng, 0.08, 0.25));
        o.ry = size * (anchor ? uniform(rng, 0.06, 0.12) : uniform(rng, 0.08, 0.25));
        if (dark_anchor) o.log_radiance = lo + 0.3;
        else if (bright_anchor) o.log_radiance = hi - 0.3;
        else o.log_radiance = std::clamp(key + uniform(rng, -1.5, 1.5), lo, hi);
        o.color = random_color(rng, 0.3);
        o.decorrelated = uniform(rng, 0, 1) < cfg.decorrelated_fraction;
        const double free_temp = uniform(rng, kTempMin, kTempMax);
        o.temperature = o.decorrelated ? free_temp : correlated_temperature(o.log_radiance, cfg);
        textures.push_back(random_texture(rng));
        s.objects.push_back(o);
    }

    RadianceImage canvas_rad(cw, ch);
    s.temperature_canvas = Plane(cw, ch, 1);
    for (int Y = 0; Y < ch; ++Y)
        for (int X = 0; X < cw; ++X) {
            const double x = X - m, y = Y - m;
            const double t = std::clamp(y / std::max(h - 1, 1), 0.0, 1.0);
            double logl = sky_top + (sky_bottom - sky_top) * t + std::log10(sky_tex(x, y));
            std::array<double, 3> color = sky_color;
            int hit = -1;
            for (int i = n - 1; i >= 0; --i)
                if (inside(s.objects[i], x, y)) {
                    hit = i;
                    break;
                }
            if (hit >= 0) {
                logl = s.objects[hit].log_radiance + std::log10(textures[hit](x, y));
                color = s.objects[hit].color;
            }
            logl = std::clamp(logl, lo, hi);
            const double lum = std::pow(10.0, logl);
            for (int c = 0; c < 3; ++c) canvas_rad.at(X, Y, c) = static_cast<float>(lum * color[c]);
            const bool free = hit >= 0 && s.objects[hit].decorrelated;
            s.temperature_canvas.at(X, Y) =
                static_cast<float>(free ? s.objects[hit].temperature : correlated_temperature(logl, cfg));
        }
    s.radiance = RadianceImage(crop(canvas_rad, m, m, w, h));
    s.temperature = crop(s.temperature_canvas, m, m, w, h);
    return s;
}

reg::Homography random_parallax(std::uint64_t seed, int width, int height, double max_displacement) {
    if (max_displacement <= 0.0) return reg::Homography();
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const std::array<reg::Point, 4> corners = {
        reg::Point{0, 0}, reg::Point{width - 1.0, 0}, reg::Point{width - 1.0, height - 1.0},
        reg::Point{0, height - 1.0}};
    std::vector<reg::Correspondence> pairs;
    for (const auto& c : corners) {
        const double r = max_displacement * std::sqrt(uniform(rng, 0, 1)), a = uniform(rng, 0, 6.283185307179586);
        pairs.push_back({c, {c.x + r * std::cos(a), c.y + r * std::sin(a)}});
    }
    return reg::estimate_homography(reg::CorrespondenceSet(std::move(pairs))).h;
}

IrImage render_ir(const Scene& scene, const reg::Homography& parallax, double blur_sigma) {
    const Plane& canvas = scene.temperature_canvas;
    Plane blurred = canvas;
    if (blur_sigma > 0.0) {
        const auto taps = kernels::gaussian_taps(blur_sigma, static_cast<int>(std::ceil(3 * blur_sigma)));
        kernels::separable_filter_same(canvas.samples(), canvas.width(), canvas.height(), taps, blurred.samples(),
                                       Exec::serial);
    }
    const int w = scene.radiance.width(), h = scene.radiance.height();
    const double m = scene.margin;
    // IR pixel s shows canvas point P^-1(s) + margin.
    const reg::Homography ir_to_canvas = reg::Homography::translation(m, m).compose(parallax.inverse());
    IrImage ir(w, h, 0.0f, kTempMin, kTempMax);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const reg::Point p = ir_to_canvas.apply({static_cast<double>(x), static_cast<double>(y)});
            const double px = std::clamp(p.x, 0.0, canvas.width() - 1.0);
            const double py = std::clamp(p.y, 0.0, canvas.height() - 1.0);
            const int x0 = std::min(static_cast<int>(px), canvas.width() - 2);
            const int y0 = std::min(static_cast<int>(py), canvas.height() - 2);
            const double tx = px - x0, ty = py - y0;
            const double v = (1 - ty) * ((1 - tx) * blurred.at(x0, y0) + tx * blurred.at(x0 + 1, y0)) +
                             ty * ((1 - tx) * blurred.at(x0, y0 + 1) + tx * blurred.at(x0 + 1, y0 + 1));
            ir.at(x, y) = static_cast<float>(v);
        }
    return ir;
}

reg::CorrespondenceSet parallax_correspondences(const reg::Homography& parallax, int width, int height) {
    std::vector<reg::Correspondence> pairs;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) {
            const reg::Point t{(0.1 + 0.8 * i / 3.0) * (width - 1), (0.1 + 0.8 * j / 3.0) * (height - 1)};
            pairs.push_back({parallax.apply(t), t});
        }
    return reg::CorrespondenceSet(std::move(pairs));
}

std::string to_string(ExposureClass c) {
    switch (c) {
        case ExposureClass::over: return "over";
        case ExposureClass::under: return "under";
        case ExposureClass::well: return "well";
    }
    return "well";
}

ExposureClass parse_exposure_class(const std::string& s) {
    if (s == "over") return ExposureClass::over;
    if (s == "under") return ExposureClass::under;
    if (s == "well") return ExposureClass::well;
    throw DataError("unknown exposure class '" + s + "'");
}

ExposureClass classify_exposure(const SdrImage& frame) {
    std::size_t hi = 0, lo = 0;
    for (auto v : frame.samples()) {
        hi += v == 255;
        lo += v == 0;
    }
    const double n = static_cast<double>(frame.size());
    if (hi > 0.25 * n) return ExposureClass::over;
    if (lo > 0.25 * n) return ExposureClass::under;
    return ExposureClass::well;
}

nlohmann::json SceneRecord::to_json() const {
    std::vector<std::string> b;
    for (const auto& p : brackets) b.push_back(p.generic_string());
    return {{"scene_id", scene_id},
            {"hdr_gt", hdr_gt.generic_string()},
            {"brackets", b},
            {"exposure_times", exposure_times},
            {"ir", ir.generic_string()},
            {"correspondences", correspondences.generic_string()},
            {"exposure_class", to_string(exposure_class)}};
}

SceneRecord SceneRecord::from_json(const nlohmann::json& j) {
    try {
        SceneRecord r;
        r.scene_id = j.at("scene_id").get<std::string>();
        r.hdr_gt = j.at("hdr_gt").get<std::string>();
        for (const auto& b : j.at("brackets")) r.brackets.emplace_back(b.get<std::string>());
        r.exposure_times = j.at("exposure_times").get<std::vector<double>>();
        r.ir = j.at("ir").get<std::string>();
        r.correspondences = j.at("correspondences").get<std::string>();
        r.exposure_class = parse_exposure_class(j.at("exposure_class").get<std::string>());
        if (r.brackets.size() != r.exposure_times.size()) throw DataError("bracket/exposure count mismatch");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed scene record: ") + e.what());
    }
}

SceneRecord simulate_capture(const Scene& scene, const hdr::CameraResponse& response,
                             const std::vector<double>& exposures, const reg::Homography& parallax, double noise_sigma,
                             std::uint64_t seed, const fs::path& scene_dir, const std::string& scene_id,
                             double ir_blur_sigma) {
    fs::create_directories(scene_dir);
    const fs::path rel = scene_id;
    SceneRecord r;
    r.scene_id = scene_id;
    r.exposure_times = exposures;

    r.hdr_gt = rel / "gt.pfm";
    io::write_image(scene.radiance, scene_dir / "gt.pfm", io::Format::pfm);

    const hdr::Bracket bracket = hdr::simulate_bracket(scene.radiance, response, exposures, noise_sigma, seed);
    for (std::size_t i = 0; i < bracket.size(); ++i) {
        const std::string name = "bracket_" + std::to_string(i) + ".png";
        io::write_image(bracket.frames()[i], scene_dir / name, io::Format::png);
        r.brackets.push_back(rel / name);
    }
    r.exposure_class = classify_exposure(bracket.frames()[r.input_frame()]);

    r.ir = rel / "ir.pgm";
    io::write_image(render_ir(scene, parallax, ir_blur_sigma), scene_dir / "ir.pgm", io::Format::pgm16);

    r.correspondences = rel / "correspondences.json";
    reg::save_correspondences(parallax_correspondences(parallax, scene.radiance.width(), scene.radiance.height()),
                              scene_dir / "correspondences.json");
    write_json(scene_dir / "scene.json", r.to_json());
    return r;
}

const SceneRecord& Manifest::scene(const std::string& id) const {
    for (const auto& s : scenes)
        if (s.scene_id == id) return s;
    throw DataError("manifest has no scene '" + id + "'");
}

nlohmann::json Manifest::to_json() const {
    nlohmann::json j;
    j["scenes"] = nlohmann::json::array();
    for (const auto& s : scenes) j["scenes"].push_back(s.to_json());
    j["split"] = {{"train", train}, {"val", val}};
    j["generator_config"] = config.to_json();
    j["seed"] = seed;
    return j;
}

int train_count(int n_scenes) { return (8 * n_scenes + 5) / 10; }

std::uint64_t scene_seed(std::uint64_t dataset_seed, int index) {
    // splitmix64 of (seed, index)
    std::uint64_t z = dataset_seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index) + 1;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Manifest build_dataset(int n_scenes, const fs::path& out_dir, const GeneratorConfig& cfg, std::uint64_t seed,
                       Exec exec) {
    if (n_scenes <= 0) throw DataError("build_dataset: need at least one scene");
    cfg.validate();
    fs::create_directories(out_dir);
    const auto response = cfg.response();

    Manifest m;
    m.root = out_dir;
    m.config = cfg;
    m.seed = seed;
    m.scenes.resize(static_cast<std::size_t>(n_scenes));
    std::vector<std::string> errors(static_cast<std::size_t>(n_scenes));
    parallel_for(exec, n_scenes, [&](std::int64_t i) {
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04d", static_cast<int>(i));
        const fs::path final_dir = out_dir / id;
        const fs::path tmp_dir = out_dir / (std::string(".tmp_") + id);
        try {
            const std::uint64_t s = scene_seed(seed, static_cast<int>(i));
            const Scene scene = generate_scene(s, cfg);
            const auto parallax = random_parallax(s, cfg.width, cfg.height, cfg.max_parallax);
            fs::remove_all(tmp_dir);
            SceneRecord r = simulate_capture(scene, response, cfg.exposures, parallax, cfg.noise_sigma, s + 1,
                                             tmp_dir, id, cfg.ir_blur_sigma);
            fs::remove_all(final_dir);
            fs::rename(tmp_dir, final_dir);
            m.scenes[i] = std::move(r);
        } catch (const std::exception& e) {
            std::error_code ec;
            fs::remove_all(tmp_dir, ec);
            errors[i] = std::string(id) + ": " + e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw DataError("build_dataset: " + e);

    std::vector<std::string> ids;
    for (const auto& s : m.scenes) ids.push_back(s.scene_id);
    Rng rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const int nt = train_count(n_scenes);
    m.train.assign(ids.begin(), ids.begin() + nt);
    m.val.assign(ids.begin() + nt, ids.end());
    std::sort(m.train.begin(), m.train.end());
    std::sort(m.val.begin(), m.val.end());
    write_json(out_dir / "manifest.json", m.to_json());
    return m;
}

Manifest load_manifest(const fs::path& manifest_path) {
    const auto j = read_json(manifest_path);
    Manifest m;
    m.root = manifest_path.parent_path();
    try {
        for (const auto& s : j.at("scenes")) m.scenes.push_back(SceneRecord::from_json(s));
        m.train = j.at("split").at("train").get<std::vector<std::string>>();
        m.val = j.at("split").at("val").get<std::vector<std::string>>();
        m.config = GeneratorConfig::from_json(j.value("generator_config", nlohmann::json::object()));
        m.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest '" + manifest_path.string() + "': " + e.what());
    }
    for (const auto& id : m.train) m.scene(id);
    for (const auto& id : m.val) m.scene(id);
    return m;
}

void validate_manifest(const Manifest& m) {
    for (const auto& s : m.scenes) {
        try {
            io::read_radiance(m.resolve(s.hdr_gt));
            double prev = 0.0;
            for (std::size_t i = 0; i < s.brackets.size(); ++i) {
                const SdrImage f = io::read_sdr(m.resolve(s.brackets[i]));
                if (f.exposure_time() <= prev) throw DataError("brackets not ordered by exposure");
                prev = f.exposure_time();
            }
            io::read_ir(m.resolve(s.ir));
            reg::load_correspondences(m.resolve(s.correspondences));
        } catch (const std::exception& e) {
            throw DataError("scene " + s.scene_id + ": " + e.what());
        }
    }
}

}  // namespace hdrt::data
