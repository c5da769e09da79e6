#include "hdrt/hdr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

namespace hdrt::hdr {

bool Crf::is_monotone() const {
    for (int z = 1; z < kCodes; ++z)
        if (g[z] < g[z - 1]) return false;
    return true;
}

Crf Crf::from_exposure_curve(const std::function<double(double)>& exposure_of_code) {
    Crf crf;
    const double anchor = std::log(exposure_of_code(kAnchorCode));
    for (int z = 0; z < kCodes; ++z) crf.g[z] = std::log(exposure_of_code(z == 0 ? 1e-3 : z)) - anchor;
    return crf;
}

Crf Crf::power(double exponent) {
    if (!(exponent > 0.0)) throw HdrError(HdrError::Kind::invalid_argument, "Crf::power: exponent must be > 0");
    return from_exposure_curve([exponent](double z) { return std::pow(z / 255.0, exponent); });
}

Bracket::Bracket(std::vector<SdrImage> frames) : frames_(std::move(frames)) {
    if (frames_.size() < 2) throw HdrError(HdrError::Kind::invalid_argument, "bracket needs at least 2 frames");
    for (std::size_t j = 1; j < frames_.size(); ++j) {
        if (frames_[j].width() != frames_[0].width() || frames_[j].height() != frames_[0].height())
            throw HdrError(HdrError::Kind::dimension_mismatch, "bracket frames differ in size");
        const double prev = frames_[j - 1].exposure_time(), cur = frames_[j].exposure_time();
        if (cur == prev)
            throw HdrError(HdrError::Kind::rank_deficient,
                           "bracket frames " + std::to_string(j - 1) + " and " + std::to_string(j) +
                               " share an exposure time; no exposure variation");
        if (cur < prev)
            throw HdrError(HdrError::Kind::non_increasing_exposure, "bracket exposure times must be strictly increasing");
    }
}

std::vector<std::size_t> stratified_samples(const SdrImage& frame, int n_samples) {
    const std::size_t n_pix = frame.pixel_count();
    std::vector<std::size_t> order(n_pix);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& s = frame.storage();
    auto lum = [&](std::size_t p) { return luminance(s[3 * p], s[3 * p + 1], s[3 * p + 2]); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lum(a) < lum(b); });
    if (static_cast<std::size_t>(n_samples) >= n_pix) return order;
    std::vector<std::size_t> picked(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k)
        picked[k] = order[static_cast<std::size_t>((k + 0.5) * static_cast<double>(n_pix) / n_samples)];
    return picked;
}

void isotonic_project(std::span<double> v) {
    // Blocks of (sum, count) merged while they violate ordering.
    std::vector<double> sum;
    std::vector<int> count;
    for (double x : v) {
        sum.push_back(x);
        count.push_back(1);
        while (sum.size() > 1 && sum[sum.size() - 2] / count[count.size() - 2] > sum.back() / count.back()) {
            sum[sum.size() - 2] += sum.back();
            count[count.size() - 2] += count.back();
            sum.pop_back();
            count.pop_back();
        }
    }
    std::size_t i = 0;
    for (std::size_t b = 0; b < sum.size(); ++b)
        for (int k = 0; k < count[b]; ++k) v[i++] = sum[b] / count[b];
}

namespace {

Crf solve_channel(const Bracket& bracket, const std::vector<std::size_t>& samples, int channel, double lambda) {
    const int n_frames = static_cast<int>(bracket.size());
    std::vector<double> log_dt(n_frames);
    for (int j = 0; j < n_frames; ++j) log_dt[j] = std::log(bracket[j].exposure_time());

    // Samples with no usable observation would leave their ln E column empty.
    std::vector<std::size_t> used;
    for (std::size_t p : samples) {
        for (int j = 0; j < n_frames; ++j) {
            if (hat_weight(bracket[j].storage()[3 * p + channel]) > 0) {
                used.push_back(p);
                break;
            }
        }
    }
    if (used.empty())
        throw HdrError(HdrError::Kind::rank_deficient, "all sampled pixels are clipped in every frame");

    // Each ln E_i couples only to the codes it was seen at, so its block of the
    // normal equations is diagonal and can be eliminated up front. What remains
    // is a kCodes x kCodes system in g.
    Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(kCodes, kCodes);
    Eigen::VectorXd atb = Eigen::VectorXd::Zero(kCodes);
    auto add_row = [&](std::initializer_list<std::pair<int, double>> row, double rhs) {
        for (auto [i, a] : row) {
            atb(i) += a * rhs;
            for (auto [k, b] : row) ata(i, k) += a * b;
        }
    };

    int observations = 0;
    std::vector<int> zs;
    std::vector<double> cs;
    for (std::size_t s = 0; s < used.size(); ++s) {
        // Rows w*g(z) - w*lnE = w*ln dt.
        double d = 0, be = 0;
        zs.clear();
        cs.clear();
        for (int j = 0; j < n_frames; ++j) {
            const int z = bracket[j].storage()[3 * used[s] + channel];
            const double w = hat_weight(z);
            if (w == 0.0) continue;
            const double w2 = w * w;
            ata(z, z) += w2;
            atb(z) += w2 * log_dt[j];
            d += w2;
            be -= w2 * log_dt[j];
            zs.push_back(z);
            cs.push_back(-w2);
            ++observations;
        }
        for (std::size_t a = 0; a < zs.size(); ++a) {
            atb(zs[a]) -= cs[a] * be / d;
            for (std::size_t b = 0; b < zs.size(); ++b) ata(zs[a], zs[b]) -= cs[a] * cs[b] / d;
        }
    }
    add_row({{kAnchorCode, 1.0}}, 0.0);
    for (int z = 1; z < kCodes - 1; ++z) {
        const double w = lambda * hat_weight(z);
        add_row({{z - 1, w}, {z, -2.0 * w}, {z + 1, w}}, 0.0);
    }
    if (observations < 2)
        throw HdrError(HdrError::Kind::rank_deficient, "too few unclipped observations to fit a response");

    Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
    const auto dv = ldlt.vectorD();
    const double dmax = dv.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || dv.minCoeff() <= 1e-12 * dmax)
        throw HdrError(HdrError::Kind::rank_deficient, "response system is rank deficient");
    const Eigen::VectorXd x = ldlt.solve(atb);
    if (!x.allFinite()) throw HdrError(HdrError::Kind::rank_deficient, "response solve produced non-finite values");

    Crf crf;
    crf.lambda = lambda;
    for (int z = 0; z < kCodes; ++z) crf.g[z] = x(z);
    isotonic_project(crf.g);
    const double anchor = crf.g[kAnchorCode];
    for (double& v : crf.g) v -= anchor;
    return crf;
}

}  // namespace

CameraResponse recover_crf(const Bracket& bracket, double lambda, int n_samples) {
    if (!(lambda >= 0.0)) throw HdrError(HdrError::Kind::invalid_argument, "lambda must be >= 0");
    const int p = static_cast<int>(bracket.size());
    const int min_samples = (255 + p + p - 2) / (p - 1);
    if (n_samples <= 0) n_samples = std::max(kDefaultSamples, min_samples);
    if (n_samples < min_samples)
        throw HdrError(HdrError::Kind::invalid_argument,
                       "n_samples must be >= " + std::to_string(min_samples) + " for an overdetermined system");
    const auto samples = stratified_samples(bracket[bracket.size() / 2], n_samples);
    CameraResponse out;
    for (int c = 0; c < 3; ++c) out.channel[c] = solve_channel(bracket, samples, c, lambda);
    return out;
}

double MergeResult::saturated_fraction() const {
    if (saturated.empty()) return 0.0;
    std::size_t n = 0;
    for (auto v : saturated.storage()) n += v != 0;
    return static_cast<double>(n) / static_cast<double>(saturated.size());
}

MergeResult merge_brackets(const Bracket& bracket, const CameraResponse& response, Exec exec) {
    const int w = bracket.width(), h = bracket.height();
    const int n_frames = static_cast<int>(bracket.size());
    std::vector<double> log_dt(n_frames);
    for (int j = 0; j < n_frames; ++j) log_dt[j] = std::log(bracket[j].exposure_time());

    MergeResult out{RadianceImage(w, h), Mask(w, h, 1)};
    parallel_for(exec, h, [&](std::int64_t y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * w + x;
            bool any_empty = false;
            for (int c = 0; c < 3; ++c) {
                const Crf& crf = response.channel[c];
                const double white = crf.g[kCodes - 1];
                double num = 0.0, den = 0.0;
                for (int j = 0; j < n_frames; ++j) {
                    const int z = bracket[j].storage()[3 * p + c];
                    const double wgt = hat_weight(z);
                    num += wgt * (crf.g[z] - white - log_dt[j]);
                    den += wgt;
                }
                double log_e;
                if (den > 0.0) {
                    log_e = num / den;
                } else {
                    // Frame whose code is nearest mid-range; ties go to the shortest
                    // exposure for bright codes and the longest for dark ones.
                    int best = 0, best_dist = 1 << 20;
                    for (int j = 0; j < n_frames; ++j) {
                        const int z = bracket[j].storage()[3 * p + c];
                        const int dist = std::abs(z - kAnchorCode);
                        const bool better = dist < best_dist || (dist == best_dist && z < kAnchorCode);
                        if (better) {
                            best = j;
                            best_dist = dist;
                        }
                    }
                    const int z = bracket[best].storage()[3 * p + c];
                    log_e = crf.g[z] - white - log_dt[best];
                    any_empty = true;
                }
                out.radiance.at(x, static_cast<int>(y), c) = static_cast<float>(std::exp(log_e));
            }
            out.saturated.at(x, static_cast<int>(y)) = any_empty ? 1 : 0;
        }
    });
    return out;
}

double crf_forward(const Crf& crf, double exposure) {
    const double white = crf.g[kCodes - 1];
    if (!(exposure > 0.0)) return 0.0;
    const double le = std::log(exposure) + white;
    if (le <= crf.g[0]) return 0.0;
    if (le >= crf.g[kCodes - 1]) return kCodes - 1;
    // First code whose log exposure exceeds le.
    const auto it = std::upper_bound(crf.g.begin(), crf.g.end(), le);
    const int hi = static_cast<int>(it - crf.g.begin());
    const int lo = hi - 1;
    const double e_lo = std::exp(crf.g[lo] - white), e_hi = std::exp(crf.g[hi] - white);
    if (e_hi <= e_lo) return lo;
    return lo + (exposure - e_lo) / (e_hi - e_lo);
}

Bracket simulate_bracket(const RadianceImage& scene, const CameraResponse& response,
                         const std::vector<double>& exposure_times, double noise_sigma, std::uint64_t seed) {
    if (!(noise_sigma >= 0.0)) throw HdrError(HdrError::Kind::invalid_argument, "noise_sigma must be >= 0");
    for (const auto& crf : response.channel)
        if (!crf.is_monotone()) throw HdrError(HdrError::Kind::invalid_argument, "response must be non-decreasing");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<SdrImage> frames;
    for (double dt : exposure_times) {
        SdrImage frame(scene.width(), scene.height(), dt);
        auto& codes = frame.storage();
        const auto& e = scene.storage();
        for (std::size_t i = 0; i < e.size(); ++i) {
            double z = crf_forward(response.channel[i % 3], static_cast<double>(e[i]) * dt);
            if (noise_sigma > 0.0) z += noise_sigma * noise(rng);
            codes[i] = static_cast<std::uint8_t>(std::clamp(std::lround(z), 0L, 255L));
        }
        frames.push_back(std::move(frame));
    }
    return Bracket(std::move(frames));
}

std::string crf_to_json(const CameraResponse& response) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& crf : response.channel) j.push_back(std::vector<double>(crf.g.begin(), crf.g.end()));
    return j.dump();
}

CameraResponse crf_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("CRF JSON must be an array of 3 channels");
    CameraResponse out;
    for (int c = 0; c < 3; ++c) {
        const auto g = j[c].get<std::vector<double>>();
        if (g.size() != kCodes) throw std::invalid_argument("CRF channel must hold 256 values");
        std::copy(g.begin(), g.end(), out.channel[c].g.begin());
    }
    return out;
}

void save_crf(const CameraResponse& response, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << crf_to_json(response) << "\n";
}

CameraResponse load_crf(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return crf_from_json(ss.str());
}

}  // namespace hdrt::hdr
