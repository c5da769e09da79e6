#include "hdrt/register.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <json.hpp>

namespace hdrt::reg {

namespace {

using Mat3 = Eigen::Matrix3d;

Mat3 to_eigen(const Homography& h) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = h(r, c);
    return m;
}

Homography from_eigen(const Mat3& m) {
    if (std::abs(m(2, 2)) < 1e-300) throw RegistrationError("homography has m[2][2] == 0 and cannot be normalized");
    std::array<double, 9> a{};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a[3 * r + c] = m(r, c) / m(2, 2);
    return Homography(a);
}

// Translate to centroid and scale to mean distance sqrt(2).
Mat3 hartley_normalization(const std::vector<Point>& pts) {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= pts.size();
    cy /= pts.size();
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
    mean_dist /= pts.size();
    if (mean_dist <= 0.0) throw RegistrationError("degenerate configuration: all points coincide");
    const double s = std::sqrt(2.0) / mean_dist;
    Mat3 t;
    t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
    return t;
}

bool collinear(Point a, Point b, Point c, double scale) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    return std::abs(cross) <= 1e-9 * scale * scale;
}

double point_scale(const std::vector<Correspondence>& pairs) {
    double s = 1.0;
    for (const auto& p : pairs) s = std::max({s, std::abs(p.source.x), std::abs(p.source.y)});
    return s;
}

Homography dlt(const std::vector<Correspondence>& pairs) {
    std::vector<Point> src, dst;
    for (const auto& p : pairs) {
        src.push_back(p.source);
        dst.push_back(p.target);
    }
    const Mat3 ts = hartley_normalization(src), tt = hartley_normalization(dst);
    const int n = static_cast<int>(pairs.size());
    Eigen::MatrixXd a(2 * n, 9);
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = tt * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s(0) / s(2), y = s(1) / s(2), u = d(0) / d(2), v = d(1) / d(2);
        a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
        a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    // A rank below 8 leaves a multi-dimensional solution space.
    if (sv.size() >= 8 && sv(7) <= 1e-10 * sv(0))
        throw RegistrationError("degenerate configuration: correspondences do not determine a homography");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Mat3 hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return from_eigen(tt.inverse() * hn * ts);
}

// Gauss-Newton on the 8 free entries, accepting only steps that reduce cost.
Homography refine(const Homography& initial, const std::vector<Correspondence>& pairs) {
    Eigen::Matrix<double, 8, 1> p;
    for (int i = 0; i < 8; ++i) p(i) = initial.row_major()[i];
    auto residuals = [&](const Eigen::Matrix<double, 8, 1>& q, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
        const int n = static_cast<int>(pairs.size());
        r.resize(2 * n);
        if (jac) jac->setZero(2 * n, 8);
        for (int i = 0; i < n; ++i) {
            const double x = pairs[i].source.x, y = pairs[i].source.y;
            const double wx = q(0) * x + q(1) * y + q(2);
            const double wy = q(3) * x + q(4) * y + q(5);
            const double w = q(6) * x + q(7) * y + 1.0;
            r(2 * i) = wx / w - pairs[i].target.x;
            r(2 * i + 1) = wy / w - pairs[i].target.y;
            if (jac) {
                auto& j = *jac;
                j(2 * i, 0) = x / w;
                j(2 * i, 1) = y / w;
                j(2 * i, 2) = 1.0 / w;
                j(2 * i, 6) = -wx * x / (w * w);
                j(2 * i, 7) = -wx * y / (w * w);
                j(2 * i + 1, 3) = x / w;
                j(2 * i + 1, 4) = y / w;
                j(2 * i + 1, 5) = 1.0 / w;
                j(2 * i + 1, 6) = -wy * x / (w * w);
                j(2 * i + 1, 7) = -wy * y / (w * w);
            }
        }
    };
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(p, r, &jac);
    double cost = r.squaredNorm();
    for (int iter = 0; iter < 20 && cost > 0.0; ++iter) {
        const Eigen::Matrix<double, 8, 1> step = jac.colPivHouseholderQr().solve(-r);
        if (!step.allFinite()) break;
        const Eigen::Matrix<double, 8, 1> trial = p + step;
        Eigen::VectorXd r_trial;
        residuals(trial, r_trial, nullptr);
        const double trial_cost = r_trial.squaredNorm();
        if (!(trial_cost < cost)) break;
        const bool converged = cost - trial_cost <= 1e-15 * cost;
        p = trial;
        cost = trial_cost;
        residuals(p, r, &jac);
        if (converged) break;
    }
    std::array<double, 9> m{};
    for (int i = 0; i < 8; ++i) m[i] = p(i);
    m[8] = 1.0;
    return Homography(m);
}

}  // namespace

Homography::Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

Homography::Homography(const std::array<double, 9>& row_major) : m_(row_major) {
    for (double v : m_)
        if (!std::isfinite(v)) throw RegistrationError("homography entries must be finite");
    if (m_[8] != 1.0) {
        if (m_[8] == 0.0) throw RegistrationError("homography has m[2][2] == 0");
        const double s = m_[8];
        for (double& v : m_) v /= s;
    }
    if (std::abs(determinant()) < 1e-14) throw RegistrationError("homography is singular");
}

Point Homography::apply(Point p) const {
    const double x = m_[0] * p.x + m_[1] * p.y + m_[2];
    const double y = m_[3] * p.x + m_[4] * p.y + m_[5];
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    return {x / w, y / w};
}

double Homography::determinant() const { return to_eigen(*this).determinant(); }

Homography Homography::inverse() const { return from_eigen(to_eigen(*this).inverse()); }

Homography Homography::compose(const Homography& other) const {
    return from_eigen(to_eigen(*this) * to_eigen(other));
}

Homography Homography::translation(double dx, double dy) { return Homography({1, 0, dx, 0, 1, dy, 0, 0, 1}); }

CorrespondenceSet::CorrespondenceSet(std::vector<Correspondence> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.size() < 4)
        throw RegistrationError("need at least 4 correspondences, got " + std::to_string(pairs_.size()));
    for (const auto& p : pairs_)
        if (!std::isfinite(p.source.x) || !std::isfinite(p.source.y) || !std::isfinite(p.target.x) ||
            !std::isfinite(p.target.y))
            throw RegistrationError("correspondence coordinates must be finite");
    if (pairs_.size() == 4) {
        const double s = point_scale(pairs_);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                for (int k = j + 1; k < 4; ++k)
                    if (collinear(pairs_[i].source, pairs_[j].source, pairs_[k].source, s))
                        throw RegistrationError("degenerate configuration: three source points are collinear");
    }
}

double reprojection_rmse(const Homography& h, const CorrespondenceSet& pairs) {
    double sum = 0.0;
    for (const auto& p : pairs.pairs()) {
        const Point q = h.apply(p.source);
        sum += (q.x - p.target.x) * (q.x - p.target.x) + (q.y - p.target.y) * (q.y - p.target.y);
    }
    return std::sqrt(sum / pairs.size());
}

HomographyFit estimate_homography(const CorrespondenceSet& pairs) {
    Homography h = dlt(pairs.pairs());
    if (pairs.size() >= 5) h = refine(h, pairs.pairs());
    return {h, reprojection_rmse(h, pairs)};
}

WarpResult warp_image(const Raster<float>& src, const Homography& h, int out_width, int out_height, Exec exec) {
    const Homography inv = h.inverse();
    const int channels = src.channels();
    WarpResult out{Raster<float>(out_width, out_height, channels, kInvalidSample), Mask(out_width, out_height, 1)};
    const double max_x = src.width() - 1, max_y = src.height() - 1;
    constexpr double kEdge = 1e-9;
    parallel_for(exec, out_height, [&](std::int64_t yi) {
        const int y = static_cast<int>(yi);
        for (int x = 0; x < out_width; ++x) {
            const Point s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
            if (!(s.x >= -kEdge && s.y >= -kEdge && s.x <= max_x + kEdge && s.y <= max_y + kEdge)) continue;
            const double sx = std::clamp(s.x, 0.0, max_x), sy = std::clamp(s.y, 0.0, max_y);
            const int x0 = std::min(static_cast<int>(sx), std::max(src.width() - 2, 0));
            const int y0 = std::min(static_cast<int>(sy), std::max(src.height() - 2, 0));
            const int x1 = std::min(x0 + 1, src.width() - 1), y1 = std::min(y0 + 1, src.height() - 1);
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < channels; ++c) {
                const double top = (1 - fx) * src.at(x0, y0, c) + fx * src.at(x1, y0, c);
                const double bot = (1 - fx) * src.at(x0, y1, c) + fx * src.at(x1, y1, c);
                out.image.at(x, y, c) = static_cast<float>((1 - fy) * top + fy * bot);
            }
            out.valid.at(x, y) = 1;
        }
    });
    return out;
}

Rect largest_valid_rectangle(const Mask& valid) {
    const int w = valid.width(), h = valid.height();
    std::vector<int> heights(w, 0);
    Rect best;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) heights[x] = valid.at(x, y) ? heights[x] + 1 : 0;
        stack.clear();
        for (int x = 0; x <= w; ++x) {
            const int cur = x < w ? heights[x] : 0;
            while (!stack.empty() && heights[stack.back()] >= cur) {
                const int top = heights[stack.back()];
                stack.pop_back();
                const int left = stack.empty() ? 0 : stack.back() + 1;
                const Rect r{left, y - top + 1, x - left, top};
                if (r.area() > best.area()) best = r;
            }
            stack.push_back(x);
        }
    }
    return best;
}

CropPair<Raster<float>, Raster<float>> overlap_crop(const Raster<float>& rgb, const Raster<float>& ir_warped,
                                                    const Mask& ir_valid) {
    if (rgb.width() != ir_warped.width() || rgb.height() != ir_warped.height() ||
        ir_valid.width() != rgb.width() || ir_valid.height() != rgb.height())
        throw RegistrationError("overlap_crop: rgb, warped IR and validity mask must share dimensions");
    const Rect r = largest_valid_rectangle(ir_valid);
    if (r.area() == 0) throw RegistrationError("overlap_crop: empty overlap");
    return {crop(rgb, r.x, r.y, r.width, r.height), crop(ir_warped, r.x, r.y, r.width, r.height), r};
}

CropPair<SdrImage, IrImage> overlap_crop(const SdrImage& rgb, const IrImage& ir_warped, const Mask& ir_valid) {
    if (rgb.width() != ir_warped.width() || rgb.height() != ir_warped.height() ||
        ir_valid.width() != rgb.width() || ir_valid.height() != rgb.height())
        throw RegistrationError("overlap_crop: rgb, warped IR and validity mask must share dimensions");
    const Rect r = largest_valid_rectangle(ir_valid);
    if (r.area() == 0) throw RegistrationError("overlap_crop: empty overlap");
    return {SdrImage(crop<std::uint8_t>(rgb, r.x, r.y, r.width, r.height), rgb.exposure_time()),
            IrImage(crop<float>(ir_warped, r.x, r.y, r.width, r.height), ir_warped.calib_min(),
                    ir_warped.calib_max()),
            r};
}

CorrespondenceSet load_correspondences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RegistrationError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    in >> j;
    if (!j.contains("pairs") || !j["pairs"].is_array())
        throw RegistrationError("correspondence JSON needs a \"pairs\" array");
    std::vector<Correspondence> pairs;
    for (const auto& row : j["pairs"]) {
        const auto v = row.get<std::vector<double>>();
        if (v.size() != 4) throw RegistrationError("each pair must be [sx, sy, tx, ty]");
        pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
    return CorrespondenceSet(std::move(pairs));
}

void save_correspondences(const CorrespondenceSet& set, const std::filesystem::path& path) {
    nlohmann::json j;
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : set.pairs()) j["pairs"].push_back({p.source.x, p.source.y, p.target.x, p.target.y});
    std::ofstream out(path);
    if (!out) throw RegistrationError("cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

Homography load_homography(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RegistrationError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    in >> j;
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 9) throw RegistrationError("homography JSON must hold 9 numbers");
    std::array<double, 9> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return Homography(a);
}

void save_homography(const Homography& h, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RegistrationError("cannot write '" + path.string() + "'");
    out << nlohmann::json(std::vector<double>(h.row_major().begin(), h.row_major().end())).dump() << "\n";
}

}  // namespace hdrt::reg
