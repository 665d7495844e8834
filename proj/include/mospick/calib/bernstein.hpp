#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"
#include "mospick/core/json_fields.hpp"

namespace mospick::calib {

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline double bernstein(int n, int i, double t) {
    return binomial(n, i) * std::pow(t, i) * std::pow(1.0 - t, n - i);
}

// de Casteljau on a copy of the control values.
inline double de_casteljau(std::vector<double> c, double t) {
    for (std::size_t r = 1; r < c.size(); ++r)
        for (std::size_t i = 0; i + r < c.size(); ++i) c[i] = (1.0 - t) * c[i] + t * c[i + 1];
    return c.empty() ? 0.0 : c[0];
}

struct CalibrationPair {
    Vec2 pixel;
    Vec2 encoder;  // counts
};

struct Domain {
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    Vec2 normalize(Vec2 p) const { return {(p.x - x0) / width(), (p.y - y0) / height()}; }
    friend bool operator==(const Domain&, const Domain&) = default;
};

// Tensor-product Bernstein polynomial per encoder axis over a normalized
// pixel domain. Coefficients are stored row-major with the u index first:
// c[i * (n + 1) + j] multiplies B_i(u) B_j(v).
struct CalibrationMap {
    int degree = 4;
    Domain domain;
    std::vector<double> coeff_x;
    std::vector<double> coeff_y;
    double residual_max = 0.0;
    double residual_rms = 0.0;
    int samples = 0;

    friend bool operator==(const CalibrationMap&, const CalibrationMap&) = default;
};

inline double evaluate_grid(const std::vector<double>& c, int n, Vec2 uv) {
    std::vector<double> col(static_cast<std::size_t>(n + 1));
    std::vector<double> row(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) row[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(i * (n + 1) + j)];
        col[static_cast<std::size_t>(i)] = de_casteljau(row, uv.y);
    }
    return de_casteljau(col, uv.x);
}

struct MappedPoint {
    Vec2 encoder;
    bool extrapolated = false;
    std::string warning;
};

inline MappedPoint map_camera_to_robot(const CalibrationMap& m, Vec2 px) {
    const Vec2 uv = m.domain.normalize(px);
    MappedPoint r{{evaluate_grid(m.coeff_x, m.degree, uv), evaluate_grid(m.coeff_y, m.degree, uv)}, false, {}};
    if (uv.x < -0.1 || uv.x > 1.1 || uv.y < -0.1 || uv.y > 1.1) {
        r.extrapolated = true;
        r.warning = "pixel lies more than 10% of the span outside the calibrated domain";
    }
    return r;
}

inline void compute_residuals(CalibrationMap& m, const std::vector<CalibrationPair>& pairs) {
    double mx = 0.0, ss = 0.0;
    for (const auto& p : pairs) {
        const double e = distance(map_camera_to_robot(m, p.pixel).encoder, p.encoder);
        mx = std::max(mx, e);
        ss += e * e;
    }
    m.residual_max = mx;
    m.residual_rms = pairs.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(pairs.size()));
    m.samples = static_cast<int>(pairs.size());
}

// Least squares in the Bernstein basis, solved by column-pivoted Householder
// QR so rank deficiency is detected rather than amplified.
inline CalibrationMap fit_bernstein_map(const std::vector<CalibrationPair>& pairs, int degree = 4) {
    if (degree < 1) throw FitError("degree must be at least 1");
    const int nb = (degree + 1) * (degree + 1);
    if (static_cast<int>(pairs.size()) < nb)
        throw FitError("need at least " + std::to_string(nb) + " pairs, got " + std::to_string(pairs.size()));
    CalibrationMap m;
    m.degree = degree;
    Box box;
    for (const auto& p : pairs) box.include(p.pixel);
    m.domain = {box.lo.x, box.lo.y, box.hi.x, box.hi.y};
    if (!(m.domain.width() > 0.0) || !(m.domain.height() > 0.0))
        throw FitError("rank-deficient design: pixel samples are collinear (zero-area domain)");

    Eigen::MatrixXd a(static_cast<Eigen::Index>(pairs.size()), nb);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(pairs.size()), 2);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const Vec2 uv = m.domain.normalize(pairs[k].pixel);
        for (int i = 0; i <= degree; ++i) {
            const double bu = bernstein(degree, i, uv.x);
            for (int j = 0; j <= degree; ++j)
                a(static_cast<Eigen::Index>(k), i * (degree + 1) + j) = bu * bernstein(degree, j, uv.y);
        }
        b(static_cast<Eigen::Index>(k), 0) = pairs[k].encoder.x;
        b(static_cast<Eigen::Index>(k), 1) = pairs[k].encoder.y;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < nb)
        throw FitError("rank-deficient design: rank " + std::to_string(qr.rank()) + " of " + std::to_string(nb) +
                       " (samples do not span the domain in both directions)");
    const Eigen::MatrixXd sol = qr.solve(b);
    m.coeff_x.assign(sol.col(0).data(), sol.col(0).data() + nb);
    m.coeff_y.assign(sol.col(1).data(), sol.col(1).data() + nb);
    compute_residuals(m, pairs);
    return m;
}

inline void to_json(json& j, const CalibrationMap& m) {
    j = {{"schema", "mospick.calibration/1"},
         {"degree", m.degree},
         {"domain", {m.domain.x0, m.domain.y0, m.domain.x1, m.domain.y1}},
         {"coeff_x", m.coeff_x},
         {"coeff_y", m.coeff_y},
         {"residual_max", m.residual_max},
         {"residual_rms", m.residual_rms},
         {"samples", m.samples}};
}

inline void from_json(const json& j, CalibrationMap& m) {
    std::string schema;
    std::vector<double> dom;
    ObjectReader(j, "calibration")
        .field("schema", schema)
        .field("degree", m.degree)
        .field("domain", dom)
        .field("coeff_x", m.coeff_x)
        .field("coeff_y", m.coeff_y)
        .field("residual_max", m.residual_max)
        .field("residual_rms", m.residual_rms)
        .field("samples", m.samples)
        .finish();
    if (schema != "mospick.calibration/1") throw ConfigError("calibration: unsupported schema '" + schema + "'");
    if (dom.size() != 4) throw ConfigError("calibration.domain: expected 4 numbers");
    m.domain = {dom[0], dom[1], dom[2], dom[3]};
    const auto nb = static_cast<std::size_t>((m.degree + 1) * (m.degree + 1));
    if (m.degree < 1 || m.coeff_x.size() != nb || m.coeff_y.size() != nb)
        throw ConfigError("calibration: coefficient grid does not match the degree");
    if (!(m.domain.width() > 0.0) || !(m.domain.height() > 0.0)) throw ConfigError("calibration: degenerate domain");
}

}  // namespace mospick::calib
