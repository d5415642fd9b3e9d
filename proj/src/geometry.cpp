#include "esvae/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace esvae {

double inner(const Matrix& a, const Matrix& b) {
    return (a.array() * b.array()).sum();
}

Matrix center(const Matrix& cfg) {
    if (!cfg.allFinite()) throw InvalidInputError("center: non-finite configuration");
    return cfg.rowwise() - cfg.colwise().mean();
}

Matrix to_preshape(const Matrix& cfg, double degeneracy_threshold) {
    Matrix c = center(cfg);
    double n = c.norm();
    if (n <= degeneracy_threshold)
        throw DegenerateConfigurationError("to_preshape: all landmarks coincide");
    return c / n;
}

bool is_centered(const Matrix& x, double tol) {
    return (x.colwise().sum().array().abs() < tol).all();
}

bool is_preshape(const Matrix& x, double tol) {
    return is_centered(x, tol) && std::abs(x.norm() - 1.0) < tol;
}

double sphere_distance(const Matrix& x, const Matrix& y) {
    double c = std::clamp(inner(x, y), -1.0, 1.0);
    return std::acos(c);
}

Matrix sphere_exp(const Matrix& base, const Matrix& w) {
    double n = w.norm();
    if (n >= M_PI) throw InjectivityRadiusError("sphere_exp: |w| >= pi");
    if (n < kZeroGeodesic) {
        Matrix out = base + w;
        return out / out.norm();
    }
    return std::cos(n) * base + (std::sin(n) / n) * w;
}

Matrix sphere_log(const Matrix& base, const Matrix& x) {
    double theta = sphere_distance(base, x);
    if (theta >= M_PI - kAntipodalGuard)
        throw AntipodalPointsError("sphere_log: points are (nearly) antipodal");
    if (theta < kZeroGeodesic) return Matrix::Zero(base.rows(), base.cols());
    return (theta / std::sin(theta)) * (x - std::cos(theta) * base);
}

Matrix sphere_transport(const Matrix& from, const Matrix& to, const Matrix& w) {
    Matrix u = sphere_log(from, to);
    double theta = u.norm();
    if (theta < kZeroGeodesic) return w;
    Matrix uhat = u / theta;
    double a = inner(uhat, w);
    return w + (std::cos(theta) - 1.0) * a * uhat - std::sin(theta) * a * from;
}

ProcrustesResult optimal_rotation(const Matrix& x, const Matrix& y) {
    // Maximize tr(R x^T y) over SO(m): with x^T y = U S V^T the optimum is
    // V diag(1,..,1,det(V U^T)) U^T.
    const Matrix b = x.transpose() * y;
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix& u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    const auto& s = svd.singularValues();
    const long m = b.rows();

    double det_uv = (v * u.transpose()).determinant();
    bool flip = det_uv < 0.0;
    Vector d = Vector::Ones(m);
    if (flip) d(m - 1) = -1.0;
    ProcrustesResult out;
    out.rotation = v * d.asDiagonal() * u.transpose();

    // Rank deficiency, or a reflection correction with tied smallest singular
    // values, leaves the minimizer ambiguous.
    out.unique = s(m - 1) > 1e-10;
    if (flip && m >= 2 && s(m - 2) - s(m - 1) < 1e-10) out.unique = false;
    return out;
}

double shape_distance(const Matrix& x, const Matrix& y) {
    Matrix yr = y * optimal_rotation(x, y).rotation;
    return sphere_distance(x, yr);
}

Matrix project_to_tangent(const Matrix& base, const Matrix& a, bool centered) {
    Matrix c = centered ? Matrix(a.rowwise() - a.colwise().mean()) : a;
    return c - inner(base, c) * base;
}

bool is_rotation(const Matrix& r, double tol) {
    if (r.rows() != r.cols()) return false;
    Matrix id = Matrix::Identity(r.rows(), r.cols());
    return (r.transpose() * r - id).norm() < tol && std::abs(r.determinant() - 1.0) < tol;
}

bool is_tangent_at(const Matrix& base, const Matrix& w, double tol) {
    return std::abs(inner(base, w)) < tol;
}

}  // namespace esvae
