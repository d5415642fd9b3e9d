#pragma once

#include "esvae/common.hpp"

namespace esvae {

// Tolerances used across the shape-geometry layer.
constexpr double kDegeneracyThreshold = 1e-12;
constexpr double kZeroGeodesic = 1e-12;
constexpr double kAntipodalGuard = 1e-6;

double inner(const Matrix& a, const Matrix& b);

// --- Configuration level ----------------------------------------------------

// Subtract column means (removes translation).
Matrix center(const Matrix& cfg);

// Center and scale to unit Frobenius norm. Throws DegenerateConfigurationError
// when the centered norm falls below `degeneracy_threshold`.
Matrix to_preshape(const Matrix& cfg, double degeneracy_threshold = kDegeneracyThreshold);

bool is_centered(const Matrix& x, double tol = 1e-10);
bool is_preshape(const Matrix& x, double tol = 1e-10);

// --- Unit-sphere maps (shared by preshapes and plain sphere points) ---------

// arccos of the clamped inner product; range [0, pi].
double sphere_distance(const Matrix& x, const Matrix& y);

// cos(|w|) x + sin(|w|) w/|w|. Throws InjectivityRadiusError when |w| >= pi.
Matrix sphere_exp(const Matrix& base, const Matrix& w);

// (theta/sin theta)(x - cos theta * base). Throws AntipodalPointsError near pi.
Matrix sphere_log(const Matrix& base, const Matrix& x);

// Closed-form parallel transport of w along the geodesic from `from` to `to`.
Matrix sphere_transport(const Matrix& from, const Matrix& to, const Matrix& w);

// --- Kendall quotient -------------------------------------------------------

struct ProcrustesResult {
    Matrix rotation;    // m x m, member of SO(m)
    bool unique = true; // false when the optimum is not isolated
};

// R* = argmin over SO(m) of d_S(x, y R).
ProcrustesResult optimal_rotation(const Matrix& x, const Matrix& y);

// Eq. of the quotient metric: preshape distance after optimal rotation.
double shape_distance(const Matrix& x, const Matrix& y);

// Remove the column-mean and normal components of an arbitrary k x m matrix,
// yielding a tangent vector at `base`. With centered=false only the normal
// component is removed (plain sphere case).
Matrix project_to_tangent(const Matrix& base, const Matrix& a, bool centered = true);

bool is_rotation(const Matrix& r, double tol = 1e-10);
bool is_tangent_at(const Matrix& base, const Matrix& w, double tol = 1e-8);

}  // namespace esvae
