#include "esvae/trajectory.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace esvae {

namespace {

// Linear interpolation of q at fractional index `pos` (all q[i] share one
// tangent space, so this is well defined).
Matrix interp_q(const std::vector<Matrix>& q, double pos) {
    const int t = static_cast<int>(q.size());
    if (pos <= 0.0) return q.front();
    if (pos >= t - 1) return q.back();
    int lo = static_cast<int>(std::floor(pos));
    if (lo >= t - 1) lo = t - 2;
    double frac = pos - lo;
    return (1.0 - frac) * q[lo] + frac * q[lo + 1];
}

// Geodesic interpolation between consecutive frames at fractional index.
Matrix slerp_frame(const std::vector<Matrix>& frames, double pos) {
    const int t = static_cast<int>(frames.size());
    if (pos <= 1e-12) return frames.front();
    if (pos >= t - 1 - 1e-12) return frames.back();
    int lo = static_cast<int>(std::floor(pos));
    double frac = pos - lo;
    if (frac < 1e-15) return frames[lo];
    Matrix step = sphere_log(frames[lo], frames[lo + 1]);
    return sphere_exp(frames[lo], frac * step);
}

struct Step {
    int a, b;  // time advance, warp advance
};

const std::vector<Step>& slope_steps() {
    static const std::vector<Step> steps = [] {
        std::vector<Step> s;
        for (int a = 1; a <= 6; ++a)
            for (int b = 1; b <= 6; ++b)
                if (std::gcd(a, b) == 1) s.push_back({a, b});
        return s;
    }();
    return steps;
}

}  // namespace

double TangentField::norm() const {
    double s = 0.0;
    for (const auto& v : vectors) s += v.squaredNorm();
    return std::sqrt(s);
}

WarpingFunction WarpingFunction::identity(int T) {
    WarpingFunction g;
    g.values.resize(T);
    for (int i = 0; i < T; ++i) g.values[i] = static_cast<double>(i) / (T - 1);
    return g;
}

bool WarpingFunction::valid(double tol) const {
    if (values.size() < 2) return false;
    if (std::abs(values.front()) > tol || std::abs(values.back() - 1.0) > tol) return false;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[i - 1] - tol) return false;
    return true;
}

TangentField trajectory_log(const Trajectory& base, const Trajectory& x) {
    if (base.T() != x.T())
        throw DimensionMismatchError("trajectory_log: length mismatch");
    TangentField out;
    out.vectors.reserve(base.T());
    for (int i = 0; i < base.T(); ++i) {
        try {
            out.vectors.push_back(sphere_log(base.frames[i], x.frames[i]));
        } catch (const AntipodalPointsError&) {
            throw AntipodalPointsError("trajectory_log: antipodal frames at index " +
                                       std::to_string(i));
        }
    }
    return out;
}

Trajectory trajectory_exp(const Trajectory& base, const TangentField& v) {
    if (base.T() != v.T())
        throw DimensionMismatchError("trajectory_exp: length mismatch");
    Trajectory out;
    out.centered = base.centered;
    out.frames.reserve(base.T());
    for (int i = 0; i < base.T(); ++i) {
        try {
            out.frames.push_back(sphere_exp(base.frames[i], v.vectors[i]));
        } catch (const InjectivityRadiusError&) {
            throw InjectivityRadiusError("trajectory_exp: |v| >= pi at frame " +
                                         std::to_string(i));
        }
    }
    return out;
}

TangentField covariant_velocity(const Trajectory& traj) {
    const int t = traj.T();
    if (t < 2) throw InvalidInputError("covariant_velocity: need T >= 2");
    TangentField out;
    out.vectors.resize(t);
    const double scale = t - 1.0;
    for (int i = 0; i + 1 < t; ++i) {
        try {
            out.vectors[i] = scale * sphere_log(traj.frames[i], traj.frames[i + 1]);
        } catch (const AntipodalPointsError&) {
            throw AntipodalPointsError("covariant_velocity: antipodal frames at index " +
                                       std::to_string(i));
        }
    }
    out.vectors[t - 1] = out.vectors[t - 2];
    return out;
}

Matrix transport_to_reference(const Matrix& frame, const Matrix& w, const Matrix& reference,
                              bool centered) {
    (void)centered;
    Matrix r = optimal_rotation(reference, frame).rotation;
    return sphere_transport(frame * r, reference, w * r);
}

TsrvfRep compute_tsrvf(const Trajectory& traj, const Matrix& reference) {
    TangentField vel = covariant_velocity(traj);
    TsrvfRep out;
    out.reference = reference;
    out.q.resize(traj.T());
    for (int i = 0; i < traj.T(); ++i) {
        double speed = vel.vectors[i].norm();
        if (speed < 1e-12) {
            out.q[i] = Matrix::Zero(reference.rows(), reference.cols());
            continue;
        }
        Matrix transported =
            transport_to_reference(traj.frames[i], vel.vectors[i], reference, traj.centered);
        out.q[i] = transported / std::sqrt(transported.norm());
    }
    return out;
}

TsrvfRep warp_action(const TsrvfRep& q, const WarpingFunction& gamma) {
    const int t = q.T();
    TsrvfRep out;
    out.reference = q.reference;
    out.q.resize(t);
    for (int i = 0; i < t; ++i) {
        int fwd = (i + 1 < t) ? i : i - 1;
        double gdot = (gamma.values[fwd + 1] - gamma.values[fwd]) * (t - 1.0);
        double pos = gamma.values[i] * (t - 1.0);
        out.q[i] = interp_q(q.q, pos) * std::sqrt(std::max(gdot, 0.0));
    }
    return out;
}

double tsrvf_cost(const TsrvfRep& q_ref, const TsrvfRep& q_target) {
    if (q_ref.T() != q_target.T())
        throw DimensionMismatchError("tsrvf_cost: length mismatch");
    double c = 0.0;
    for (int i = 0; i < q_ref.T(); ++i) c += (q_ref.q[i] - q_target.q[i]).squaredNorm();
    return c;
}

WarpingFunction optimal_warp(const TsrvfRep& q_ref, const TsrvfRep& q_target, double* cost_out) {
    const int t = q_ref.T();
    if (t != q_target.T())
        throw DimensionMismatchError("optimal_warp: length mismatch");
    const auto& steps = slope_steps();
    const double inf = std::numeric_limits<double>::infinity();

    // Cost of the segment (i0,j0)->(i1,j1): covers grid nodes i0..i1-1 with
    // the segment slope; the terminal node T-1 uses its incoming slope
    // (matching the replicated forward difference in warp_action).
    auto segcost = [&](int i0, int j0, int i1, int j1) {
        double s = static_cast<double>(j1 - j0) / (i1 - i0);
        double rs = std::sqrt(s);
        double c = 0.0;
        for (int i = i0; i < i1; ++i) {
            double pos = j0 + s * (i - i0);
            c += (q_ref.q[i] - interp_q(q_target.q, pos) * rs).squaredNorm();
        }
        if (i1 == t - 1) c += (q_ref.q[t - 1] - q_target.q[t - 1] * rs).squaredNorm();
        return c;
    };

    std::vector<double> dp(static_cast<size_t>(t) * t, inf);
    std::vector<int> pred(static_cast<size_t>(t) * t, -1);
    auto at = [t](int i, int j) { return static_cast<size_t>(i) * t + j; };
    dp[at(0, 0)] = 0.0;
    for (int i = 1; i < t; ++i) {
        for (int j = 1; j < t; ++j) {
            double best = inf;
            int best_step = -1;
            for (size_t k = 0; k < steps.size(); ++k) {
                int i0 = i - steps[k].a, j0 = j - steps[k].b;
                if (i0 < 0 || j0 < 0) continue;
                if (dp[at(i0, j0)] == inf) continue;
                double c = dp[at(i0, j0)] + segcost(i0, j0, i, j);
                if (c < best) {
                    best = c;
                    best_step = static_cast<int>(k);
                }
            }
            dp[at(i, j)] = best;
            pred[at(i, j)] = best_step;
        }
    }
    if (cost_out) *cost_out = dp[at(t - 1, t - 1)];

    // Trace the path back and fill gamma along each segment.
    WarpingFunction gamma;
    gamma.values.assign(t, 0.0);
    int i = t - 1, j = t - 1;
    while (i > 0) {
        const Step& st = steps[static_cast<size_t>(pred[at(i, j)])];
        int i0 = i - st.a, j0 = j - st.b;
        double s = static_cast<double>(j - j0) / (i - i0);
        for (int ii = i0; ii <= i; ++ii)
            gamma.values[ii] = (j0 + s * (ii - i0)) / (t - 1.0);
        i = i0;
        j = j0;
    }
    gamma.values[0] = 0.0;
    gamma.values[t - 1] = 1.0;
    return gamma;
}

WarpingFunction optimal_warp(const TsrvfRep& q_ref, const TsrvfRep& q_target) {
    return optimal_warp(q_ref, q_target, nullptr);
}

Trajectory apply_warp(const Trajectory& traj, const WarpingFunction& gamma) {
    const int t = traj.T();
    Trajectory out;
    out.centered = traj.centered;
    out.frames.resize(t);
    for (int i = 0; i < t; ++i)
        out.frames[i] = slerp_frame(traj.frames, gamma.values[i] * (t - 1.0));
    return out;
}

Trajectory resample_trajectory(const Trajectory& traj, int t_new) {
    if (t_new < 2) throw InvalidInputError("resample_trajectory: T_new < 2");
    const int t = traj.T();
    Trajectory out;
    out.centered = traj.centered;
    out.frames.resize(t_new);
    for (int i = 0; i < t_new; ++i) {
        double pos = static_cast<double>(i) * (t - 1) / (t_new - 1);
        out.frames[i] = slerp_frame(traj.frames, pos);
    }
    return out;
}

}  // namespace esvae
