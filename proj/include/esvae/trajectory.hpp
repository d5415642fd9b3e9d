#pragma once

#include <vector>

#include "esvae/geometry.hpp"

namespace esvae {

// A time-indexed sequence of preshapes on the uniform grid t_i = i/(T-1).
// `centered` is false for plain sphere-valued data (the S^2 demo), where
// frames are unit-norm but carry no landmark centering constraint.
struct Trajectory {
    std::vector<Matrix> frames;
    bool centered = true;

    int T() const { return static_cast<int>(frames.size()); }
    int k() const { return static_cast<int>(frames.front().rows()); }
    int m() const { return static_cast<int>(frames.front().cols()); }
};

// Tangent vectors indexed by the same grid, based at some trajectory.
struct TangentField {
    std::vector<Matrix> vectors;

    int T() const { return static_cast<int>(vectors.size()); }
    double norm() const;
};

// TSRVF: velocities transported to one reference preshape and square-root
// scaled, so all samples live in a single tangent space.
struct TsrvfRep {
    std::vector<Matrix> q;
    Matrix reference;

    int T() const { return static_cast<int>(q.size()); }
};

// Discretized nondecreasing reparameterization of [0,1].
struct WarpingFunction {
    std::vector<double> values;  // values[0]=0, values[T-1]=1, nondecreasing

    static WarpingFunction identity(int T);
    bool valid(double tol = 1e-12) const;
};

TangentField trajectory_log(const Trajectory& base, const Trajectory& x);
Trajectory trajectory_exp(const Trajectory& base, const TangentField& v);

// Forward-difference covariant velocity; the last entry replicates index T-2.
TangentField covariant_velocity(const Trajectory& traj);

// Transport a tangent vector at `frame` to `reference`, aligning the source
// representative to the reference rotation fiber first.
Matrix transport_to_reference(const Matrix& frame, const Matrix& w, const Matrix& reference,
                              bool centered = true);

TsrvfRep compute_tsrvf(const Trajectory& traj, const Matrix& reference);

// (q o gamma) sqrt(gamma-dot) with linear interpolation of q and
// forward-difference gamma-dot (final entry replicated).
TsrvfRep warp_action(const TsrvfRep& q, const WarpingFunction& gamma);

// Discretized L2 mismatch used by the DP solver:
//   sum_i || q_ref[i] - q_target[i] ||^2
double tsrvf_cost(const TsrvfRep& q_ref, const TsrvfRep& q_target);

// DP solver over the T x T grid with slope steps (a,b), 1<=a,b<=6, gcd=1.
// The returned warp's cost (via warp_action + tsrvf_cost) is the exact DP
// optimum over this search space; identity is always feasible.
WarpingFunction optimal_warp(const TsrvfRep& q_ref, const TsrvfRep& q_target);
WarpingFunction optimal_warp(const TsrvfRep& q_ref, const TsrvfRep& q_target, double* cost_out);

// Reparameterize a trajectory by gamma; frames between grid nodes are geodesic
// (slerp) interpolations on the sphere, endpoints preserved exactly.
Trajectory apply_warp(const Trajectory& traj, const WarpingFunction& gamma);

Trajectory resample_trajectory(const Trajectory& traj, int t_new);

}  // namespace esvae
