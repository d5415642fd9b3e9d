#pragma once

#include <iosfwd>
#include <vector>

#include "esvae/trajectory.hpp"

namespace esvae {

struct RegistrationConfig {
    int max_iterations = 40;
    double step_size = 0.1;
    double tolerance = 1e-5;
    bool dp_enabled = true;       // temporal-alignment step on/off (ablation)
    std::ostream* log = nullptr;  // optional per-iteration convergence log
};

struct FrechetMeanResult {
    Matrix mean;
    bool converged = false;
    std::vector<double> objective_history;  // sum of squared shape distances
};

// Gradient-descent Karcher mean on the preshape sphere with rotational
// alignment at every step. Initialized at the medoid (lowest index on ties).
FrechetMeanResult static_frechet_mean(const std::vector<Matrix>& shapes,
                                      const RegistrationConfig& cfg);

struct RegistrationResult {
    Trajectory mean;
    std::vector<Trajectory> aligned;
    std::vector<TangentField> shooting;
    std::vector<WarpingFunction> warps;            // net warp, original -> aligned
    std::vector<std::vector<Matrix>> rotations;    // per-frame rotation onto the mean
    std::vector<double> objective_history;
    Matrix reference;  // TSRVF reference point c
    bool converged = false;
};

// The joint loop: per iteration (i) rotationally align every frame to the
// current mean, (ii) temporally align each trajectory via TSRVF + DP (when
// dp_enabled), (iii) step the mean along the average shooting vector.
RegistrationResult register_collection(const std::vector<Trajectory>& trajectories,
                                       const RegistrationConfig& cfg);

}  // namespace esvae
