#include "esvae/registration.hpp"

#include <cmath>
#include <ostream>

#include "esvae/parallel.hpp"

namespace esvae {

namespace {

// Projected arithmetic average; falls back to the first shape when the
// average is near the origin.
Matrix initial_mean(const std::vector<Matrix>& shapes) {
    Matrix sum = Matrix::Zero(shapes.front().rows(), shapes.front().cols());
    for (const auto& s : shapes) sum += s;
    double n = sum.norm();
    if (n < 1e-6 * shapes.size()) return shapes.front();
    return sum / n;
}

int medoid_index(const std::vector<Trajectory>& trajs) {
    const int n = static_cast<int>(trajs.size());
    if (n == 1) return 0;
    std::vector<double> totals(n, 0.0);
    for_each_index(n, [&](std::ptrdiff_t a) {
        double s = 0.0;
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            for (int t = 0; t < trajs[a].T(); ++t) {
                double d = shape_distance(trajs[a].frames[t], trajs[b].frames[t]);
                s += d * d;
            }
        }
        totals[a] = s;
    });
    int best = 0;
    for (int a = 1; a < n; ++a)
        if (totals[a] < totals[best]) best = a;  // lowest index wins ties
    return best;
}

Trajectory rotate_to(const Trajectory& mean, const Trajectory& traj,
                     std::vector<Matrix>* rotations) {
    Trajectory out;
    out.centered = traj.centered;
    out.frames.resize(traj.T());
    if (rotations) rotations->resize(traj.T());
    for (int t = 0; t < traj.T(); ++t) {
        Matrix r = optimal_rotation(mean.frames[t], traj.frames[t]).rotation;
        out.frames[t] = traj.frames[t] * r;
        if (rotations) (*rotations)[t] = r;
    }
    return out;
}

}  // namespace

FrechetMeanResult static_frechet_mean(const std::vector<Matrix>& shapes,
                                      const RegistrationConfig& cfg) {
    if (shapes.empty()) throw InvalidInputError("static_frechet_mean: empty input");
    FrechetMeanResult res;
    res.mean = shapes.front();
    if (shapes.size() == 1) {
        res.converged = true;
        res.objective_history.push_back(0.0);
        return res;
    }
    res.mean = initial_mean(shapes);
    const double inv_n = 1.0 / static_cast<double>(shapes.size());
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        Matrix vbar = Matrix::Zero(res.mean.rows(), res.mean.cols());
        double objective = 0.0;
        for (const auto& s : shapes) {
            Matrix r = optimal_rotation(res.mean, s).rotation;
            Matrix aligned = s * r;
            double d = sphere_distance(res.mean, aligned);
            objective += d * d;
            vbar += sphere_log(res.mean, aligned);
        }
        vbar *= inv_n;
        res.objective_history.push_back(objective);
        if (vbar.norm() < cfg.tolerance) {
            res.converged = true;
            break;
        }
        res.mean = sphere_exp(res.mean, cfg.step_size * vbar);
    }
    return res;
}

RegistrationResult register_collection(const std::vector<Trajectory>& trajectories,
                                       const RegistrationConfig& cfg) {
    if (trajectories.empty()) throw InvalidInputError("register_collection: empty input");
    const int n = static_cast<int>(trajectories.size());
    const int t_len = trajectories.front().T();
    const int k = trajectories.front().k();
    const int m = trajectories.front().m();
    for (const auto& tr : trajectories)
        if (tr.T() != t_len || tr.k() != k || tr.m() != m)
            throw DimensionMismatchError("register_collection: inconsistent dimensions");

    RegistrationResult res;
    res.mean = trajectories[medoid_index(trajectories)];

    // Reference point c: static Frechet mean of all frames of the iteration-0
    // rotation-aligned trajectories, frozen thereafter.
    {
        std::vector<Matrix> all_frames;
        all_frames.reserve(static_cast<size_t>(n) * t_len);
        for (const auto& tr : trajectories) {
            Trajectory rot = rotate_to(res.mean, tr, nullptr);
            for (auto& f : rot.frames) all_frames.push_back(std::move(f));
        }
        RegistrationConfig ref_cfg = cfg;
        ref_cfg.step_size = 0.5;
        ref_cfg.max_iterations = 200;
        res.reference = static_frechet_mean(all_frames, ref_cfg).mean;
    }

    res.aligned.resize(n);
    res.shooting.resize(n);
    res.warps.resize(n);
    res.rotations.resize(n);

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        TsrvfRep q_mean;
        if (cfg.dp_enabled) q_mean = compute_tsrvf(res.mean, res.reference);

        for_each_index(n, [&](std::ptrdiff_t i) {
            std::vector<Matrix> rot1;
            Trajectory pre = rotate_to(res.mean, trajectories[i], &rot1);
            WarpingFunction gamma = WarpingFunction::identity(t_len);
            Trajectory warped = pre;
            if (cfg.dp_enabled) {
                TsrvfRep q_i = compute_tsrvf(pre, res.reference);
                gamma = optimal_warp(q_mean, q_i);
                warped = apply_warp(pre, gamma);
            }
            std::vector<Matrix> rot2;
            res.aligned[i] = rotate_to(res.mean, warped, &rot2);
            res.warps[i] = gamma;
            res.rotations[i].resize(t_len);
            for (int t = 0; t < t_len; ++t) res.rotations[i][t] = rot1[t] * rot2[t];
            res.shooting[i] = trajectory_log(res.mean, res.aligned[i]);
        });

        double objective = 0.0;
        TangentField vbar;
        vbar.vectors.assign(t_len, Matrix::Zero(k, m));
        for (int i = 0; i < n; ++i) {
            for (int t = 0; t < t_len; ++t) {
                double d = sphere_distance(res.mean.frames[t], res.aligned[i].frames[t]);
                objective += d * d;
                vbar.vectors[t] += res.shooting[i].vectors[t];
            }
        }
        for (auto& v : vbar.vectors) v /= static_cast<double>(n);
        double vnorm = vbar.norm();
        res.objective_history.push_back(objective);
        if (cfg.log)
            (*cfg.log) << "iter " << iter << " objective " << objective << " |vbar| " << vnorm
                       << '\n';
        if (vnorm < cfg.tolerance) {
            res.converged = true;
            break;
        }
        if (iter + 1 == cfg.max_iterations) break;  // keep outputs consistent with the mean
        for (auto& v : vbar.vectors) v *= cfg.step_size;
        res.mean = trajectory_exp(res.mean, vbar);
    }
    return res;
}

}  // namespace esvae
