#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "esvae/rng.hpp"
#include "esvae/trajectory.hpp"

namespace esvae {

enum class LossMode { geodesic, tangent_mse };

// Encoder: linear(D->H), tanh, dropout, two parallel heads (H->L).
// Decoder: linear(L->H'), tanh, linear(H'->D).
struct NetworkParams {
    Matrix w1;
    Vector b1;
    Matrix w_mu, w_lv;
    Vector b_mu, b_lv;
    Matrix w2;
    Vector b2;
    Matrix w3;
    Vector b3;

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int hidden() const { return static_cast<int>(w1.rows()); }
    int latent_dim() const { return static_cast<int>(w_mu.rows()); }
    int decoder_hidden() const { return static_cast<int>(w2.rows()); }

    bool all_finite() const;

    // Uniform +-1/sqrt(fan_in) per layer, biases zero.
    static NetworkParams init(int d, int h, int h_dec, int l, Rng& rng);
};

// Visit every parameter array in a fixed order (used by Adam and the
// finite-difference suite).
template <typename P, typename F>
void for_each_param(P& p, F&& f) {
    f(p.w1);
    f(p.b1);
    f(p.w_mu);
    f(p.b_mu);
    f(p.w_lv);
    f(p.b_lv);
    f(p.w2);
    f(p.b2);
    f(p.w3);
    f(p.b3);
}

template <typename P, typename Q, typename F>
void for_each_param_pair(P& p, Q& q, F&& f) {
    f(p.w1, q.w1);
    f(p.b1, q.b1);
    f(p.w_mu, q.w_mu);
    f(p.b_mu, q.b_mu);
    f(p.w_lv, q.w_lv);
    f(p.b_lv, q.b_lv);
    f(p.w2, q.w2);
    f(p.b2, q.b2);
    f(p.w3, q.w3);
    f(p.b3, q.b3);
}

struct TrainingConfig {
    int latent_dim = 38;
    int hidden = 128;
    int decoder_hidden = 16;
    double kl_weight = 0.125;  // 2^-3
    double learning_rate = 1e-3;
    int epochs = 100;
    int batch_size = 0;  // 0 = full batch
    double dropout_rate = 0.1;
    std::uint64_t rng_seed = 0;
    LossMode loss_mode = LossMode::geodesic;
};

struct LatentCode {
    Vector z;
    Vector posterior_mean;
    Vector posterior_logvar;
};

struct LossBreakdown {
    double reconstruction = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// One training sample. `input` is the (standardized) encoder input;
// `target_field` is the flat decoder-space target used by tangent-MSE and
// Euclidean modes; `target_traj` is the manifold target for the geodesic loss.
struct TrainSample {
    Vector input;
    Vector target_field;
    Trajectory target_traj;
};

// --- field flattening (frame-major, row-major within a frame) --------------

Vector flatten_field(const TangentField& f);
TangentField unflatten_field(const Vector& v, int t, int k, int m);

// --- forward ops ------------------------------------------------------------

LatentCode encode(const NetworkParams& p, const Vector& v, bool dropout_active,
                  double dropout_rate, Rng& rng);

// Raw decoder output, no manifold structure (Euclidean baseline path).
Vector decode_raw(const NetworkParams& p, const Vector& z);

// Decoder output legalized per frame into T_mean via tangent projection.
TangentField decode(const NetworkParams& p, const Vector& z, const Trajectory& mean_traj);

Trajectory reconstruct(const NetworkParams& p, const Vector& z, const Trajectory& mean_traj);

double kl_divergence(const LatentCode& code);

double reconstruction_loss_geodesic(const Trajectory& target, const Trajectory& reconstructed);
double reconstruction_loss_tangent(const TangentField& target, const TangentField& decoded);

// --- training ---------------------------------------------------------------

// Batch-mean loss and exact reverse-mode gradient. `mean_traj` == nullptr
// selects the Euclidean path (no projection, target_field MSE only).
std::pair<LossBreakdown, NetworkParams> loss_and_gradient(const NetworkParams& p,
                                                          const std::vector<TrainSample>& batch,
                                                          const Trajectory* mean_traj,
                                                          const TrainingConfig& cfg, Rng& rng);

struct TrainResult {
    NetworkParams params;
    std::vector<LossBreakdown> history;  // one entry per epoch
    bool diverged = false;
};

TrainResult train(const std::vector<TrainSample>& dataset, const Trajectory* mean_traj,
                  const TrainingConfig& cfg, const NetworkParams* initial = nullptr);

// Sort latent dimensions by descending empirical variance of the posterior
// means; conjugates the heads and decoder input so outputs are unchanged.
// Returns (permutation, reordered codes); permutation[j] = old index now at j.
std::pair<std::vector<int>, std::vector<LatentCode>> reorder_latents(
    NetworkParams& p, const std::vector<LatentCode>& codes);

// --- PCA (tangent-space and Euclidean share this) ---------------------------

struct PcaModel {
    Vector mean;
    Matrix components;  // J x D, rows orthonormal, descending eigenvalue
    Vector eigenvalues;

    Vector project(const Vector& v) const;
    Vector reconstruct(const Vector& coords) const;
};

PcaModel fit_pca(const std::vector<Vector>& data, int n_components);

// --- persistence ------------------------------------------------------------

constexpr int kModelFormatVersion = 1;

struct ModelState {
    NetworkParams params;
    Trajectory mean_traj;  // empty frames => Euclidean model
    Matrix reference;      // TSRVF reference (may be 0x0)
    std::vector<int> latent_permutation;
    Vector standardize_mean;
    Vector standardize_std;
    TrainingConfig config;
};

void save_model(const ModelState& state, const std::string& path);
ModelState load_model(const std::string& path);

}  // namespace esvae
