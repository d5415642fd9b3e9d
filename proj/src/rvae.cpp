#include "esvae/rvae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "esvae/parallel.hpp"

namespace esvae {

using json = nlohmann::ordered_json;

bool NetworkParams::all_finite() const {
    bool ok = true;
    for_each_param(*this, [&](const auto& a) { ok = ok && a.allFinite(); });
    return ok;
}

NetworkParams NetworkParams::init(int d, int h, int h_dec, int l, Rng& rng) {
    NetworkParams p;
    auto fill = [&rng](Matrix& w, int rows, int cols) {
        w.resize(rows, cols);
        double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    };
    fill(p.w1, h, d);
    p.b1 = Vector::Zero(h);
    fill(p.w_mu, l, h);
    p.b_mu = Vector::Zero(l);
    fill(p.w_lv, l, h);
    p.b_lv = Vector::Zero(l);
    fill(p.w2, h_dec, l);
    p.b2 = Vector::Zero(h_dec);
    fill(p.w3, d, h_dec);
    p.b3 = Vector::Zero(d);
    return p;
}

Vector flatten_field(const TangentField& f) {
    const int t = f.T();
    const int k = static_cast<int>(f.vectors.front().rows());
    const int m = static_cast<int>(f.vectors.front().cols());
    Vector out(static_cast<long>(t) * k * m);
    long idx = 0;
    for (int i = 0; i < t; ++i)
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < m; ++c) out(idx++) = f.vectors[i](r, c);
    return out;
}

TangentField unflatten_field(const Vector& v, int t, int k, int m) {
    if (v.size() != static_cast<long>(t) * k * m)
        throw DimensionMismatchError("unflatten_field: size mismatch");
    TangentField f;
    f.vectors.resize(t);
    long idx = 0;
    for (int i = 0; i < t; ++i) {
        f.vectors[i].resize(k, m);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < m; ++c) f.vectors[i](r, c) = v(idx++);
    }
    return f;
}

namespace {

Vector dropout_mask(int h, double rate, Rng& rng) {
    Vector mask = Vector::Ones(h);
    if (rate <= 0.0) return mask;
    double keep = 1.0 - rate;
    for (int i = 0; i < h; ++i) mask(i) = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
    return mask;
}

struct Forward {
    Vector h, hd, mu, lv, eps, z, g, raw;
};

Forward forward_pass(const NetworkParams& p, const Vector& v, const Vector& mask,
                     const Vector& eps) {
    Forward f;
    f.h = (p.w1 * v + p.b1).array().tanh();
    f.hd = f.h.cwiseProduct(mask);
    f.mu = p.w_mu * f.hd + p.b_mu;
    f.lv = p.w_lv * f.hd + p.b_lv;
    f.eps = eps;
    f.z = f.mu + (f.lv.array() / 2.0).exp().matrix().cwiseProduct(eps);
    f.g = (p.w2 * f.z + p.b2).array().tanh();
    f.raw = p.w3 * f.g + p.b3;
    return f;
}

// Loss and gradient of the per-frame squared geodesic shape distance,
// differentiated through tangent projection and the exponential map. The
// optimal rotation is held fixed (it is a minimizer, so its first-order
// sensitivity vanishes).
double geodesic_frame(const Matrix& mean_t, const Matrix& raw_t, const Matrix& target_t,
                      bool centered, int frame_index, Matrix* grad_raw) {
    (void)frame_index;
    Matrix w = project_to_tangent(mean_t, raw_t, centered);
    double theta_w = w.norm();
    // Keep training alive when the decoder overshoots the injectivity radius:
    // clamp the field to just inside it and pass the gradient straight through,
    // so the radial component still pushes the decoder back inward.
    const double theta_max = M_PI - 1e-3;
    if (theta_w >= theta_max) {
        w *= theta_max / theta_w;
        theta_w = theta_max;
    }
    Matrix xhat = sphere_exp(mean_t, w);
    Matrix rstar = optimal_rotation(xhat, target_t).rotation;
    Matrix y = target_t * rstar;
    double d = sphere_distance(xhat, y);
    if (grad_raw) {
        Matrix gw;
        if (d < 1e-14) {
            gw = Matrix::Zero(mean_t.rows(), mean_t.cols());
        } else {
            Matrix gx = -2.0 * sphere_log(xhat, y);
            if (theta_w < 1e-9) {
                gw = gx - inner(mean_t, gx) * mean_t;
            } else {
                // Adjoint of dExp via Jacobi fields: factor 1 along the
                // geodesic direction, sin(theta)/theta orthogonally.
                Matrix what = w / theta_w;
                Matrix e = -std::sin(theta_w) * mean_t + std::cos(theta_w) * what;
                double a = inner(gx, e);
                Matrix gperp = gx - a * e;
                gw = a * what + (std::sin(theta_w) / theta_w) * gperp;
            }
        }
        *grad_raw = project_to_tangent(mean_t, gw, centered);
    }
    return d * d;
}

struct SampleGrad {
    double recon = 0.0;
    double kl = 0.0;
    NetworkParams grad;
};

NetworkParams zero_like(const NetworkParams& p) {
    NetworkParams z = p;
    for_each_param(z, [](auto& a) { a.setZero(); });
    return z;
}

SampleGrad sample_loss_grad(const NetworkParams& p, const TrainSample& sample,
                            const Trajectory* mean_traj, const TrainingConfig& cfg,
                            const Vector& mask, const Vector& eps) {
    SampleGrad out;
    Forward f = forward_pass(p, sample.input, mask, eps);
    const int d_dim = p.input_dim();

    Vector g_raw(d_dim);
    if (mean_traj == nullptr) {
        Vector diff = f.raw - sample.target_field;
        out.recon = diff.squaredNorm();
        g_raw = 2.0 * diff;
    } else {
        const int t = mean_traj->T(), k = mean_traj->k(), m = mean_traj->m();
        TangentField raw_field = unflatten_field(f.raw, t, k, m);
        if (cfg.loss_mode == LossMode::geodesic) {
            TangentField grad_field;
            grad_field.vectors.resize(t);
            for (int i = 0; i < t; ++i)
                out.recon += geodesic_frame(mean_traj->frames[i], raw_field.vectors[i],
                                            sample.target_traj.frames[i], mean_traj->centered, i,
                                            &grad_field.vectors[i]);
            g_raw = flatten_field(grad_field);
        } else {
            TangentField target = unflatten_field(sample.target_field, t, k, m);
            TangentField grad_field;
            grad_field.vectors.resize(t);
            for (int i = 0; i < t; ++i) {
                Matrix w = project_to_tangent(mean_traj->frames[i], raw_field.vectors[i],
                                              mean_traj->centered);
                Matrix diff = w - target.vectors[i];
                out.recon += diff.squaredNorm();
                grad_field.vectors[i] = project_to_tangent(mean_traj->frames[i], 2.0 * diff,
                                                           mean_traj->centered);
            }
            g_raw = flatten_field(grad_field);
        }
    }

    out.kl = 0.5 * (f.lv.array().exp() + f.mu.array().square() - 1.0 - f.lv.array()).sum();
    const double beta = cfg.kl_weight;

    // Reverse pass.
    out.grad = zero_like(p);
    NetworkParams& g = out.grad;
    g.w3 = g_raw * f.g.transpose();
    g.b3 = g_raw;
    Vector gg = p.w3.transpose() * g_raw;
    Vector ggpre = gg.cwiseProduct((1.0 - f.g.array().square()).matrix());
    g.w2 = ggpre * f.z.transpose();
    g.b2 = ggpre;
    Vector gz = p.w2.transpose() * ggpre;
    Vector gmu = gz + beta * f.mu;
    Vector glv = gz.cwiseProduct((0.5 * (f.lv.array() / 2.0).exp()).matrix().cwiseProduct(f.eps)) +
                 (beta * 0.5) * (f.lv.array().exp() - 1.0).matrix();
    g.w_mu = gmu * f.hd.transpose();
    g.b_mu = gmu;
    g.w_lv = glv * f.hd.transpose();
    g.b_lv = glv;
    Vector ghd = p.w_mu.transpose() * gmu + p.w_lv.transpose() * glv;
    Vector gh = ghd.cwiseProduct(mask);
    Vector ghpre = gh.cwiseProduct((1.0 - f.h.array().square()).matrix());
    g.w1 = ghpre * sample.input.transpose();
    g.b1 = ghpre;
    return out;
}

}  // namespace

LatentCode encode(const NetworkParams& p, const Vector& v, bool dropout_active,
                  double dropout_rate, Rng& rng) {
    if (v.size() != p.input_dim()) throw DimensionMismatchError("encode: input size mismatch");
    Vector mask = dropout_active ? dropout_mask(p.hidden(), dropout_rate, rng)
                                 : Vector::Ones(p.hidden());
    Vector eps = Vector::Zero(p.latent_dim());
    if (dropout_active)
        for (int i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
    Forward f = forward_pass(p, v, mask, eps);
    LatentCode code;
    code.posterior_mean = f.mu;
    code.posterior_logvar = f.lv;
    code.z = dropout_active ? f.z : f.mu;  // deterministic at inference
    return code;
}

Vector decode_raw(const NetworkParams& p, const Vector& z) {
    if (z.size() != p.latent_dim()) throw DimensionMismatchError("decode: latent size mismatch");
    Vector g = (p.w2 * z + p.b2).array().tanh();
    return p.w3 * g + p.b3;
}

TangentField decode(const NetworkParams& p, const Vector& z, const Trajectory& mean_traj) {
    Vector raw = decode_raw(p, z);
    TangentField f = unflatten_field(raw, mean_traj.T(), mean_traj.k(), mean_traj.m());
    for (int i = 0; i < mean_traj.T(); ++i)
        f.vectors[i] = project_to_tangent(mean_traj.frames[i], f.vectors[i], mean_traj.centered);
    return f;
}

Trajectory reconstruct(const NetworkParams& p, const Vector& z, const Trajectory& mean_traj) {
    return trajectory_exp(mean_traj, decode(p, z, mean_traj));
}

double kl_divergence(const LatentCode& code) {
    return 0.5 * (code.posterior_logvar.array().exp() + code.posterior_mean.array().square() -
                  1.0 - code.posterior_logvar.array())
                     .sum();
}

double reconstruction_loss_geodesic(const Trajectory& target, const Trajectory& reconstructed) {
    if (target.T() != reconstructed.T())
        throw DimensionMismatchError("reconstruction_loss_geodesic: length mismatch");
    double s = 0.0;
    for (int i = 0; i < target.T(); ++i) {
        double d = shape_distance(target.frames[i], reconstructed.frames[i]);
        s += d * d;
    }
    return s;
}

double reconstruction_loss_tangent(const TangentField& target, const TangentField& decoded) {
    if (target.T() != decoded.T())
        throw DimensionMismatchError("reconstruction_loss_tangent: shape mismatch");
    double s = 0.0;
    for (int i = 0; i < target.T(); ++i) s += (target.vectors[i] - decoded.vectors[i]).squaredNorm();
    return s;
}

std::pair<LossBreakdown, NetworkParams> loss_and_gradient(const NetworkParams& p,
                                                          const std::vector<TrainSample>& batch,
                                                          const Trajectory* mean_traj,
                                                          const TrainingConfig& cfg, Rng& rng) {
    if (batch.empty()) throw InvalidInputError("loss_and_gradient: empty batch");
    const int n = static_cast<int>(batch.size());
    Vector mask = dropout_mask(p.hidden(), cfg.dropout_rate, rng);
    std::vector<Vector> eps(n);
    for (int i = 0; i < n; ++i) {
        eps[i].resize(p.latent_dim());
        for (long j = 0; j < eps[i].size(); ++j) eps[i](j) = rng.normal();
    }

    std::vector<SampleGrad> grads(n);
    for_each_index(n, [&](std::ptrdiff_t i) {
        grads[i] = sample_loss_grad(p, batch[i], mean_traj, cfg, mask, eps[i]);
    });

    LossBreakdown loss;
    NetworkParams total = zero_like(p);
    for (int i = 0; i < n; ++i) {  // fixed reduction order
        loss.reconstruction += grads[i].recon;
        loss.kl += grads[i].kl;
        for_each_param_pair(total, grads[i].grad, [](auto& a, const auto& b) { a += b; });
    }
    const double inv_n = 1.0 / n;
    loss.reconstruction *= inv_n;
    loss.kl *= inv_n;
    loss.total = loss.reconstruction + cfg.kl_weight * loss.kl;
    for_each_param(total, [&](auto& a) { a *= inv_n; });

    if (!std::isfinite(loss.total)) {
        long bad = -1;
        for (int i = 0; i < n; ++i)
            if (!std::isfinite(grads[i].recon) || !std::isfinite(grads[i].kl)) {
                bad = i;
                break;
            }
        throw TrainingDivergenceError("loss_and_gradient: non-finite loss", bad);
    }
    return {loss, std::move(total)};
}

TrainResult train(const std::vector<TrainSample>& dataset, const Trajectory* mean_traj,
                  const TrainingConfig& cfg, const NetworkParams* initial) {
    if (dataset.empty()) throw InvalidInputError("train: empty dataset");
    const int n = static_cast<int>(dataset.size());
    const int d_dim = static_cast<int>(dataset.front().input.size());
    Rng root(cfg.rng_seed);

    TrainResult res;
    if (initial) {
        res.params = *initial;
    } else {
        Rng init_rng = root.substream("init");
        res.params = NetworkParams::init(d_dim, cfg.hidden, cfg.decoder_hidden, cfg.latent_dim,
                                         init_rng);
    }

    // Adam with the standard moment defaults.
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    NetworkParams m1 = zero_like(res.params);
    NetworkParams m2 = zero_like(res.params);
    long step = 0;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int batch_size = (cfg.batch_size <= 0 || cfg.batch_size > n) ? n : cfg.batch_size;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = root.substream("shuffle", epoch);
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<int>(shuffle_rng.below(i + 1))]);

        LossBreakdown epoch_loss;
        int samples_seen = 0;
        for (int start = 0; start < n; start += batch_size) {
            int len = std::min(batch_size, n - start);
            std::vector<TrainSample> batch;
            batch.reserve(len);
            for (int i = 0; i < len; ++i) batch.push_back(dataset[order[start + i]]);
            Rng noise_rng = root.substream("noise", static_cast<std::uint64_t>(step));
            LossBreakdown loss;
            NetworkParams grad;
            try {
                std::tie(loss, grad) = loss_and_gradient(res.params, batch, mean_traj, cfg,
                                                         noise_rng);
            } catch (const TrainingDivergenceError&) {
                res.diverged = true;
                return res;
            }
            ++step;
            double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for_each_param_pair(m1, grad, [&](auto& m, const auto& g) {
                m = beta1 * m + (1.0 - beta1) * g;
            });
            for_each_param_pair(m2, grad, [&](auto& v, const auto& g) {
                v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
            });
            NetworkParams upd = zero_like(res.params);
            for_each_param_pair(upd, m1, [&](auto& u, const auto& m) { u = m / bc1; });
            for_each_param_pair(upd, m2, [&](auto& u, const auto& v) {
                u = (u.array() / ((v.array() / bc2).sqrt() + adam_eps)).matrix();
            });
            for_each_param_pair(res.params, upd, [&](auto& p, const auto& u) {
                p -= cfg.learning_rate * u;
            });
            epoch_loss.reconstruction += loss.reconstruction * len;
            epoch_loss.kl += loss.kl * len;
            samples_seen += len;
            if (!res.params.all_finite()) {
                res.diverged = true;
                return res;
            }
        }
        epoch_loss.reconstruction /= samples_seen;
        epoch_loss.kl /= samples_seen;
        epoch_loss.total = epoch_loss.reconstruction + cfg.kl_weight * epoch_loss.kl;
        res.history.push_back(epoch_loss);
    }
    return res;
}

std::pair<std::vector<int>, std::vector<LatentCode>> reorder_latents(
    NetworkParams& p, const std::vector<LatentCode>& codes) {
    if (codes.size() < 2) throw InvalidInputError("reorder_latents: need >= 2 codes");
    const int l = p.latent_dim();
    Vector mean = Vector::Zero(l), var = Vector::Zero(l);
    for (const auto& c : codes) mean += c.posterior_mean;
    mean /= static_cast<double>(codes.size());
    for (const auto& c : codes) var += (c.posterior_mean - mean).array().square().matrix();
    var /= static_cast<double>(codes.size());

    std::vector<int> perm(l);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return var(a) > var(b); });

    NetworkParams q = p;
    for (int j = 0; j < l; ++j) {
        q.w_mu.row(j) = p.w_mu.row(perm[j]);
        q.b_mu(j) = p.b_mu(perm[j]);
        q.w_lv.row(j) = p.w_lv.row(perm[j]);
        q.b_lv(j) = p.b_lv(perm[j]);
        q.w2.col(j) = p.w2.col(perm[j]);
    }
    p = std::move(q);

    // Codes may be partially populated (e.g. posterior means only); permute
    // whichever vectors are present.
    auto permute = [&](const Vector& v, Vector& out) {
        if (v.size() != l) return;
        out.resize(l);
        for (int j = 0; j < l; ++j) out(j) = v(perm[j]);
    };
    std::vector<LatentCode> reordered(codes.size());
    for (size_t i = 0; i < codes.size(); ++i) {
        permute(codes[i].z, reordered[i].z);
        permute(codes[i].posterior_mean, reordered[i].posterior_mean);
        permute(codes[i].posterior_logvar, reordered[i].posterior_logvar);
    }
    return {perm, std::move(reordered)};
}

Vector PcaModel::project(const Vector& v) const { return components * (v - mean); }

Vector PcaModel::reconstruct(const Vector& coords) const {
    return mean + components.transpose() * coords;
}

PcaModel fit_pca(const std::vector<Vector>& data, int n_components) {
    const int n = static_cast<int>(data.size());
    if (n < 2) throw InvalidInputError("fit_pca: need >= 2 samples");
    const long d = data.front().size();
    if (n_components < 1 || n_components > std::min<long>(n - 1, d))
        throw InvalidInputError("fit_pca: component count out of range");

    PcaModel model;
    model.mean = Vector::Zero(d);
    for (const auto& v : data) model.mean += v;
    model.mean /= static_cast<double>(n);

    // Gram-matrix route: eigenvectors of C C^T lift to principal directions.
    Matrix centered(n, d);
    for (int i = 0; i < n; ++i) centered.row(i) = (data[i] - model.mean).transpose();
    Matrix gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    model.components.resize(n_components, d);
    model.eigenvalues.resize(n_components);
    for (int j = 0; j < n_components; ++j) {
        int src = n - 1 - j;  // solver sorts ascending
        double lambda = std::max(es.eigenvalues()(src), 0.0);
        model.eigenvalues(j) = lambda / (n - 1);
        Vector dir = centered.transpose() * es.eigenvectors().col(src);
        double norm = dir.norm();
        if (norm > 1e-12) {
            dir /= norm;
            long max_idx = 0;
            dir.cwiseAbs().maxCoeff(&max_idx);
            if (dir(max_idx) < 0.0) dir = -dir;  // fixed sign convention
        } else {
            dir.setZero();
        }
        model.components.row(j) = dir.transpose();
    }
    return model;
}

// --- persistence ------------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data;
    data.reserve(static_cast<size_t>(m.size()));
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    j["data"] = data;
    return j;
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<long>(), j.at("cols").get<long>());
    const auto& data = j.at("data");
    size_t idx = 0;
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) m(r, c) = data.at(idx++).get<double>();
    return m;
}

json vector_to_json(const Vector& v) {
    std::vector<double> data(v.data(), v.data() + v.size());
    return json(data);
}

Vector vector_from_json(const json& j) {
    Vector v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

}  // namespace

void save_model(const ModelState& state, const std::string& path) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["layout"] = "row-major";
    json dims;
    dims["D"] = state.params.input_dim();
    dims["H"] = state.params.hidden();
    dims["H_dec"] = state.params.decoder_hidden();
    dims["L"] = state.params.latent_dim();
    if (!state.mean_traj.frames.empty()) {
        dims["T"] = state.mean_traj.T();
        dims["k"] = state.mean_traj.k();
        dims["m"] = state.mean_traj.m();
    }
    j["dims"] = dims;
    json params;
    params["w1"] = matrix_to_json(state.params.w1);
    params["b1"] = vector_to_json(state.params.b1);
    params["w_mu"] = matrix_to_json(state.params.w_mu);
    params["b_mu"] = vector_to_json(state.params.b_mu);
    params["w_lv"] = matrix_to_json(state.params.w_lv);
    params["b_lv"] = vector_to_json(state.params.b_lv);
    params["w2"] = matrix_to_json(state.params.w2);
    params["b2"] = vector_to_json(state.params.b2);
    params["w3"] = matrix_to_json(state.params.w3);
    params["b3"] = vector_to_json(state.params.b3);
    j["params"] = params;
    json mean_frames = json::array();
    for (const auto& f : state.mean_traj.frames) mean_frames.push_back(matrix_to_json(f));
    j["mean_trajectory"] = mean_frames;
    j["mean_centered"] = state.mean_traj.centered;
    if (state.reference.size() > 0) j["reference"] = matrix_to_json(state.reference);
    j["latent_permutation"] = state.latent_permutation;
    j["standardize_mean"] = vector_to_json(state.standardize_mean);
    j["standardize_std"] = vector_to_json(state.standardize_std);
    json cfg;
    cfg["latent_dim"] = state.config.latent_dim;
    cfg["hidden"] = state.config.hidden;
    cfg["decoder_hidden"] = state.config.decoder_hidden;
    cfg["kl_weight"] = state.config.kl_weight;
    cfg["learning_rate"] = state.config.learning_rate;
    cfg["epochs"] = state.config.epochs;
    cfg["batch_size"] = state.config.batch_size;
    cfg["dropout_rate"] = state.config.dropout_rate;
    cfg["rng_seed"] = state.config.rng_seed;
    cfg["loss_mode"] = state.config.loss_mode == LossMode::geodesic ? "geodesic" : "tangent_mse";
    j["training_config"] = cfg;

    std::ofstream out(path);
    if (!out) throw IoError("save_model: cannot open " + path);
    out << j.dump(1) << '\n';
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_model: cannot open " + path);
    json j;
    in >> j;
    if (!j.contains("format_version") || j["format_version"].get<int>() != kModelFormatVersion)
        throw IoError("load_model: unsupported format version");
    ModelState s;
    const auto& params = j.at("params");
    s.params.w1 = matrix_from_json(params.at("w1"));
    s.params.b1 = vector_from_json(params.at("b1"));
    s.params.w_mu = matrix_from_json(params.at("w_mu"));
    s.params.b_mu = vector_from_json(params.at("b_mu"));
    s.params.w_lv = matrix_from_json(params.at("w_lv"));
    s.params.b_lv = vector_from_json(params.at("b_lv"));
    s.params.w2 = matrix_from_json(params.at("w2"));
    s.params.b2 = vector_from_json(params.at("b2"));
    s.params.w3 = matrix_from_json(params.at("w3"));
    s.params.b3 = vector_from_json(params.at("b3"));
    for (const auto& f : j.at("mean_trajectory")) s.mean_traj.frames.push_back(matrix_from_json(f));
    s.mean_traj.centered = j.value("mean_centered", true);
    if (j.contains("reference")) s.reference = matrix_from_json(j.at("reference"));
    s.latent_permutation = j.at("latent_permutation").get<std::vector<int>>();
    s.standardize_mean = vector_from_json(j.at("standardize_mean"));
    s.standardize_std = vector_from_json(j.at("standardize_std"));
    const auto& cfg = j.at("training_config");
    s.config.latent_dim = cfg.at("latent_dim").get<int>();
    s.config.hidden = cfg.at("hidden").get<int>();
    s.config.decoder_hidden = cfg.at("decoder_hidden").get<int>();
    s.config.kl_weight = cfg.at("kl_weight").get<double>();
    s.config.learning_rate = cfg.at("learning_rate").get<double>();
    s.config.epochs = cfg.at("epochs").get<int>();
    s.config.batch_size = cfg.at("batch_size").get<int>();
    s.config.dropout_rate = cfg.at("dropout_rate").get<double>();
    s.config.rng_seed = cfg.at("rng_seed").get<std::uint64_t>();
    s.config.loss_mode = cfg.at("loss_mode").get<std::string>() == "geodesic"
                             ? LossMode::geodesic
                             : LossMode::tangent_mse;
    return s;
}

}  // namespace esvae
