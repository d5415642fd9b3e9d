#include "esvae/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "esvae/parallel.hpp"

namespace esvae {

namespace {

bool strong_stage(AlignmentStage s) {
    return s == AlignmentStage::kendall || s == AlignmentStage::kendall_tsrvf;
}

void hash_doubles(std::ostringstream& ss, const double* p, long n) {
    char buf[32];
    for (long i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,", p[i]);
        ss << buf;
    }
}

std::uint64_t fitted_hash(const FittedFold& fold) {
    std::ostringstream ss;
    hash_doubles(ss, fold.standardize_mean.data(), fold.standardize_mean.size());
    hash_doubles(ss, fold.standardize_std.data(), fold.standardize_std.size());
    for_each_param(const_cast<NetworkParams&>(fold.params), [&](const auto& a) {
        hash_doubles(ss, a.data(), a.size());
    });
    if (fold.has_context) {
        for (const auto& f : fold.context.mean.frames) hash_doubles(ss, f.data(), f.size());
        hash_doubles(ss, fold.context.reference.data(), fold.context.reference.size());
    }
    return fnv1a(ss.str());
}

Vector sample_input(const PreprocessedSample& s) {
    return s.is_tangent ? flatten_field(s.field) : s.flat;
}

Vector standardize(const FittedFold& fold, const Vector& v) {
    return (v - fold.standardize_mean).cwiseQuotient(fold.standardize_std);
}

}  // namespace

FittedFold fit_fold(const std::vector<RawSequence>& train, const PipelineConfig& cfg,
                    int fold_index) {
    if (train.empty()) throw InvalidInputError("fit_fold: empty training set");
    FittedFold fold;

    if (strong_stage(cfg.stage)) {
        std::vector<Trajectory> trajs;
        trajs.reserve(train.size());
        for (const auto& seq : train) {
            Trajectory tr;
            tr.frames.reserve(seq.T());
            for (const auto& f : seq.frames) tr.frames.push_back(to_preshape(f));
            trajs.push_back(resample_trajectory(tr, cfg.T));
        }
        RegistrationConfig reg = cfg.registration;
        reg.dp_enabled = cfg.stage == AlignmentStage::kendall_tsrvf;
        RegistrationResult res = register_collection(trajs, reg);
        fold.context.mean = res.mean;
        fold.context.reference = res.reference;
        fold.has_context = true;
    }

    // Preprocess every training sequence with the fitted (train-only) context.
    std::vector<PreprocessedSample> pre(train.size());
    for_each_index(static_cast<std::ptrdiff_t>(train.size()), [&](std::ptrdiff_t i) {
        pre[i] = preprocess(train[i], cfg.stage, cfg.T,
                            fold.has_context ? &fold.context : nullptr);
    });

    const long d = sample_input(pre.front()).size();
    const double n = static_cast<double>(train.size());
    fold.standardize_mean = Vector::Zero(d);
    std::vector<Vector> inputs(train.size());
    for (size_t i = 0; i < train.size(); ++i) {
        inputs[i] = sample_input(pre[i]);
        fold.standardize_mean += inputs[i];
    }
    fold.standardize_mean /= n;
    Vector var = Vector::Zero(d);
    for (const auto& v : inputs) var += (v - fold.standardize_mean).array().square().matrix();
    var /= n;
    fold.standardize_std = var.array().sqrt().max(1e-12).matrix();
    for (long j = 0; j < d; ++j)
        if (fold.standardize_std[j] < 1e-10) fold.standardize_std[j] = 1.0;

    std::vector<TrainSample> samples(train.size());
    for (size_t i = 0; i < train.size(); ++i) {
        samples[i].input = standardize(fold, inputs[i]);
        if (fold.has_context) {
            samples[i].target_field = inputs[i];
            samples[i].target_traj = pre[i].traj;
        } else {
            // Euclidean path reconstructs the standardized coordinates.
            samples[i].target_field = samples[i].input;
        }
    }

    TrainingConfig tc = cfg.training;
    tc.rng_seed = Rng(cfg.seed).substream("fold", static_cast<std::uint64_t>(fold_index)).next_u64();
    TrainResult trained =
        esvae::train(samples, fold.has_context ? &fold.context.mean : nullptr, tc);
    fold.params = trained.params;

    Rng dummy(0);
    fold.train_embeddings.resize(train.size());
    for (size_t i = 0; i < train.size(); ++i) {
        LatentCode code = encode(fold.params, samples[i].input, false, 0.0, dummy);
        LabeledEmbedding emb;
        emb.code = code.posterior_mean;
        emb.subject_id = train[i].subject_id;
        if (train[i].target) emb.target = *train[i].target;
        if (train[i].label) emb.label = *train[i].label;
        fold.train_embeddings[i] = std::move(emb);
    }

    fold.artifact_hash = fitted_hash(fold);
    return fold;
}

Vector embed_sequence(const FittedFold& fold, const RawSequence& seq, const PipelineConfig& cfg) {
    PreprocessedSample pre =
        preprocess(seq, cfg.stage, cfg.T, fold.has_context ? &fold.context : nullptr);
    Rng dummy(0);
    return encode(fold.params, standardize(fold, sample_input(pre)), false, 0.0, dummy)
        .posterior_mean;
}

CrossValidationResult run_cross_validation(const std::vector<RawSequence>& dataset,
                                           const FoldPlan& plan, const PipelineConfig& cfg) {
    if (!plan.valid()) throw InvalidInputError("run_cross_validation: invalid fold plan");
    std::map<std::string, std::vector<const RawSequence*>> by_subject;
    for (const auto& s : dataset) by_subject[s.subject_id].push_back(&s);

    CrossValidationResult res;
    res.has_classification = !dataset.empty();
    res.has_regression = !dataset.empty();
    for (const auto& s : dataset) {
        if (!s.label) res.has_classification = false;
        if (!s.target) res.has_regression = false;
    }

    for (size_t f = 0; f < plan.folds.size(); ++f) {
        const Fold& fold_spec = plan.folds[f];
        std::vector<RawSequence> train;
        for (const auto& subj : fold_spec.train_subjects) {
            auto it = by_subject.find(subj);
            if (it == by_subject.end()) continue;
            for (const auto* s : it->second) train.push_back(*s);
        }
        std::vector<const RawSequence*> test;
        for (const auto& subj : fold_spec.test_subjects) {
            auto it = by_subject.find(subj);
            if (it == by_subject.end()) continue;
            for (const auto* s : it->second) test.push_back(s);
        }
        if (test.empty())
            throw InvalidInputError("run_cross_validation: fold " + std::to_string(f) +
                                    " has an empty test set");
        if (train.empty())
            throw InvalidInputError("run_cross_validation: fold " + std::to_string(f) +
                                    " has an empty training set");

        FittedFold fitted = fit_fold(train, cfg, static_cast<int>(f));
        res.fold_artifact_hashes.push_back(fitted.artifact_hash);

        for (const auto* s : test) {
            Vector code = embed_sequence(fitted, *s, cfg);
            SubjectSample sample;
            sample.subject_id = s->subject_id;
            if (res.has_regression) {
                sample.y_true = *s->target;
                sample.y_pred = knn_regress(fitted.train_embeddings, code, cfg.knn_k);
            }
            if (res.has_classification) {
                sample.label_true = *s->label;
                sample.label_pred = knn_classify(fitted.train_embeddings, code, cfg.knn_k);
            }
            res.pooled.push_back(std::move(sample));
            res.fold_of_sample.push_back(static_cast<int>(f));
        }
    }

    Rng ci_root(cfg.seed);
    if (res.has_classification) {
        std::set<int> class_set;
        for (const auto& s : res.pooled) class_set.insert(s.label_true);
        std::vector<int> classes(class_set.begin(), class_set.end());
        std::vector<int> yt, yp;
        for (const auto& s : res.pooled) {
            yt.push_back(s.label_true);
            yp.push_back(s.label_pred);
        }
        res.classification = classification_metrics(yt, yp, classes);
        auto f1_metric = [classes](const std::vector<SubjectSample>& pool) {
            std::vector<int> t, p;
            for (const auto& s : pool) {
                t.push_back(s.label_true);
                p.push_back(s.label_pred);
            }
            return classification_metrics(t, p, classes).macro_f1;
        };
        res.macro_f1_ci = bootstrap_ci(res.pooled, f1_metric, cfg.bootstrap_replicates,
                                       ci_root.substream("ci-f1").next_u64());
    }
    if (res.has_regression) {
        std::vector<double> yt, yp;
        for (const auto& s : res.pooled) {
            yt.push_back(s.y_true);
            yp.push_back(s.y_pred);
        }
        res.regression = regression_metrics(yt, yp);
        auto collect = [](const std::vector<SubjectSample>& pool, std::vector<double>& t,
                          std::vector<double>& p) {
            for (const auto& s : pool) {
                t.push_back(s.y_true);
                p.push_back(s.y_pred);
            }
        };
        res.rmse_ci = bootstrap_ci(
            res.pooled,
            [&collect](const std::vector<SubjectSample>& pool) {
                std::vector<double> t, p;
                collect(pool, t, p);
                return regression_metrics(t, p).rmse;
            },
            cfg.bootstrap_replicates, ci_root.substream("ci-rmse").next_u64());
        res.r2_ci = bootstrap_ci(
            res.pooled,
            [&collect](const std::vector<SubjectSample>& pool) {
                std::vector<double> t, p;
                collect(pool, t, p);
                return regression_metrics(t, p).r2;
            },
            cfg.bootstrap_replicates, ci_root.substream("ci-r2").next_u64());
    }
    return res;
}

// --- sphere demo -------------------------------------------------------------

namespace {

// Mean geodesic distance from each reconstruction to the true curve point
// that generated its data point (distance-to-nearest would reward collapse).
double curve_error(const std::vector<Matrix>& recon, const std::vector<double>& s_values) {
    double total = 0.0;
    for (size_t i = 0; i < recon.size(); ++i)
        total += sphere_distance(recon[i], sphere_curve_point(s_values[i]));
    return total / static_cast<double>(recon.size());
}

Matrix normalize_to_sphere(const Vector& v) {
    Matrix p(3, 1);
    double n = v.norm();
    if (n < 1e-12) {
        p.setZero();
        p(0, 0) = 1.0;
        return p;
    }
    for (int i = 0; i < 3; ++i) p(i, 0) = v[i] / n;
    return p;
}

}  // namespace

SphereDemoResult run_sphere_demo(const SphereDemoConfig& cfg) {
    SphereDemoResult out;
    out.data = generate_sphere_dataset(cfg.data);
    const auto& pts = out.data.points;
    const int n = static_cast<int>(pts.size());

    std::vector<Vector> vecs(n);
    for (int i = 0; i < n; ++i) vecs[i] = Eigen::Map<const Vector>(pts[i].data(), 3);

    // Euclidean PCA, 1 component; reconstructions normalized back to the sphere.
    {
        PcaModel pca = fit_pca(vecs, 1);
        SphereMethodResult r;
        r.method = "euclidean_pca";
        for (const auto& v : vecs)
            r.reconstructions.push_back(normalize_to_sphere(pca.reconstruct(pca.project(v))));
        r.mean_geodesic_error = curve_error(r.reconstructions, out.data.s_values);
        out.methods.push_back(std::move(r));
    }

    // Euclidean VAE (L = 1) on raw coordinates.
    {
        TrainingConfig tc;
        tc.latent_dim = 1;
        tc.hidden = cfg.hidden;
        tc.decoder_hidden = cfg.decoder_hidden;
        tc.kl_weight = cfg.kl_weight;
        tc.learning_rate = cfg.learning_rate;
        tc.epochs = cfg.epochs;
        tc.dropout_rate = 0.0;
        tc.rng_seed = Rng(cfg.data.seed).substream("sphere-evae").next_u64();
        std::vector<TrainSample> samples(n);
        for (int i = 0; i < n; ++i) {
            samples[i].input = vecs[i];
            samples[i].target_field = vecs[i];
        }
        TrainResult tr = esvae::train(samples, nullptr, tc);
        SphereMethodResult r;
        r.method = "euclidean_vae";
        Rng dummy(0);
        for (int i = 0; i < n; ++i) {
            LatentCode code = encode(tr.params, vecs[i], false, 0.0, dummy);
            r.reconstructions.push_back(
                normalize_to_sphere(decode_raw(tr.params, code.z)));
        }
        r.mean_geodesic_error = curve_error(r.reconstructions, out.data.s_values);
        out.methods.push_back(std::move(r));
    }

    // Frechet mean of the point cloud, shared by the two tangent methods.
    RegistrationConfig mean_cfg;
    mean_cfg.step_size = 0.5;
    mean_cfg.max_iterations = 200;
    mean_cfg.tolerance = 1e-12;
    Matrix mu = static_frechet_mean(pts, mean_cfg).mean;
    std::vector<Vector> logs(n);
    for (int i = 0; i < n; ++i) {
        Matrix w = sphere_log(mu, pts[i]);
        logs[i] = Eigen::Map<const Vector>(w.data(), 3);
    }

    // Tangent PCA, 1 component, reconstruction through the exp map.
    {
        PcaModel pca = fit_pca(logs, 1);
        SphereMethodResult r;
        r.method = "tangent_pca";
        for (const auto& v : logs) {
            Vector rec = pca.reconstruct(pca.project(v));
            Matrix w(3, 1);
            for (int c = 0; c < 3; ++c) w(c, 0) = rec[c];
            w = project_to_tangent(mu, w, /*centered=*/false);
            r.reconstructions.push_back(sphere_exp(mu, w));
        }
        r.mean_geodesic_error = curve_error(r.reconstructions, out.data.s_values);
        out.methods.push_back(std::move(r));
    }

    // ES-VAE (L = 1): shooting vectors in, geodesic loss, exp-map decoding.
    {
        Trajectory mean_traj;
        mean_traj.centered = false;
        mean_traj.frames.push_back(mu);
        TrainingConfig tc;
        tc.latent_dim = 1;
        tc.hidden = cfg.hidden;
        tc.decoder_hidden = cfg.decoder_hidden;
        tc.kl_weight = cfg.kl_weight;
        tc.learning_rate = cfg.learning_rate;
        tc.epochs = cfg.epochs;
        tc.dropout_rate = 0.0;
        tc.loss_mode = LossMode::geodesic;
        tc.rng_seed = Rng(cfg.data.seed).substream("sphere-esvae").next_u64();
        std::vector<TrainSample> samples(n);
        for (int i = 0; i < n; ++i) {
            samples[i].input = logs[i];
            samples[i].target_field = logs[i];
            Trajectory target;
            target.centered = false;
            target.frames.push_back(pts[i]);
            samples[i].target_traj = std::move(target);
        }
        TrainResult tr = esvae::train(samples, &mean_traj, tc);
        SphereMethodResult r;
        r.method = "es_vae";
        Rng dummy(0);
        for (int i = 0; i < n; ++i) {
            LatentCode code = encode(tr.params, samples[i].input, false, 0.0, dummy);
            r.reconstructions.push_back(reconstruct(tr.params, code.z, mean_traj).frames[0]);
        }
        r.mean_geodesic_error = curve_error(r.reconstructions, out.data.s_values);
        out.methods.push_back(std::move(r));
    }

    return out;
}

}  // namespace esvae
