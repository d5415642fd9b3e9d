#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "esvae/parallel.hpp"
#include "esvae/pipeline.hpp"

using namespace esvae;

namespace {

std::vector<RawSequence> tiny_dataset(int classes, int per_class, std::uint64_t seed) {
    LabeledTrajectorySpec spec;
    spec.classes = classes;
    spec.per_class = per_class;
    spec.k = 5;
    spec.m = 3;
    spec.T = 12;
    spec.seed = seed;
    return generate_labeled_trajectories(spec);
}

PipelineConfig fast_config(AlignmentStage stage) {
    PipelineConfig cfg;
    cfg.stage = stage;
    cfg.T = 10;
    cfg.registration.max_iterations = 4;
    cfg.training.latent_dim = 3;
    cfg.training.hidden = 16;
    cfg.training.decoder_hidden = 8;
    cfg.training.epochs = 40;
    cfg.training.dropout_rate = 0.0;
    cfg.knn_k = 3;
    cfg.bootstrap_replicates = 50;
    cfg.seed = 123;
    return cfg;
}

}  // namespace

TEST_CASE("fit_fold is deterministic and seed-sensitive") {
    auto data = tiny_dataset(2, 3, 21);
    PipelineConfig cfg = fast_config(AlignmentStage::preshape);
    FittedFold a = fit_fold(data, cfg, 0);
    FittedFold b = fit_fold(data, cfg, 0);
    CHECK(a.artifact_hash == b.artifact_hash);
    for (size_t i = 0; i < a.train_embeddings.size(); ++i)
        CHECK((a.train_embeddings[i].code - b.train_embeddings[i].code).norm() == 0.0);
    // a different fold index draws a different training substream
    FittedFold c = fit_fold(data, cfg, 1);
    CHECK(a.artifact_hash != c.artifact_hash);
}

TEST_CASE("fit_fold is invariant to the jobs count") {
    auto data = tiny_dataset(2, 3, 22);
    PipelineConfig cfg = fast_config(AlignmentStage::kendall);
    set_jobs(1);
    FittedFold serial = fit_fold(data, cfg, 0);
    set_jobs(4);
    FittedFold parallel = fit_fold(data, cfg, 0);
    set_jobs(0);
    CHECK(serial.artifact_hash == parallel.artifact_hash);
}

TEST_CASE("embedding a training sequence reproduces its stored code") {
    auto data = tiny_dataset(2, 2, 23);
    PipelineConfig cfg = fast_config(AlignmentStage::kendall);
    FittedFold fold = fit_fold(data, cfg, 0);
    for (size_t i = 0; i < data.size(); ++i) {
        Vector code = embed_sequence(fold, data[i], cfg);
        CHECK((code - fold.train_embeddings[i].code).norm() < 1e-12);
    }
}

TEST_CASE("cross-validation pools exactly the per-fold test predictions") {
    auto data = tiny_dataset(2, 4, 24);  // 8 subjects
    PipelineConfig cfg = fast_config(AlignmentStage::preshape);
    std::vector<std::string> subjects;
    for (const auto& s : data) subjects.push_back(s.subject_id);
    FoldPlan plan = leave_n_subjects_out(subjects, 2);  // 4 folds
    CrossValidationResult res = run_cross_validation(data, plan, cfg);

    REQUIRE(res.pooled.size() == data.size());
    CHECK(res.has_classification);
    CHECK(res.has_regression);
    CHECK(res.fold_artifact_hashes.size() == plan.folds.size());

    // [DERIVED] oracle: re-fit each fold independently and replay the k-NN
    // prediction for every pooled sample.
    std::map<std::string, const RawSequence*> by_subject;
    for (const auto& s : data) by_subject[s.subject_id] = &s;
    for (size_t i = 0; i < res.pooled.size(); ++i) {
        int f = res.fold_of_sample[i];
        std::vector<RawSequence> train;
        for (const auto& subj : plan.folds[f].train_subjects) train.push_back(*by_subject[subj]);
        FittedFold fold = fit_fold(train, cfg, f);
        CHECK(fold.artifact_hash == res.fold_artifact_hashes[f]);
        const RawSequence& seq = *by_subject[res.pooled[i].subject_id];
        Vector code = embed_sequence(fold, seq, cfg);
        CHECK(res.pooled[i].y_pred ==
              doctest::Approx(knn_regress(fold.train_embeddings, code, cfg.knn_k))
                  .epsilon(1e-15));
        CHECK(res.pooled[i].label_pred == knn_classify(fold.train_embeddings, code, cfg.knn_k));
        CHECK(res.pooled[i].y_true == *seq.target);
        CHECK(res.pooled[i].label_true == *seq.label);
    }

    // pooled metrics agree with direct recomputation
    std::vector<double> yt, yp;
    for (const auto& s : res.pooled) {
        yt.push_back(s.y_true);
        yp.push_back(s.y_pred);
    }
    RegressionMetrics m = regression_metrics(yt, yp);
    CHECK(res.regression.rmse == m.rmse);
    CHECK(res.regression.r2 == m.r2);
    CHECK(res.rmse_ci.lo95 <= res.rmse_ci.hi95);
}

TEST_CASE("fitted artifacts never depend on test-set targets (no leakage)") {
    auto data = tiny_dataset(2, 3, 25);  // 6 subjects
    PipelineConfig cfg = fast_config(AlignmentStage::kendall);
    std::vector<std::string> subjects;
    for (const auto& s : data) subjects.push_back(s.subject_id);
    FoldPlan plan = leave_n_subjects_out(subjects, 2);

    CrossValidationResult base = run_cross_validation(data, plan, cfg);

    // Corrupt the *test* subjects' targets, labels, and even coordinates of
    // fold 0; fold 0's fitted artifacts must be bit-identical.
    auto corrupted = data;
    for (auto& s : corrupted) {
        const auto& test0 = plan.folds[0].test_subjects;
        if (std::find(test0.begin(), test0.end(), s.subject_id) != test0.end()) {
            s.target = 1e6;
            s.label = 99;
            for (auto& f : s.frames) f *= 1.7;
        }
    }
    CrossValidationResult mod = run_cross_validation(corrupted, plan, cfg);
    CHECK(base.fold_artifact_hashes[0] == mod.fold_artifact_hashes[0]);
    // and the corrupted targets show up only in the predictions' ground truth
    CHECK(base.fold_artifact_hashes.size() == mod.fold_artifact_hashes.size());
}

TEST_CASE("cross-validation rejects empty folds") {
    auto data = tiny_dataset(2, 2, 26);
    PipelineConfig cfg = fast_config(AlignmentStage::preshape);
    FoldPlan plan;
    Fold f;
    f.test_subjects = {"nobody"};
    f.train_subjects = {data[0].subject_id};
    plan.folds.push_back(f);
    CHECK_THROWS_AS(run_cross_validation(data, plan, cfg), InvalidInputError);
}

TEST_CASE("sphere demo produces unit-norm reconstructions for all methods") {
    SphereDemoConfig cfg;
    cfg.data.n_points = 40;
    cfg.data.seed = 2;
    cfg.epochs = 60;  // enough to exercise the paths, not to converge
    SphereDemoResult res = run_sphere_demo(cfg);
    REQUIRE(res.methods.size() == 4);
    CHECK(res.methods[0].method == "euclidean_pca");
    CHECK(res.methods[1].method == "euclidean_vae");
    CHECK(res.methods[2].method == "tangent_pca");
    CHECK(res.methods[3].method == "es_vae");
    for (const auto& m : res.methods) {
        CHECK(std::isfinite(m.mean_geodesic_error));
        CHECK(m.mean_geodesic_error >= 0.0);
        REQUIRE(m.reconstructions.size() == 40);
        for (const auto& p : m.reconstructions) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
    }
}
