#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esvae/data.hpp"
#include "esvae/eval.hpp"
#include "esvae/registration.hpp"
#include "esvae/rvae.hpp"

namespace esvae {

// Everything needed to run preprocess -> register -> train -> embed -> predict
// on one dataset. The weak alignment stages (none/center/preshape) feed a
// Euclidean VAE on flattened coordinates; kendall / kendall_tsrvf feed the
// Riemannian VAE on shooting fields at the fold mean.
struct PipelineConfig {
    AlignmentStage stage = AlignmentStage::kendall_tsrvf;
    int T = 50;  // common resampled length
    RegistrationConfig registration;
    TrainingConfig training;
    int knn_k = 5;
    int bootstrap_replicates = 2000;
    std::uint64_t seed = 0;
};

// Fitted artifacts of one fold (training data only).
struct FittedFold {
    PreprocessContext context;  // empty mean for weak stages
    bool has_context = false;
    Vector standardize_mean;
    Vector standardize_std;
    NetworkParams params;
    std::vector<LabeledEmbedding> train_embeddings;
    std::uint64_t artifact_hash = 0;  // hash of all fitted statistics
};

// Fit the full pipeline on `train` (fold seed selects all substreams).
FittedFold fit_fold(const std::vector<RawSequence>& train, const PipelineConfig& cfg,
                    int fold_index);

// Embed one sequence with a fitted fold.
Vector embed_sequence(const FittedFold& fold, const RawSequence& seq, const PipelineConfig& cfg);

struct CrossValidationResult {
    std::vector<SubjectSample> pooled;  // pooled out-of-fold test predictions
    std::vector<int> fold_of_sample;
    bool has_classification = false;
    bool has_regression = false;
    ClassificationMetrics classification;
    RegressionMetrics regression;
    BootstrapCi macro_f1_ci;
    BootstrapCi rmse_ci;
    BootstrapCi r2_ci;
    std::vector<std::uint64_t> fold_artifact_hashes;
};

CrossValidationResult run_cross_validation(const std::vector<RawSequence>& dataset,
                                           const FoldPlan& plan, const PipelineConfig& cfg);

// --- sphere demo (S^2 submanifold recovery) ---------------------------------

struct SphereMethodResult {
    std::string method;
    double mean_geodesic_error = 0.0;
    std::vector<Matrix> reconstructions;  // 3x1 unit vectors (VAE/tangent paths)
};

struct SphereDemoResult {
    SphereDataset data;
    std::vector<SphereMethodResult> methods;  // euclidean_pca, euclidean_vae,
                                              // tangent_pca, es_vae
};

struct SphereDemoConfig {
    SphereDatasetSpec data;
    int hidden = 32;
    int decoder_hidden = 16;
    double kl_weight = 1e-3;
    double learning_rate = 3e-3;
    int epochs = 20000;
};

SphereDemoResult run_sphere_demo(const SphereDemoConfig& cfg);

}  // namespace esvae
