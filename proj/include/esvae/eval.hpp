#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "esvae/common.hpp"
#include "esvae/rng.hpp"

namespace esvae {

struct LabeledEmbedding {
    Vector code;
    std::string subject_id;
    double target = 0.0;  // regression target
    int label = -1;       // class label (classification)
};

// k-NN with inverse-distance weighting; an exact-match neighbor (d < 1e-12)
// wins outright.
double knn_regress(const std::vector<LabeledEmbedding>& train, const Vector& query, int k);
int knn_classify(const std::vector<LabeledEmbedding>& train, const Vector& query, int k);

struct RegressionMetrics {
    double rmse = 0.0;
    double r2 = 0.0;
    double pearson_r = 0.0;
};

RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred);

struct ClassReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    int support = 0;
};

struct ClassificationMetrics {
    double macro_f1 = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    std::map<int, ClassReport> per_class;
};

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred,
                                             const std::vector<int>& classes);

struct BootstrapCi {
    double point = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
    int skipped = 0;
};

// Subject-level percentile bootstrap. `metric` maps a pooled sample list to a
// scalar and may throw UndefinedMetricError for a degenerate replicate.
struct SubjectSample {
    std::string subject_id;
    double y_true = 0.0;
    double y_pred = 0.0;
    int label_true = -1;
    int label_pred = -1;
};

BootstrapCi bootstrap_ci(const std::vector<SubjectSample>& samples,
                         const std::function<double(const std::vector<SubjectSample>&)>& metric,
                         int replicates, std::uint64_t seed);

// --- fold plans -------------------------------------------------------------

struct Fold {
    std::vector<std::string> train_subjects;
    std::vector<std::string> validation_subjects;
    std::vector<std::string> test_subjects;
};

struct FoldPlan {
    std::vector<Fold> folds;
    bool valid() const;
};

// Leave-N-subjects-out: disjoint test blocks of `block` subjects, the next
// block in rotation as validation, the rest as training.
FoldPlan leave_n_subjects_out(const std::vector<std::string>& subjects, int block);

// The 30-fold layout used for the clinical protocol: fold sizes follow the
// published structure (5/5 validation/test for most folds, one 10/5 and one
// 5/10 fold), assignments drawn deterministically from the seed.
FoldPlan thirty_fold_plan(const std::vector<std::string>& subjects, std::uint64_t seed);

double percentile(std::vector<double> values, double p);

}  // namespace esvae
