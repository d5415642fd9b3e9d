#include "esvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace esvae {

namespace {

// Indices of the k nearest neighbors, ties broken by index.
std::vector<int> nearest(const std::vector<LabeledEmbedding>& train, const Vector& query, int k) {
    if (train.empty()) throw InvalidInputError("knn: empty training set");
    if (k < 1) throw InvalidInputError("knn: k < 1");
    const int n = static_cast<int>(train.size());
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) dist[i] = {(train[i].code - query).norm(), i};
    int kk = std::min(k, n);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    std::vector<int> idx(kk);
    for (int i = 0; i < kk; ++i) idx[i] = dist[i].second;
    return idx;
}

}  // namespace

double knn_regress(const std::vector<LabeledEmbedding>& train, const Vector& query, int k) {
    auto idx = nearest(train, query, k);
    double d0 = (train[idx[0]].code - query).norm();
    if (d0 < 1e-12) return train[idx[0]].target;
    double num = 0.0, den = 0.0;
    for (int i : idx) {
        double w = 1.0 / (train[i].code - query).norm();
        num += w * train[i].target;
        den += w;
    }
    return num / den;
}

int knn_classify(const std::vector<LabeledEmbedding>& train, const Vector& query, int k) {
    auto idx = nearest(train, query, k);
    double d0 = (train[idx[0]].code - query).norm();
    if (d0 < 1e-12) return train[idx[0]].label;
    std::map<int, double> weight;
    for (int i : idx) weight[train[i].label] += 1.0 / (train[i].code - query).norm();
    int best = weight.begin()->first;
    double best_w = weight.begin()->second;
    for (const auto& [cls, w] : weight) {
        if (w > best_w) {  // ties keep the smaller class index (map order)
            best = cls;
            best_w = w;
        }
    }
    return best;
}

RegressionMetrics regression_metrics(const std::vector<double>& y_true,
                                     const std::vector<double>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw InvalidInputError("regression_metrics: length mismatch");
    const double n = static_cast<double>(y_true.size());
    double mean_t = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
    double mean_p = std::accumulate(y_pred.begin(), y_pred.end(), 0.0) / n;
    double ss_res = 0.0, ss_tot = 0.0, cov = 0.0, var_p = 0.0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        double e = y_true[i] - y_pred[i];
        ss_res += e * e;
        double dt = y_true[i] - mean_t;
        double dp = y_pred[i] - mean_p;
        ss_tot += dt * dt;
        var_p += dp * dp;
        cov += dt * dp;
    }
    if (ss_tot <= 0.0)
        throw UndefinedMetricError("regression_metrics: zero-variance ground truth");
    RegressionMetrics m;
    m.rmse = std::sqrt(ss_res / n);
    m.r2 = 1.0 - ss_res / ss_tot;
    m.pearson_r = (var_p <= 0.0) ? 0.0 : cov / std::sqrt(ss_tot * var_p);
    return m;
}

ClassificationMetrics classification_metrics(const std::vector<int>& y_true,
                                             const std::vector<int>& y_pred,
                                             const std::vector<int>& classes) {
    if (y_true.size() != y_pred.size())
        throw InvalidInputError("classification_metrics: length mismatch");
    ClassificationMetrics m;
    int correct = 0;
    const double n = static_cast<double>(y_true.size());
    for (int cls : classes) {
        int tp = 0, fp = 0, fn = 0, support = 0;
        for (size_t i = 0; i < y_true.size(); ++i) {
            if (y_true[i] == cls) ++support;
            if (y_pred[i] == cls && y_true[i] == cls) ++tp;
            if (y_pred[i] == cls && y_true[i] != cls) ++fp;
            if (y_pred[i] != cls && y_true[i] == cls) ++fn;
        }
        ClassReport r;
        r.support = support;
        r.precision = (tp + fp == 0) ? 0.0 : static_cast<double>(tp) / (tp + fp);  // 0/0 -> 0
        r.recall = (tp + fn == 0) ? 0.0 : static_cast<double>(tp) / (tp + fn);
        r.f1 = (r.precision + r.recall == 0.0)
                   ? 0.0
                   : 2.0 * r.precision * r.recall / (r.precision + r.recall);
        m.per_class[cls] = r;
        m.macro_precision += r.precision;
        m.macro_recall += r.recall;
        m.macro_f1 += r.f1;
        m.weighted_precision += r.precision * support;
        m.weighted_recall += r.recall * support;
        m.weighted_f1 += r.f1 * support;
    }
    for (size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == y_pred[i]) ++correct;
    const double c = static_cast<double>(classes.size());
    m.macro_precision /= c;
    m.macro_recall /= c;
    m.macro_f1 /= c;
    m.weighted_precision /= n;
    m.weighted_recall /= n;
    m.weighted_f1 /= n;
    m.accuracy = correct / n;
    return m;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidInputError("percentile: empty");
    std::sort(values.begin(), values.end());
    double pos = p / 100.0 * (values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    if (lo + 1 >= values.size()) return values.back();
    double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

BootstrapCi bootstrap_ci(const std::vector<SubjectSample>& samples,
                         const std::function<double(const std::vector<SubjectSample>&)>& metric,
                         int replicates, std::uint64_t seed) {
    if (replicates < 1) throw InvalidInputError("bootstrap_ci: replicates < 1");
    // Group by subject, preserving first-appearance order.
    std::vector<std::string> subjects;
    std::map<std::string, std::vector<const SubjectSample*>> by_subject;
    for (const auto& s : samples) {
        auto [it, inserted] = by_subject.try_emplace(s.subject_id);
        if (inserted) subjects.push_back(s.subject_id);
        it->second.push_back(&s);
    }
    if (subjects.size() < 2) throw InvalidInputError("bootstrap_ci: need >= 2 subjects");

    BootstrapCi ci;
    ci.point = metric(samples);

    Rng root(seed);
    std::vector<double> stats;
    stats.reserve(replicates);
    const int ns = static_cast<int>(subjects.size());
    for (int r = 0; r < replicates; ++r) {
        // Independent stream per replicate, so execution order never matters.
        Rng rep = root.substream("bootstrap", static_cast<std::uint64_t>(r));
        std::vector<SubjectSample> pool;
        for (int i = 0; i < ns; ++i) {
            const auto& subj = subjects[rep.below(ns)];
            for (const auto* s : by_subject[subj]) pool.push_back(*s);
        }
        try {
            stats.push_back(metric(pool));
        } catch (const UndefinedMetricError&) {
            ++ci.skipped;
        }
    }
    if (ci.skipped * 2 > replicates)
        throw UnstableCiError("bootstrap_ci: more than half the replicates were undefined");
    ci.lo95 = percentile(stats, 2.5);
    ci.hi95 = percentile(stats, 97.5);
    return ci;
}

bool FoldPlan::valid() const {
    for (const auto& f : folds) {
        std::set<std::string> seen;
        size_t total = f.train_subjects.size() + f.validation_subjects.size() +
                       f.test_subjects.size();
        for (const auto& s : f.train_subjects) seen.insert(s);
        for (const auto& s : f.validation_subjects) seen.insert(s);
        for (const auto& s : f.test_subjects) seen.insert(s);
        if (seen.size() != total) return false;  // overlap between sets
    }
    return !folds.empty();
}

FoldPlan leave_n_subjects_out(const std::vector<std::string>& subjects, int block) {
    if (block < 1 || static_cast<size_t>(3 * block) > subjects.size())
        throw InvalidInputError("leave_n_subjects_out: bad block size");
    const int n = static_cast<int>(subjects.size());
    const int n_blocks = n / block;
    FoldPlan plan;
    for (int f = 0; f < n_blocks; ++f) {
        Fold fold;
        int test_lo = f * block;
        int val_lo = ((f + 1) % n_blocks) * block;
        for (int i = 0; i < n; ++i) {
            bool in_test = i >= test_lo && i < test_lo + block;
            bool in_val = i >= val_lo && i < val_lo + block;
            if (in_test)
                fold.test_subjects.push_back(subjects[i]);
            else if (in_val)
                fold.validation_subjects.push_back(subjects[i]);
            else
                fold.train_subjects.push_back(subjects[i]);
        }
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

FoldPlan thirty_fold_plan(const std::vector<std::string>& subjects, std::uint64_t seed) {
    const int n = static_cast<int>(subjects.size());
    if (n < 30) throw InvalidInputError("thirty_fold_plan: need >= 30 subjects");
    std::vector<std::string> order = subjects;
    Rng rng = Rng(seed).substream("fold-plan");
    for (int i = n - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<int>(rng.below(i + 1))]);

    // Fold sizes: 28 folds of (5 val, 5 test), one (10 val, 5 test), one
    // (5 val, 10 test); blocks rotate through the shuffled subject list.
    FoldPlan plan;
    int cursor = 0;
    for (int f = 0; f < 30; ++f) {
        int val_size = (f == 28) ? 10 : 5;
        int test_size = (f == 29) ? 10 : 5;
        Fold fold;
        std::set<int> used;
        for (int i = 0; i < test_size; ++i) {
            int idx = (cursor + i) % n;
            fold.test_subjects.push_back(order[idx]);
            used.insert(idx);
        }
        for (int i = 0; i < val_size; ++i) {
            int idx = (cursor + test_size + i) % n;
            fold.validation_subjects.push_back(order[idx]);
            used.insert(idx);
        }
        for (int i = 0; i < n; ++i)
            if (!used.count(i)) fold.train_subjects.push_back(order[i]);
        cursor = (cursor + test_size) % n;
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

}  // namespace esvae
