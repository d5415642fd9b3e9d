#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "esvae/rng.hpp"
#include "esvae/trajectory.hpp"

namespace esvae {

struct RawSequence {
    std::vector<Matrix> frames;  // T' matrices of shape k x m
    std::string subject_id;
    std::optional<double> target;  // regression target
    std::optional<int> label;      // class label
    std::map<std::string, std::string> meta;

    int T() const { return static_cast<int>(frames.size()); }
    int k() const { return static_cast<int>(frames.front().rows()); }
    int m() const { return static_cast<int>(frames.front().cols()); }
};

enum class FileFormat { csv, json };

// Format inferred from the extension (.csv / .json) unless given explicitly.
std::vector<RawSequence> load_sequences(const std::string& path);
std::vector<RawSequence> load_sequences(const std::string& path, FileFormat format);
void save_sequences(const std::vector<RawSequence>& seqs, const std::string& path);
void save_sequences(const std::vector<RawSequence>& seqs, const std::string& path,
                    FileFormat format);

// --- alignment-stage preprocessor -------------------------------------------

enum class AlignmentStage { none, center, preshape, kendall, kendall_tsrvf };

AlignmentStage parse_stage(const std::string& name);
std::string stage_name(AlignmentStage stage);

// Fitted artifacts from the training fold, required by the two strongest
// stages (they align against the fold's mean trajectory).
struct PreprocessContext {
    Trajectory mean;
    Matrix reference;  // TSRVF reference point
};

// Model-ready sample: flattened coordinates for the weak stages, a tangent
// field at the fold mean for kendall / kendall_tsrvf.
struct PreprocessedSample {
    Vector flat;
    TangentField field;
    Trajectory traj;  // manifold-valued sample (kendall stages only)
    bool is_tangent = false;
};

PreprocessedSample preprocess(const RawSequence& raw, AlignmentStage stage, int T,
                              const PreprocessContext* context = nullptr);

// --- synthetic sphere dataset (S^2) ----------------------------------------

struct SphereDatasetSpec {
    int n_points = 500;
    double noise_level = 0.05;
    int curve_samples = 2000;  // dense true-curve discretization
    std::uint64_t seed = 0;
};

struct SphereDataset {
    std::vector<Matrix> points;       // 3x1 unit vectors
    std::vector<double> s_values;     // curve parameter of each point's base
    std::vector<Matrix> curve;        // dense samples of the true curve
};

// The non-geodesic test curve: colatitude pi/2 + 0.6 sin(2 pi s),
// longitude 2 pi s.
Matrix sphere_curve_point(double s);
SphereDataset generate_sphere_dataset(const SphereDatasetSpec& spec);

// --- synthetic labeled trajectories -----------------------------------------

struct NuisanceFlags {
    bool rotation = false;
    bool scale = false;
    bool translation = false;
    bool warp = false;
};

struct LabeledTrajectorySpec {
    int classes = 4;
    int per_class = 10;
    int k = 8;
    int m = 3;
    int T = 50;
    double base_severity = 0.05;  // tangent-perturbation scale ceiling
    NuisanceFlags nuisance;
    std::uint64_t seed = 0;
};

// Each sample is a class prototype (sinusoidal joint paths, class-specific
// frequencies/phases) plus a tangent perturbation whose magnitude becomes the
// regression target ("severity"), then corrupted by the enabled nuisances.
// One subject per sample.
std::vector<RawSequence> generate_labeled_trajectories(const LabeledTrajectorySpec& spec);

// --- manifest helpers -------------------------------------------------------

std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t hash_file(const std::string& path);

}  // namespace esvae
