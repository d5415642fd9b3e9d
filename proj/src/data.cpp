#include "esvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace esvae {

namespace {

using json = nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

FileFormat infer_format(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = (dot == std::string::npos) ? "" : path.substr(dot + 1);
    if (ext == "csv") return FileFormat::csv;
    if (ext == "json") return FileFormat::json;
    throw IoError("cannot infer file format from extension: " + path);
}

void check_finite(const RawSequence& s) {
    for (int t = 0; t < s.T(); ++t)
        if (!s.frames[t].allFinite())
            throw InvalidInputError("non-finite value in subject '" + s.subject_id + "' frame " +
                                    std::to_string(t));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::vector<RawSequence> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);
    std::map<std::string, int> col;
    for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
    for (const char* req : {"subject", "frame", "joint", "x", "y"})
        if (!col.count(req)) throw IoError(std::string("CSV missing required column: ") + req);
    const bool has_z = col.count("z") > 0;
    const bool has_target = col.count("target") > 0;
    const bool has_label = col.count("label") > 0;
    const int m = has_z ? 3 : 2;

    struct Cell {
        double coords[3];
    };
    // subject -> frame -> joint -> coords, subjects in first-appearance order
    std::vector<std::string> order;
    std::map<std::string, std::map<int, std::map<int, Cell>>> table;
    std::map<std::string, std::optional<double>> targets;
    std::map<std::string, std::optional<int>> labels;

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() < header.size())
            throw IoError("CSV line " + std::to_string(line_no) + ": too few columns");
        const std::string& subj = cells[col["subject"]];
        int frame, joint;
        double x, y, z = 0.0;
        try {
            frame = std::stoi(cells[col["frame"]]);
            joint = std::stoi(cells[col["joint"]]);
            x = std::stod(cells[col["x"]]);
            y = std::stod(cells[col["y"]]);
            if (has_z) z = std::stod(cells[col["z"]]);
        } catch (const std::exception&) {
            throw IoError("CSV line " + std::to_string(line_no) + ": unparseable number");
        }
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw InvalidInputError("non-finite value in subject '" + subj + "' frame " +
                                    std::to_string(frame));
        auto [it, inserted] = table.try_emplace(subj);
        if (inserted) order.push_back(subj);
        auto& frame_map = it->second[frame];
        if (frame_map.count(joint))
            throw InvalidInputError("duplicate (subject, frame, joint) = ('" + subj + "', " +
                                    std::to_string(frame) + ", " + std::to_string(joint) + ")");
        frame_map[joint] = Cell{{x, y, z}};
        if (has_target && !cells[col["target"]].empty())
            targets[subj] = std::stod(cells[col["target"]]);
        if (has_label && !cells[col["label"]].empty())
            labels[subj] = std::stoi(cells[col["label"]]);
    }

    std::vector<RawSequence> out;
    for (const auto& subj : order) {
        const auto& frames = table[subj];
        RawSequence seq;
        seq.subject_id = subj;
        seq.target = targets.count(subj) ? targets[subj] : std::nullopt;
        seq.label = labels.count(subj) ? labels[subj] : std::nullopt;
        int expected_k = -1;
        int fi = 0;
        for (const auto& [frame_idx, joints] : frames) {
            if (frame_idx != fi)
                throw InvalidInputError("subject '" + subj + "': missing frame " +
                                        std::to_string(fi));
            ++fi;
            int k = static_cast<int>(joints.size());
            if (expected_k < 0) expected_k = k;
            if (k != expected_k)
                throw InvalidInputError("ragged data: subject '" + subj + "' frame " +
                                        std::to_string(frame_idx) + " has " + std::to_string(k) +
                                        " joints, expected " + std::to_string(expected_k));
            Matrix f(k, m);
            int ji = 0;
            for (const auto& [joint_idx, cell] : joints) {
                if (joint_idx != ji)
                    throw InvalidInputError("ragged data: subject '" + subj + "' frame " +
                                            std::to_string(frame_idx) + " missing joint " +
                                            std::to_string(ji));
                for (int c = 0; c < m; ++c) f(ji, c) = cell.coords[c];
                ++ji;
            }
            seq.frames.push_back(std::move(f));
        }
        if (seq.T() < 2)
            throw InvalidInputError("subject '" + subj + "': fewer than 2 frames");
        out.push_back(std::move(seq));
    }
    return out;
}

void save_csv(const std::vector<RawSequence>& seqs, const std::string& path) {
    if (seqs.empty()) throw InvalidInputError("save_sequences: empty dataset");
    const int m = seqs.front().m();
    bool any_target = false, any_label = false;
    for (const auto& s : seqs) {
        if (s.target) any_target = true;
        if (s.label) any_label = true;
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "subject,frame,joint,x,y";
    if (m == 3) out << ",z";
    if (any_target) out << ",target";
    if (any_label) out << ",label";
    out << "\n";
    for (const auto& s : seqs) {
        for (int t = 0; t < s.T(); ++t)
            for (int j = 0; j < s.k(); ++j) {
                out << s.subject_id << ',' << t << ',' << j;
                for (int c = 0; c < m; ++c) out << ',' << fmt17(s.frames[t](j, c));
                if (any_target) out << ',' << (s.target ? fmt17(*s.target) : "");
                if (any_label) out << ',' << (s.label ? std::to_string(*s.label) : "");
                out << "\n";
            }
    }
}

std::vector<RawSequence> load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.is_array()) throw IoError("JSON dataset must be an array of sequence objects");
    std::vector<RawSequence> out;
    for (const auto& obj : doc) {
        RawSequence seq;
        seq.subject_id = obj.at("subject_id").get<std::string>();
        const auto& frames = obj.at("frames");
        for (size_t t = 0; t < frames.size(); ++t) {
            const auto& fr = frames[t];
            int k = static_cast<int>(fr.size());
            if (k == 0)
                throw InvalidInputError("subject '" + seq.subject_id + "' frame " +
                                        std::to_string(t) + " is empty");
            int m = static_cast<int>(fr[0].size());
            Matrix f(k, m);
            for (int j = 0; j < k; ++j) {
                if (static_cast<int>(fr[j].size()) != m)
                    throw InvalidInputError("ragged data: subject '" + seq.subject_id +
                                            "' frame " + std::to_string(t));
                for (int c = 0; c < m; ++c) f(j, c) = fr[j][c].get<double>();
            }
            if (!seq.frames.empty() &&
                (f.rows() != seq.frames.front().rows() || f.cols() != seq.frames.front().cols()))
                throw InvalidInputError("ragged data: subject '" + seq.subject_id + "' frame " +
                                        std::to_string(t));
            seq.frames.push_back(std::move(f));
        }
        if (seq.T() < 2)
            throw InvalidInputError("subject '" + seq.subject_id + "': fewer than 2 frames");
        if (obj.contains("target") && !obj["target"].is_null())
            seq.target = obj["target"].get<double>();
        if (obj.contains("label") && !obj["label"].is_null()) seq.label = obj["label"].get<int>();
        if (obj.contains("meta"))
            for (const auto& [k2, v] : obj["meta"].items())
                seq.meta[k2] = v.get<std::string>();
        check_finite(seq);
        out.push_back(std::move(seq));
    }
    return out;
}

void save_json(const std::vector<RawSequence>& seqs, const std::string& path) {
    json doc = json::array();
    for (const auto& s : seqs) {
        json obj;
        obj["subject_id"] = s.subject_id;
        json frames = json::array();
        for (const auto& f : s.frames) {
            json fr = json::array();
            for (int j = 0; j < f.rows(); ++j) {
                json row = json::array();
                for (int c = 0; c < f.cols(); ++c) row.push_back(f(j, c));
                fr.push_back(std::move(row));
            }
            frames.push_back(std::move(fr));
        }
        obj["frames"] = std::move(frames);
        if (s.target) obj["target"] = *s.target;
        if (s.label) obj["label"] = *s.label;
        if (!s.meta.empty()) {
            json meta;
            for (const auto& [k, v] : s.meta) meta[k] = v;
            obj["meta"] = std::move(meta);
        }
        doc.push_back(std::move(obj));
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
}

// Linear-in-coordinates resampling used for the pre-manifold stages.
std::vector<Matrix> resample_linear(const std::vector<Matrix>& frames, int t_new) {
    const int t_old = static_cast<int>(frames.size());
    if (t_new < 2) throw InvalidInputError("resample: T < 2");
    std::vector<Matrix> out(t_new);
    for (int i = 0; i < t_new; ++i) {
        double pos = static_cast<double>(i) / (t_new - 1) * (t_old - 1);
        int lo = std::min(static_cast<int>(std::floor(pos)), t_old - 2);
        double a = pos - lo;
        out[i] = (1.0 - a) * frames[lo] + a * frames[lo + 1];
    }
    return out;
}

Vector flatten_frames(const std::vector<Matrix>& frames) {
    const int t = static_cast<int>(frames.size());
    const int k = static_cast<int>(frames.front().rows());
    const int m = static_cast<int>(frames.front().cols());
    Vector v(static_cast<long>(t) * k * m);
    long idx = 0;
    for (const auto& f : frames)
        for (int j = 0; j < k; ++j)
            for (int c = 0; c < m; ++c) v[idx++] = f(j, c);
    return v;
}

}  // namespace

std::vector<RawSequence> load_sequences(const std::string& path) {
    return load_sequences(path, infer_format(path));
}

std::vector<RawSequence> load_sequences(const std::string& path, FileFormat format) {
    return format == FileFormat::csv ? load_csv(path) : load_json(path);
}

void save_sequences(const std::vector<RawSequence>& seqs, const std::string& path) {
    save_sequences(seqs, path, infer_format(path));
}

void save_sequences(const std::vector<RawSequence>& seqs, const std::string& path,
                    FileFormat format) {
    if (format == FileFormat::csv)
        save_csv(seqs, path);
    else
        save_json(seqs, path);
}

AlignmentStage parse_stage(const std::string& name) {
    if (name == "none") return AlignmentStage::none;
    if (name == "center") return AlignmentStage::center;
    if (name == "preshape") return AlignmentStage::preshape;
    if (name == "kendall") return AlignmentStage::kendall;
    if (name == "kendall_tsrvf") return AlignmentStage::kendall_tsrvf;
    throw ConfigError("unknown alignment stage: " + name);
}

std::string stage_name(AlignmentStage stage) {
    switch (stage) {
        case AlignmentStage::none: return "none";
        case AlignmentStage::center: return "center";
        case AlignmentStage::preshape: return "preshape";
        case AlignmentStage::kendall: return "kendall";
        case AlignmentStage::kendall_tsrvf: return "kendall_tsrvf";
    }
    throw ConfigError("invalid alignment stage");
}

PreprocessedSample preprocess(const RawSequence& raw, AlignmentStage stage, int T,
                              const PreprocessContext* context) {
    check_finite(raw);
    PreprocessedSample out;

    if (stage == AlignmentStage::none || stage == AlignmentStage::center) {
        auto frames = resample_linear(raw.frames, T);
        if (stage == AlignmentStage::center)
            for (auto& f : frames) f = center(f);
        out.flat = flatten_frames(frames);
        return out;
    }

    // Preshape each frame first, then resample along sphere geodesics.
    Trajectory traj;
    traj.frames.reserve(raw.T());
    for (const auto& f : raw.frames) traj.frames.push_back(to_preshape(f));
    traj = resample_trajectory(traj, T);

    if (stage == AlignmentStage::preshape) {
        out.flat = flatten_frames(traj.frames);
        return out;
    }

    if (context == nullptr)
        throw InvalidInputError("preprocess: stage " + stage_name(stage) +
                                " requires a fitted context (mean trajectory + reference)");
    if (context->mean.T() != T)
        throw DimensionMismatchError("preprocess: context mean has T=" +
                                     std::to_string(context->mean.T()) + ", expected " +
                                     std::to_string(T));

    // Rotationally align every frame to the fold mean.
    for (int t = 0; t < T; ++t) {
        auto pr = optimal_rotation(context->mean.frames[t], traj.frames[t]);
        traj.frames[t] = traj.frames[t] * pr.rotation;
    }

    if (stage == AlignmentStage::kendall_tsrvf) {
        TsrvfRep q_mean = compute_tsrvf(context->mean, context->reference);
        TsrvfRep q_sample = compute_tsrvf(traj, context->reference);
        WarpingFunction gamma = optimal_warp(q_mean, q_sample);
        traj = apply_warp(traj, gamma);
        // Warping perturbs the fiber alignment slightly; re-align.
        for (int t = 0; t < T; ++t) {
            auto pr = optimal_rotation(context->mean.frames[t], traj.frames[t]);
            traj.frames[t] = traj.frames[t] * pr.rotation;
        }
    }

    out.field = trajectory_log(context->mean, traj);
    out.traj = traj;
    out.is_tangent = true;
    return out;
}

Matrix sphere_curve_point(double s) {
    const double phi = M_PI / 2.0 + 0.6 * std::sin(2.0 * M_PI * s);
    const double lam = 2.0 * M_PI * s;
    Matrix p(3, 1);
    p(0, 0) = std::sin(phi) * std::cos(lam);
    p(1, 0) = std::sin(phi) * std::sin(lam);
    p(2, 0) = std::cos(phi);
    return p;
}

SphereDataset generate_sphere_dataset(const SphereDatasetSpec& spec) {
    if (spec.n_points < 10) throw InvalidInputError("sphere dataset: n_points < 10");
    if (spec.noise_level < 0.0) throw InvalidInputError("sphere dataset: negative noise");
    SphereDataset out;
    Rng rng = Rng(spec.seed).substream("sphere-data");
    for (int i = 0; i < spec.n_points; ++i) {
        double s = rng.uniform();
        Matrix base = sphere_curve_point(s);
        Matrix eta(3, 1);
        for (int c = 0; c < 3; ++c) eta(c, 0) = spec.noise_level * rng.normal();
        eta = project_to_tangent(base, eta, /*centered=*/false);
        out.points.push_back(sphere_exp(base, eta));
        out.s_values.push_back(s);
    }
    for (int i = 0; i < spec.curve_samples; ++i)
        out.curve.push_back(sphere_curve_point(static_cast<double>(i) / spec.curve_samples));
    return out;
}

namespace {

// Class prototype: landmark j of class c follows a sinusoidal path around a
// fixed base pose, with class-specific frequency and phase.
Matrix prototype_frame(int cls, int k, int m, double t) {
    Matrix f(k, m);
    const double freq = 1.0 + 0.5 * cls;
    const double phase = 0.9 * cls;
    for (int j = 0; j < k; ++j) {
        double base_angle = 2.0 * M_PI * j / k;
        double swing = 0.4 * std::sin(2.0 * M_PI * freq * t + phase + 0.7 * j);
        f(j, 0) = std::cos(base_angle) + swing;
        f(j, 1) = std::sin(base_angle) + 0.3 * std::cos(2.0 * M_PI * freq * t + phase + 0.4 * j);
        for (int c = 2; c < m; ++c)
            f(j, c) = 0.5 * std::sin(base_angle + 2.0 * M_PI * t * (1.0 + 0.25 * cls));
    }
    return f;
}

Matrix random_rotation(int m, Rng& rng) {
    Matrix a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < m; ++i)
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    if (q.determinant() < 0) q.col(m - 1) = -q.col(m - 1);
    return q;
}

}  // namespace

std::vector<RawSequence> generate_labeled_trajectories(const LabeledTrajectorySpec& spec) {
    if (spec.classes < 2) throw InvalidInputError("labeled trajectories: classes < 2");
    std::vector<RawSequence> out;
    for (int cls = 0; cls < spec.classes; ++cls) {
        for (int i = 0; i < spec.per_class; ++i) {
            Rng rng = Rng(spec.seed).substream("labeled-traj",
                                              static_cast<std::uint64_t>(cls) * 100003 + i);
            RawSequence seq;
            seq.subject_id = "S" + std::to_string(cls) + "_" + std::to_string(i);
            seq.label = cls;
            double severity = spec.base_severity * rng.uniform();
            seq.target = severity;

            // Smooth perturbation: a few random low-frequency modes per joint.
            const int n_modes = 3;
            std::vector<double> amp(static_cast<size_t>(spec.k) * spec.m * n_modes);
            std::vector<double> pha(amp.size());
            for (size_t a = 0; a < amp.size(); ++a) {
                amp[a] = severity * rng.normal();
                pha[a] = 2.0 * M_PI * rng.uniform();
            }

            for (int t = 0; t < spec.T; ++t) {
                double s = static_cast<double>(t) / (spec.T - 1);
                Matrix f = prototype_frame(cls, spec.k, spec.m, s);
                for (int j = 0; j < spec.k; ++j)
                    for (int c = 0; c < spec.m; ++c)
                        for (int md = 0; md < n_modes; ++md) {
                            size_t a = (static_cast<size_t>(j) * spec.m + c) * n_modes + md;
                            f(j, c) += amp[a] * std::sin(2.0 * M_PI * (md + 1) * s + pha[a]);
                        }
                seq.frames.push_back(std::move(f));
            }

            if (spec.nuisance.warp) {
                double a = 1.2 * (rng.uniform() - 0.5);  // |a| < 0.6 keeps gamma monotone
                WarpingFunction gamma;
                gamma.values.resize(spec.T);
                for (int t = 0; t < spec.T; ++t) {
                    double s = static_cast<double>(t) / (spec.T - 1);
                    gamma.values[t] = s + a * s * (1.0 - s);
                }
                auto warped = resample_linear(seq.frames, spec.T);
                for (int t = 0; t < spec.T; ++t) {
                    double pos = gamma.values[t] * (spec.T - 1);
                    int lo = std::min(static_cast<int>(std::floor(pos)), spec.T - 2);
                    double frac = pos - lo;
                    warped[t] = (1.0 - frac) * seq.frames[lo] + frac * seq.frames[lo + 1];
                }
                seq.frames = std::move(warped);
            }
            if (spec.nuisance.rotation) {
                Matrix r = random_rotation(spec.m, rng);
                for (auto& f : seq.frames) f = f * r;
            }
            if (spec.nuisance.scale) {
                double s = std::exp(std::log(0.5) + rng.uniform() * std::log(4.0));
                for (auto& f : seq.frames) f *= s;
            }
            if (spec.nuisance.translation) {
                Vector shift(spec.m);
                for (int c = 0; c < spec.m; ++c) shift[c] = 2.0 * rng.uniform() - 1.0;
                for (auto& f : seq.frames) f.rowwise() += shift.transpose();
            }
            out.push_back(std::move(seq));
        }
    }
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}

}  // namespace esvae
