// Command-line entry point: preprocessing, registration, training, embedding,
// evaluation, the sphere demo, the ablation matrix, and synthetic data
// generation, all driven by one JSON config with named-substream determinism.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "esvae/data.hpp"
#include "esvae/eval.hpp"
#include "esvae/parallel.hpp"
#include "esvae/pipeline.hpp"
#include "esvae/registration.hpp"
#include "esvae/rvae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace esvae;

namespace {

json default_config() {
    json c;
    c["data"] = {
        {"path", ""},
        {"synthetic",
         {{"classes", 4},
          {"per_class", 10},
          {"k", 8},
          {"m", 3},
          {"T", 50},
          {"base_severity", 0.05},
          {"nuisance",
           {{"rotation", true}, {"scale", true}, {"translation", true}, {"warp", true}}}}},
        {"sphere", {{"n_points", 500}, {"noise_level", 0.05}, {"curve_samples", 2000}}},
    };
    c["alignment"] = {{"stage", "kendall_tsrvf"}, {"T", 50}};
    c["registration"] = {{"max_iterations", 40},
                         {"step_size", 0.1},
                         {"tolerance", 1e-5},
                         {"dp_enabled", true}};
    c["model"] = {{"latent_dim", 38}, {"hidden", 128}, {"decoder_hidden", 16}};
    c["training"] = {{"kl_weight", 0.125},
                     {"learning_rate", 1e-3},
                     {"epochs", 100},
                     {"batch_size", 0},
                     {"dropout_rate", 0.1},
                     {"loss_mode", "geodesic"}};
    c["eval"] = {{"knn_k", 5},
                 {"bootstrap_replicates", 2000},
                 {"fold_plan", "l5so"},
                 {"block", 5},
                 {"beta_sweep", json::array()}};
    c["model_path"] = "";
    c["output_dir"] = "out";
    c["seed"] = 0;
    return c;
}

// Reject keys that do not exist in the default schema; merge values over it.
void merge_checked(json& base, const json& user, const std::string& prefix) {
    for (const auto& [key, value] : user.items()) {
        std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!base.contains(key)) throw ConfigError("unknown config key: " + path);
        if (base[key].is_object() && value.is_object())
            merge_checked(base[key], value, path);
        else
            base[key] = value;
    }
}

void apply_set(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // bare strings allowed unquoted
    }
    json* node = &cfg;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i])) throw ConfigError("unknown config key: " + key);
        node = &(*node)[parts[i]];
    }
    if (parts.empty() || !node->contains(parts.back()))
        throw ConfigError("unknown config key: " + key);
    (*node)[parts.back()] = value;
}

PipelineConfig pipeline_config(const json& cfg) {
    PipelineConfig p;
    p.stage = parse_stage(cfg["alignment"]["stage"].get<std::string>());
    p.T = cfg["alignment"]["T"].get<int>();
    p.registration.max_iterations = cfg["registration"]["max_iterations"].get<int>();
    p.registration.step_size = cfg["registration"]["step_size"].get<double>();
    p.registration.tolerance = cfg["registration"]["tolerance"].get<double>();
    p.registration.dp_enabled = cfg["registration"]["dp_enabled"].get<bool>();
    p.training.latent_dim = cfg["model"]["latent_dim"].get<int>();
    p.training.hidden = cfg["model"]["hidden"].get<int>();
    p.training.decoder_hidden = cfg["model"]["decoder_hidden"].get<int>();
    p.training.kl_weight = cfg["training"]["kl_weight"].get<double>();
    p.training.learning_rate = cfg["training"]["learning_rate"].get<double>();
    p.training.epochs = cfg["training"]["epochs"].get<int>();
    p.training.batch_size = cfg["training"]["batch_size"].get<int>();
    p.training.dropout_rate = cfg["training"]["dropout_rate"].get<double>();
    std::string lm = cfg["training"]["loss_mode"].get<std::string>();
    if (lm == "geodesic")
        p.training.loss_mode = LossMode::geodesic;
    else if (lm == "tangent_mse")
        p.training.loss_mode = LossMode::tangent_mse;
    else
        throw ConfigError("unknown loss_mode: " + lm);
    p.knn_k = cfg["eval"]["knn_k"].get<int>();
    p.bootstrap_replicates = cfg["eval"]["bootstrap_replicates"].get<int>();
    p.seed = cfg["seed"].get<std::uint64_t>();
    return p;
}

LabeledTrajectorySpec synthetic_spec(const json& cfg) {
    const json& s = cfg["data"]["synthetic"];
    LabeledTrajectorySpec spec;
    spec.classes = s["classes"].get<int>();
    spec.per_class = s["per_class"].get<int>();
    spec.k = s["k"].get<int>();
    spec.m = s["m"].get<int>();
    spec.T = s["T"].get<int>();
    spec.base_severity = s["base_severity"].get<double>();
    spec.nuisance.rotation = s["nuisance"]["rotation"].get<bool>();
    spec.nuisance.scale = s["nuisance"]["scale"].get<bool>();
    spec.nuisance.translation = s["nuisance"]["translation"].get<bool>();
    spec.nuisance.warp = s["nuisance"]["warp"].get<bool>();
    spec.seed = cfg["seed"].get<std::uint64_t>();
    return spec;
}

std::vector<RawSequence> load_dataset(const json& cfg) {
    std::string path = cfg["data"]["path"].get<std::string>();
    if (path.empty()) return generate_labeled_trajectories(synthetic_spec(cfg));
    return load_sequences(path);
}

FoldPlan build_fold_plan(const json& cfg, const std::vector<RawSequence>& data) {
    std::vector<std::string> subjects;
    for (const auto& s : data)
        if (std::find(subjects.begin(), subjects.end(), s.subject_id) == subjects.end())
            subjects.push_back(s.subject_id);
    std::string plan = cfg["eval"]["fold_plan"].get<std::string>();
    if (plan == "l5so") return leave_n_subjects_out(subjects, cfg["eval"]["block"].get<int>());
    if (plan == "thirty") return thirty_fold_plan(subjects, cfg["seed"].get<std::uint64_t>());
    throw ConfigError("unknown fold_plan: " + plan);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// An output directory staged in a temp location and atomically renamed on
// success; partial outputs never land at the final path.
class OutputDir {
public:
    explicit OutputDir(const std::string& target) : target_(target) {
        tmp_ = target + ".tmp-" + std::to_string(::getpid());
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }
    ~OutputDir() {
        if (!committed_) fs::remove_all(tmp_);
    }
    fs::path path(const std::string& name) const { return fs::path(tmp_) / name; }

    void commit(const json& config, std::uint64_t seed) {
        json manifest;
        manifest["format_version"] = 1;
        manifest["config"] = config;
        manifest["seed"] = seed;
        json hashes;
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(tmp_))
            names.push_back(e.path().filename().string());
        std::sort(names.begin(), names.end());
        for (const auto& n : names)
            hashes[n] = hash_file((fs::path(tmp_) / n).string());
        manifest["content_hashes"] = hashes;
        manifest["timestamp"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        std::ofstream(path("manifest.json")) << manifest.dump(2) << "\n";
        fs::remove_all(target_);
        fs::rename(tmp_, target_);
        committed_ = true;
    }

private:
    std::string target_, tmp_;
    bool committed_ = false;
};

json metrics_json(const CrossValidationResult& res) {
    json m;
    if (res.has_classification) {
        json c;
        c["accuracy"] = res.classification.accuracy;
        c["macro_f1"] = res.classification.macro_f1;
        c["macro_precision"] = res.classification.macro_precision;
        c["macro_recall"] = res.classification.macro_recall;
        c["weighted_f1"] = res.classification.weighted_f1;
        c["weighted_precision"] = res.classification.weighted_precision;
        c["weighted_recall"] = res.classification.weighted_recall;
        json per;
        for (const auto& [cls, r] : res.classification.per_class)
            per[std::to_string(cls)] = {{"precision", r.precision},
                                        {"recall", r.recall},
                                        {"f1", r.f1},
                                        {"support", r.support}};
        c["per_class"] = per;
        c["macro_f1_ci"] = {{"point", res.macro_f1_ci.point},
                            {"lo95", res.macro_f1_ci.lo95},
                            {"hi95", res.macro_f1_ci.hi95},
                            {"skipped", res.macro_f1_ci.skipped}};
        m["classification"] = c;
    }
    if (res.has_regression) {
        json r;
        r["rmse"] = res.regression.rmse;
        r["r2"] = res.regression.r2;
        r["pearson_r"] = res.regression.pearson_r;
        r["rmse_ci"] = {{"point", res.rmse_ci.point},
                        {"lo95", res.rmse_ci.lo95},
                        {"hi95", res.rmse_ci.hi95}};
        r["r2_ci"] = {{"point", res.r2_ci.point},
                      {"lo95", res.r2_ci.lo95},
                      {"hi95", res.r2_ci.hi95}};
        m["regression"] = r;
    }
    json hashes = json::array();
    for (auto h : res.fold_artifact_hashes) hashes.push_back(h);
    m["fold_artifact_hashes"] = hashes;
    return m;
}

void write_predictions_csv(const CrossValidationResult& res, const fs::path& path) {
    std::ofstream out(path);
    out << "subject_id,fold,y_true,y_pred,label_true,label_pred\n";
    for (size_t i = 0; i < res.pooled.size(); ++i) {
        const auto& s = res.pooled[i];
        out << s.subject_id << ',' << res.fold_of_sample[i] << ',' << fmt17(s.y_true) << ','
            << fmt17(s.y_pred) << ',' << s.label_true << ',' << s.label_pred << "\n";
    }
}

// --- subcommands ------------------------------------------------------------

int cmd_gen_data(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    auto data = generate_labeled_trajectories(synthetic_spec(cfg));
    save_sequences(data, out.path("dataset.json").string());
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_register(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    auto data = load_dataset(cfg);
    PipelineConfig p = pipeline_config(cfg);

    std::vector<Trajectory> trajs;
    for (const auto& seq : data) {
        Trajectory tr;
        for (const auto& f : seq.frames) tr.frames.push_back(to_preshape(f));
        trajs.push_back(resample_trajectory(tr, p.T));
    }
    std::ofstream log(out.path("convergence.log"));
    RegistrationConfig reg = p.registration;
    reg.log = &log;
    RegistrationResult res = register_collection(trajs, reg);

    // Mean + reference as a model-free JSON artifact.
    {
        json j;
        j["converged"] = res.converged;
        j["objective_history"] = res.objective_history;
        auto mat = [](const Matrix& m) {
            json rows = json::array();
            for (int r = 0; r < m.rows(); ++r) {
                json row = json::array();
                for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
                rows.push_back(row);
            }
            return rows;
        };
        json frames = json::array();
        for (const auto& f : res.mean.frames) frames.push_back(mat(f));
        j["mean_frames"] = frames;
        j["reference"] = mat(res.reference);
        std::ofstream(out.path("mean.json")) << j.dump(2) << "\n";
    }
    // Aligned trajectories round-trip through the standard dataset format.
    {
        std::vector<RawSequence> aligned;
        for (size_t i = 0; i < data.size(); ++i) {
            RawSequence seq;
            seq.subject_id = data[i].subject_id;
            seq.target = data[i].target;
            seq.label = data[i].label;
            seq.frames = res.aligned[i].frames;
            aligned.push_back(std::move(seq));
        }
        save_sequences(aligned, out.path("aligned.json").string());
    }
    // Warps and shooting-field norms as plot-ready CSVs.
    {
        std::ofstream w(out.path("warps.csv"));
        w << "sequence,node,gamma\n";
        for (size_t i = 0; i < res.warps.size(); ++i)
            for (size_t t = 0; t < res.warps[i].values.size(); ++t)
                w << data[i].subject_id << ',' << t << ',' << fmt17(res.warps[i].values[t])
                  << "\n";
        std::ofstream s(out.path("shooting_norms.csv"));
        s << "sequence,norm\n";
        for (size_t i = 0; i < res.shooting.size(); ++i)
            s << data[i].subject_id << ',' << fmt17(res.shooting[i].norm()) << "\n";
    }
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_train(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    auto data = load_dataset(cfg);
    PipelineConfig p = pipeline_config(cfg);
    FittedFold fold = fit_fold(data, p, 0);

    ModelState state;
    state.params = fold.params;
    if (fold.has_context) {
        state.mean_traj = fold.context.mean;
        state.reference = fold.context.reference;
    }
    state.standardize_mean = fold.standardize_mean;
    state.standardize_std = fold.standardize_std;
    state.config = p.training;

    // Variance-reorder the latents once, at train time.
    std::vector<LatentCode> codes;
    Rng dummy(0);
    for (const auto& emb : fold.train_embeddings) {
        LatentCode c;
        c.posterior_mean = emb.code;
        codes.push_back(std::move(c));
    }
    auto [perm, reordered] = reorder_latents(state.params, codes);
    state.latent_permutation = perm;

    save_model(state, out.path("model.json").string());
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_embed(const json& cfg) {
    std::string model_path = cfg["model_path"].get<std::string>();
    if (model_path.empty() || !fs::exists(model_path))
        throw IoError("embed: missing model archive (set model_path)");
    OutputDir out(cfg["output_dir"].get<std::string>());
    ModelState state = load_model(model_path);
    auto data = load_dataset(cfg);
    PipelineConfig p = pipeline_config(cfg);

    FittedFold fold;
    fold.params = state.params;
    fold.standardize_mean = state.standardize_mean;
    fold.standardize_std = state.standardize_std;
    if (!state.mean_traj.frames.empty()) {
        fold.context.mean = state.mean_traj;
        fold.context.reference = state.reference;
        fold.has_context = true;
    }

    std::ofstream csv(out.path("embeddings.csv"));
    csv << "subject_id";
    for (int j = 0; j < state.params.latent_dim(); ++j) csv << ",z" << (j + 1);
    csv << "\n";
    for (const auto& seq : data) {
        Vector z = embed_sequence(fold, seq, p);
        csv << seq.subject_id;
        for (long j = 0; j < z.size(); ++j) csv << ',' << fmt17(z[j]);
        csv << "\n";
    }
    csv.close();
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_eval(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    auto data = load_dataset(cfg);
    PipelineConfig p = pipeline_config(cfg);
    FoldPlan plan = build_fold_plan(cfg, data);
    CrossValidationResult res = run_cross_validation(data, plan, p);

    write_predictions_csv(res, out.path("predictions.csv"));
    std::ofstream(out.path("metrics.json")) << metrics_json(res).dump(2) << "\n";
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_sphere_demo(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    SphereDemoConfig demo;
    demo.data.n_points = cfg["data"]["sphere"]["n_points"].get<int>();
    demo.data.noise_level = cfg["data"]["sphere"]["noise_level"].get<double>();
    demo.data.curve_samples = cfg["data"]["sphere"]["curve_samples"].get<int>();
    demo.data.seed = cfg["seed"].get<std::uint64_t>();
    SphereDemoResult res = run_sphere_demo(demo);

    std::ofstream table(out.path("comparison.csv"));
    table << "method,mean_geodesic_error\n";
    for (const auto& m : res.methods)
        table << m.method << ',' << fmt17(m.mean_geodesic_error) << "\n";

    std::ofstream pts(out.path("plot_data.csv"));
    pts << "kind,method,x,y,z\n";
    for (const auto& p : res.data.points)
        pts << "data,," << fmt17(p(0, 0)) << ',' << fmt17(p(1, 0)) << ',' << fmt17(p(2, 0))
            << "\n";
    for (const auto& c : res.data.curve)
        pts << "curve,," << fmt17(c(0, 0)) << ',' << fmt17(c(1, 0)) << ',' << fmt17(c(2, 0))
            << "\n";
    for (const auto& m : res.methods)
        for (const auto& r : m.reconstructions)
            pts << "reconstruction," << m.method << ',' << fmt17(r(0, 0)) << ','
                << fmt17(r(1, 0)) << ',' << fmt17(r(2, 0)) << "\n";
    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

int cmd_ablation(const json& cfg) {
    OutputDir out(cfg["output_dir"].get<std::string>());
    auto data = load_dataset(cfg);
    FoldPlan plan = build_fold_plan(cfg, data);

    std::ofstream table(out.path("ablation.csv"));
    table << "stage,loss_mode,kl_weight,metric,point,lo95,hi95\n";
    auto run_one = [&](AlignmentStage stage, LossMode loss, double beta) {
        json sub = cfg;
        sub["alignment"]["stage"] = stage_name(stage);
        sub["training"]["loss_mode"] = loss == LossMode::geodesic ? "geodesic" : "tangent_mse";
        sub["training"]["kl_weight"] = beta;
        PipelineConfig p = pipeline_config(sub);
        CrossValidationResult res = run_cross_validation(data, plan, p);
        std::string lm = loss == LossMode::geodesic ? "geodesic" : "tangent_mse";
        if (res.has_classification)
            table << stage_name(stage) << ',' << lm << ',' << fmt17(beta) << ",macro_f1,"
                  << fmt17(res.macro_f1_ci.point) << ',' << fmt17(res.macro_f1_ci.lo95) << ','
                  << fmt17(res.macro_f1_ci.hi95) << "\n";
        if (res.has_regression)
            table << stage_name(stage) << ',' << lm << ',' << fmt17(beta) << ",rmse,"
                  << fmt17(res.rmse_ci.point) << ',' << fmt17(res.rmse_ci.lo95) << ','
                  << fmt17(res.rmse_ci.hi95) << "\n";
    };

    const double beta0 = cfg["training"]["kl_weight"].get<double>();
    for (AlignmentStage stage :
         {AlignmentStage::none, AlignmentStage::center, AlignmentStage::preshape,
          AlignmentStage::kendall, AlignmentStage::kendall_tsrvf})
        run_one(stage, LossMode::geodesic, beta0);
    run_one(AlignmentStage::kendall_tsrvf, LossMode::tangent_mse, beta0);
    for (const auto& beta : cfg["eval"]["beta_sweep"])
        run_one(AlignmentStage::kendall_tsrvf, LossMode::geodesic, beta.get<double>());

    out.commit(cfg, cfg["seed"].get<std::uint64_t>());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elastic shape analysis of landmark trajectories"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> sets;
    int jobs = 0;
    long long seed = -1;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--set", sets, "Override config entry as section.key=value");
    app.add_option("--jobs", jobs, "Worker-thread cap (0 = default)");
    app.add_option("--seed", seed, "Root RNG seed");
    app.add_option("--out", out_dir, "Output directory");

    const char* names[] = {"register", "train",    "embed",   "eval",
                           "sphere-demo", "ablation", "gen-data"};
    for (const char* n : names) app.add_subcommand(n)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = default_config();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw IoError("cannot open config: " + config_path);
            json user;
            try {
                user = json::parse(in);
            } catch (const json::exception& e) {
                throw ConfigError(std::string("config parse error: ") + e.what());
            }
            merge_checked(cfg, user, "");
        }
        for (const auto& kv : sets) apply_set(cfg, kv);
        if (seed >= 0) cfg["seed"] = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg["output_dir"] = out_dir;
        set_jobs(jobs);

        std::string sub = app.get_subcommands().front()->get_name();
        if (sub == "gen-data") return cmd_gen_data(cfg);
        if (sub == "register") return cmd_register(cfg);
        if (sub == "train") return cmd_train(cfg);
        if (sub == "embed") return cmd_embed(cfg);
        if (sub == "eval") return cmd_eval(cfg);
        if (sub == "sphere-demo") return cmd_sphere_demo(cfg);
        if (sub == "ablation") return cmd_ablation(cfg);
        return 2;
    } catch (const ConfigError& e) {
        json err = {{"error", "config"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const Error& e) {
        json err = {{"error", "runtime"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        json err = {{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
