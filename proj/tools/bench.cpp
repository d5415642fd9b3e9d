// Benchmark: OpenMP-parallel kernels against the serial reference for the two
// hot paths (collection registration and the batch gradient).

#include <chrono>
#include <cstdio>
#include <vector>

#include "esvae/parallel.hpp"
#include "esvae/registration.hpp"
#include "esvae/rvae.hpp"

using namespace esvae;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Trajectory> make_collection(int n, int k, int m, int t, std::uint64_t seed) {
    Rng rng = Rng(seed).substream("bench-data");
    Matrix base(k, m);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j) base(i, j) = rng.normal();
    base = to_preshape(base);
    std::vector<Trajectory> out(n);
    for (int i = 0; i < n; ++i) {
        Trajectory tr;
        for (int s = 0; s < t; ++s) {
            Matrix w(k, m);
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < m; ++b) w(a, b) = 0.05 * rng.normal();
            w = project_to_tangent(base, w);
            tr.frames.push_back(sphere_exp(base, (1.0 + 0.3 * s / t) * w));
        }
        out[i].frames = tr.frames;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int jobs = argc > 1 ? std::atoi(argv[1]) : 0;

    auto collection = make_collection(12, 12, 3, 40, 7);
    RegistrationConfig reg;
    reg.max_iterations = 5;

    std::vector<TrainSample> batch;
    {
        Rng rng = Rng(11).substream("bench-vae");
        const int d = 60;
        for (int i = 0; i < 64; ++i) {
            TrainSample s;
            s.input.resize(d);
            for (int j = 0; j < d; ++j) s.input[j] = rng.normal();
            s.target_field = s.input;
            batch.push_back(std::move(s));
        }
    }
    TrainingConfig tc;
    tc.latent_dim = 8;
    tc.hidden = 64;
    tc.decoder_hidden = 32;
    tc.dropout_rate = 0.0;

    for (int mode = 0; mode < 2; ++mode) {
        set_jobs(mode == 0 ? 1 : jobs);
        const char* label = mode == 0 ? "serial " : "openmp ";

        auto t0 = std::chrono::steady_clock::now();
        RegistrationResult r = register_collection(collection, reg);
        double reg_s = seconds_since(t0);

        NetworkParams p = [&] {
            Rng rng = Rng(3).substream("bench-init");
            return NetworkParams::init(60, tc.hidden, tc.decoder_hidden, tc.latent_dim, rng);
        }();
        t0 = std::chrono::steady_clock::now();
        double total = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            Rng rng = Rng(5).substream("bench-grad", rep);
            auto [loss, grad] = loss_and_gradient(p, batch, nullptr, tc, rng);
            total += loss.total;
        }
        double grad_s = seconds_since(t0);

        std::printf("%s registration %.3fs (objective %.6f)  gradient x50 %.3fs (loss %.6f)\n",
                    label, reg_s, r.objective_history.back(), grad_s, total / 50.0);
    }
    return 0;
}
