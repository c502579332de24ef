// Benchmark of the reaction evaluation paths: the serial reference loops,
// the direct path under OpenMP, and the separable/transform fast path.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "coagfrag/reaction.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace coagfrag;

namespace {

TruncatedState random_state(int n, int cells, std::uint64_t seed) {
    TruncatedState s(n, Grid::interval(1.0, cells));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 1; i <= n; ++i)
        for (auto& v : s.species(i).v) v = uni(rng) / double(i);
    return s;
}

double time_eval(const ReactionEvaluator& eval, const TruncatedState& s, int reps,
                 double& checksum) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    checksum = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto out = eval.eval_state(s);
        checksum += out[0][0];
    }
    const auto t1 = clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

}

int main(int argc, char** argv) {
    int cells = 64;
    int reps = 20;
    if (argc > 1) cells = std::atoi(argv[1]);
    if (argc > 2) reps = std::atoi(argv[2]);

#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: disabled\n");
#endif
    std::printf("cells=%d reps=%d\n\n", cells, reps);
    std::printf("%6s %14s %14s %14s %10s\n", "n", "direct [ms]", "fast [ms]", "speedup", "rel.diff");

    KernelSet ks{PowerLawCoagulation{0.5, 1.0, 1.0}, PowerLawFragmentation{1.0, 2.0},
                 PowerLawDaughters{0.0}};
    for (int n : {32, 64, 128, 256, 512, 1024}) {
        const TruncatedState s = random_state(n, cells, 12345);
        ReactionEvaluator direct(ks, n, TruncationMode::conservative, ReactionEvaluator::Path::direct);
        ReactionEvaluator fast(ks, n, TruncationMode::conservative, ReactionEvaluator::Path::fast);

        double cks_d = 0.0, cks_f = 0.0;
        const double td = time_eval(direct, s, reps, cks_d);
        const double tf = time_eval(fast, s, reps, cks_f);

        // worst-case relative gap between the two paths on this state
        const auto rd = direct.eval_state(s);
        const auto rf = fast.eval_state(s);
        double scale = 0.0, diff = 0.0;
        for (int i = 0; i < n; ++i)
            for (std::size_t c = 0; c < rd[std::size_t(i)].size(); ++c) {
                scale = std::max(scale, std::abs(rd[std::size_t(i)][c]));
                diff = std::max(diff, std::abs(rd[std::size_t(i)][c] - rf[std::size_t(i)][c]));
            }
        std::printf("%6d %14.3f %14.3f %14.2f %10.2e\n", n, td * 1e3, tf * 1e3, td / tf,
                    diff / scale);
    }
    return 0;
}
