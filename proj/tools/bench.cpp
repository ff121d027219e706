// Serial-reference vs parallel-kernel benchmark. The parallel kernels are
// required to be bit-identical to the references; this also reports speedup.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "blowlab/kernels.hpp"
#include "blowlab/kinetics.hpp"
#include "blowlab/lower_solution.hpp"

using namespace blowlab;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        f();
        best = std::fmin(best, ms_since(t0));
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blowlab-bench: serial reference vs parallel kernels"};
    int jobs = 0;
    std::size_t n = 1 << 21;
    int reps = 20;
    app.add_option("--jobs", jobs, "thread count for the parallel side (0: runtime default)");
    app.add_option("--nodes", n, "grid size for the kernel benchmarks");
    app.add_option("--reps", reps, "repetitions (best-of timing)");
    CLI11_PARSE(app, argc, argv);

    const par::ExecPolicy pol{jobs};
    std::printf("threads (parallel side): %d\n", par::resolved_threads(pol));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 2.0);
    std::vector<double> u(n), a(n), out_s(n), out_p(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = uni(rng);
        a[i] = uni(rng);
    }
    kernels::GridGeom g;
    g.radial = false;
    g.xmin = 0.0;
    g.h = 1.0 / double(n - 1);
    g.n = n;

    std::printf("%-28s %12s %12s %9s %s\n", "kernel", "serial ms", "parallel ms", "speedup",
                "bit-identical");

    {
        const double ts = time_best_of(reps, [&] {
            kernels::serial::reaction_diffusion_rhs(g, 0.7, 1.0, 2.0, 3.0, a, u, out_s);
        });
        const double tp = time_best_of(reps, [&] {
            kernels::reaction_diffusion_rhs(g, 0.7, 1.0, 2.0, 3.0, a, u, out_p, pol);
        });
        bool same = true;
        for (std::size_t i = 0; i < n; ++i) same = same && out_s[i] == out_p[i];
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "reaction_diffusion_rhs", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    {
        kernels::MaxLoc ms{}, mp{};
        const double ts = time_best_of(reps, [&] { ms = kernels::serial::max_value_loc(u); });
        const double tp = time_best_of(reps, [&] { mp = kernels::max_value_loc(u, pol); });
        const bool same = ms.value == mp.value && ms.index == mp.index;
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "max_value_loc", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    {
        double ss = 0, sp = 0;
        const double ts = time_best_of(reps, [&] { ss = kernels::serial::blocked_sum(u); });
        const double tp = time_best_of(reps, [&] { sp = kernels::blocked_sum(u, pol); });
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "blocked_sum", ts, tp, ts / tp,
                    ss == sp ? "yes" : "NO");
    }
    {
        double ms = 0, mp = 0;
        const double ts = time_best_of(reps, [&] { ms = kernels::serial::min_diff(u, a); });
        const double tp = time_best_of(reps, [&] { mp = kernels::min_diff(u, a, pol); });
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "min_diff", ts, tp, ts / tp,
                    ms == mp ? "yes" : "NO");
    }
    {
        // heavy-task fan-out: kinetic sweep cells
        KineticSpec ks;
        ks.p = 2;
        ks.q = 3;
        ks.mu = 1;
        ks.sigma = 1;
        ks.m = 3;
        ks.f.kind = kernels::KineticLaw::Linear;
        ks.f.lambda = 1.0;
        KineticControls kc;
        kc.horizon = 10.0;
        SweepResult rs, rp;
        kc.threads = 1;
        const double ts =
            time_best_of(3, [&] { rs = sweep_boundedness(0, 10, 17, 0, 10, 17, ks, kc); });
        kc.threads = jobs;
        const double tp =
            time_best_of(3, [&] { rp = sweep_boundedness(0, 10, 17, 0, 10, 17, ks, kc); });
        bool same = rs.cells.size() == rp.cells.size();
        for (std::size_t i = 0; same && i < rs.cells.size(); ++i)
            same = rs.cells[i].sup_u == rp.cells[i].sup_u && rs.cells[i].verdict == rp.cells[i].verdict;
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "kinetics_sweep 17x17", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    {
        // lower-solution residual sampling over the cone
        ProblemParams pp;
        pp.p = 2;
        pp.q = 3;
        pp.sigma = 2;
        pp.n = 1;
        const Profile prof = find_profile(pp);
        const auto ls = make_lower_solution(prof, -1.0, 1.0, prof.params.mu, {0, 0, 0});
        const auto samples = cone_samples(ls, 200000, 0);
        ResidualReport rs{}, rp{};
        const double ts =
            time_best_of(3, [&] { rs = interior_residual(ls, samples, par::serial()); });
        const double tp = time_best_of(3, [&] { rp = interior_residual(ls, samples, pol); });
        const bool same = rs.min_residual == rp.min_residual && rs.max_residual == rp.max_residual;
        std::printf("%-28s %12.3f %12.3f %8.2fx %s\n", "interior_residual 200k", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    return 0;
}
