#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "blowlab/kinetics.hpp"

using namespace blowlab;

namespace {

KineticSpec linear_spec(double lambda, double m, double sigma, double mu) {
    KineticSpec ks;
    ks.p = 2;
    ks.q = 3;
    ks.mu = mu;
    ks.sigma = sigma;
    ks.m = m;
    ks.f.kind = kernels::KineticLaw::Linear;
    ks.f.lambda = lambda;
    return ks;
}

}  // namespace

TEST_CASE("hypothesis gate") {
    std::string why;
    CHECK(kinetic_hypotheses_ok(linear_spec(1, 3, 2, 1), &why));
    auto bad = linear_spec(0, 3, 2, 1);  // f == 0 everywhere, so f(m) == 0
    CHECK_FALSE(kinetic_hypotheses_ok(bad, &why));
    CHECK(!why.empty());
    auto qp = linear_spec(1, 3, 2, 1);
    qp.q = 2;
    qp.p = 2;
    CHECK_FALSE(kinetic_hypotheses_ok(qp, &why));
}

TEST_CASE("example-(i) style trajectory stays bounded") {
    const auto ks = linear_spec(1.0, 3.0, 2.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 50.0;
    const auto traj = integrate(1.0, 10.0, ks, ctl);
    CHECK(traj.verdict == KinVerdict::Bounded);
    CHECK(traj.sup_u <= ctl.u_kin);

    SUBCASE("half-tolerance oracle agrees on the verdict") {
        KineticControls tight = ctl;
        tight.rtol /= 2.0;
        tight.atol /= 2.0;
        const auto traj2 = integrate(1.0, 10.0, ks, tight);
        CHECK(traj2.verdict == KinVerdict::Bounded);
        CHECK(traj2.sup_u == doctest::Approx(traj.sup_u).epsilon(1e-6));
    }
}

TEST_CASE("eta = 0 stays on the trivial branch") {
    const auto ks = linear_spec(1.0, 3.0, 2.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 10.0;
    const auto traj = integrate(2.0, 0.0, ks, ctl);
    CHECK(traj.verdict == KinVerdict::Bounded);
    for (const auto& s : traj.samples) CHECK(s[2] == 0.0);
}

TEST_CASE("xi = 0 converges to the closed-form saturation root") {
    // v == 0, so u' = mu u^p - m^sigma u^q with root (mu/m^sigma)^{1/(q-p)}
    const auto ks = linear_spec(1.0, 3.0, 1.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 60.0;
    const auto traj = integrate(0.0, 1.0, ks, ctl);
    REQUIRE(traj.verdict == KinVerdict::Bounded);
    const double root = 1.0 / 3.0;
    CHECK(std::fabs(traj.samples.back()[2] - root) < 1e-6);
    for (const auto& s : traj.samples) CHECK(s[1] == 0.0);  // v stays at 0
}

TEST_CASE("linear v is integrated to high relative accuracy") {
    const auto ks = linear_spec(1.0, 3.0, 2.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 10.0;
    const auto traj = integrate(2.0, 1.0, ks, ctl);
    const double exact = 2.0 * std::exp(10.0);
    CHECK(std::fabs(traj.samples.back()[1] - exact) <= 1e-8 * exact);
}

TEST_CASE("v is strictly monotone when f has no zero on the orbit") {
    const auto ks = linear_spec(1.0, 3.0, 1.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 5.0;
    const auto traj = integrate(0.5, 2.0, ks, ctl);
    for (std::size_t k = 1; k < traj.samples.size(); ++k)
        CHECK(traj.samples[k][1] > traj.samples[k - 1][1]);
}

TEST_CASE("transform and direct trajectories agree where u >= 1e-3") {
    // equal-diffusion example parameters
    const auto ks = linear_spec(std::numbers::pi * std::numbers::pi, 3.0, 1.0,
                                std::numbers::pi * std::sqrt(3.0));
    KineticControls ctl;
    ctl.horizon = 5.0;
    for (double xi : {0.5, 1.0, 2.5}) {
        const auto direct = integrate(xi, 10.0, ks, ctl);
        const auto transformed = integrate_w_transform(xi, 10.0, ks, ctl);
        REQUIRE(direct.samples.size() == transformed.samples.size());
        for (std::size_t k = 0; k < direct.samples.size(); ++k) {
            const double ud = direct.samples[k][2];
            const double ut = transformed.samples[k][2];
            if (ud >= 1e-3 && ut >= 1e-3) {
                CHECK(std::fabs(ud - ut) <= 1e-6 * std::fmax(ud, ut));
                CHECK(direct.samples[k][1] ==
                      doctest::Approx(transformed.samples[k][1]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("w-form blowup time matches the Riccati closed form when v == m") {
    // lambda = 0 and xi = m freeze v at m: absorption vanishes identically and
    // u' = mu u^p blows up at (mu (p-1) eta^{p-1})^{-1} = 0.5. The run stops at
    // the boundedness cap; the Riccati identity T* = t + 1/u(t) closes the gap.
    auto ks = linear_spec(0.0, 3.0, 2.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 2.0;
    const auto traj = integrate_w_transform(3.0, 2.0, ks, ctl);
    CHECK(traj.verdict == KinVerdict::Uncertified);  // f(m) = 0 fails the gate
    CHECK(traj.note != "");
    CHECK(traj.t_end + 1.0 / traj.sup_u == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("mu = 0 makes w nondecreasing") {
    auto ks = linear_spec(1.0, 3.0, 2.0, 0.0);
    KineticControls ctl;
    ctl.horizon = 3.0;
    const auto traj = integrate_w_transform(1.0, 5.0, ks, ctl);
    // u = w^{-1/(q-1)} nonincreasing is the same statement on samples
    for (std::size_t k = 1; k < traj.samples.size(); ++k)
        CHECK(traj.samples[k][2] <= traj.samples[k - 1][2] * (1 + 1e-12));
}

TEST_CASE("transform rejects eta = 0") {
    const auto ks = linear_spec(1.0, 3.0, 2.0, 1.0);
    CHECK_THROWS_AS(integrate_w_transform(1.0, 0.0, ks, {}), std::invalid_argument);
}

TEST_CASE("logistic f saturates at the carrying capacity") {
    KineticSpec ks = linear_spec(1.0, 3.0, 1.0, 1.0);
    ks.f.kind = kernels::KineticLaw::Logistic;
    ks.f.lambda = 1.0;
    ks.f.h0 = 0.1;
    ks.f.l = 2.0;  // v' = v - 0.1 v^2: carrying capacity 10
    std::string why;
    CHECK(kinetic_hypotheses_ok(ks, &why));  // f(3) = 3 - 0.9 != 0
    KineticControls ctl;
    ctl.horizon = 60.0;
    const auto traj = integrate(1.0, 5.0, ks, ctl);
    CHECK(traj.verdict == KinVerdict::Bounded);
    CHECK(traj.samples.back()[1] == doctest::Approx(10.0).epsilon(1e-6));
    // v is strictly monotone between xi and the capacity
    for (std::size_t k = 1; k < traj.samples.size(); ++k)
        CHECK(traj.samples[k][1] >= traj.samples[k - 1][1]);
}

TEST_CASE("tabulated f reproduces its sampled law") {
    // tabulate f(v) = v on a fine grid; trajectories must match the linear law
    KineticSpec tab = linear_spec(1.0, 3.0, 2.0, 1.0);
    tab.f.kind = kernels::KineticLaw::Tabulated;
    for (int k = 0; k <= 4000; ++k) {
        const double v = -1.0 + k * 0.01;
        tab.f.table.push_back({v, v});
    }
    std::string why;
    CHECK(kinetic_hypotheses_ok(tab, &why));  // evaluated: f(3) = 3
    const auto ks = linear_spec(1.0, 3.0, 2.0, 1.0);
    KineticControls ctl;
    ctl.horizon = 3.0;
    const auto a = integrate(1.0, 2.0, tab, ctl);
    const auto b = integrate(1.0, 2.0, ks, ctl);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k][1] == doctest::Approx(b.samples[k][1]).epsilon(1e-6));
        CHECK(a.samples[k][2] == doctest::Approx(b.samples[k][2]).epsilon(1e-5));
    }
}

TEST_CASE("sweep verdict matrix") {
    SUBCASE("morgan parameters are all bounded") {
        const auto ks = linear_spec(1.0, 3.0, 1.0, 1.0);
        KineticControls ctl;
        ctl.horizon = 50.0;
        const auto sweep = sweep_boundedness(0, 10, 5, 0, 10, 5, ks, ctl);
        CHECK(sweep.certified);
        CHECK(sweep.all_bounded);
        REQUIRE(sweep.cells.size() == 25);
        // eta = 0 column is trivially bounded
        for (const auto& c : sweep.cells)
            if (c.eta == 0.0) CHECK(c.sup_u == 0.0);
    }
    SUBCASE("failed hypotheses mark every cell uncertified") {
        const auto ks = linear_spec(0.0, 3.0, 2.0, 1.0);
        KineticControls ctl;
        ctl.horizon = 5.0;
        const auto sweep = sweep_boundedness(0, 10, 3, 0, 10, 3, ks, ctl);
        CHECK_FALSE(sweep.certified);
        for (const auto& c : sweep.cells) CHECK(c.verdict == KinVerdict::Uncertified);
    }
    SUBCASE("deterministic under thread fan-out") {
        const auto ks = linear_spec(1.0, 3.0, 1.0, 1.0);
        KineticControls ctl;
        ctl.horizon = 20.0;
        ctl.threads = 1;
        const auto s1 = sweep_boundedness(0, 10, 4, 0, 10, 4, ks, ctl);
        ctl.threads = 2;
        const auto s2 = sweep_boundedness(0, 10, 4, 0, 10, 4, ks, ctl);
        REQUIRE(s1.cells.size() == s2.cells.size());
        for (std::size_t i = 0; i < s1.cells.size(); ++i) {
            CHECK(s1.cells[i].sup_u == s2.cells[i].sup_u);
            CHECK(s1.cells[i].verdict == s2.cells[i].verdict);
        }
    }
}
