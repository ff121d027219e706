#include <doctest.h>

#include <cmath>
#include <fstream>

#include "blowlab/profile.hpp"
#include "oracles.hpp"

using namespace blowlab;

namespace {

ProblemParams golden_params() {
    ProblemParams pp;
    pp.p = 2;
    pp.q = 3;
    pp.sigma = 2;
    pp.mu = 1;
    pp.n = 1;
    return pp;
}

// the (p=2, q=3, sigma=2, n=1) profile is reused by several suites
const Profile& golden_profile() {
    static const Profile prof = find_profile(golden_params());
    return prof;
}

}  // namespace

TEST_CASE("radial_rhs closed-form points") {
    ProblemParams pp = golden_params();
    CHECK(radial_rhs(1.0, 0.0, 0.0, pp) == doctest::Approx(0.0));
    CHECK(radial_rhs(1.0, 1.0, 0.0, pp) == doctest::Approx(1.0).epsilon(1e-14));
    // -((0)/2 - 1)*1 + 1 - 1 + 4, checked by hand against the equation
    CHECK(radial_rhs(2.0, 1.0, 1.0, pp) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK_THROWS_AS(radial_rhs(0.0, 1.0, 0.0, pp), std::invalid_argument);
    CHECK_THROWS_AS(radial_rhs(-1.0, 1.0, 0.0, pp), std::invalid_argument);
    CHECK_THROWS_AS(radial_rhs(1.0, -0.5, 0.0, pp), std::invalid_argument);
}

TEST_CASE("expand_at_origin series") {
    ProblemParams pp = golden_params();

    SUBCASE("zero-solution limit") {
        const auto [w, wp] = expand_at_origin(1e-10, pp, 1e-6);
        CHECK(w <= 2e-10);
        CHECK(std::fabs(wp) <= 1e-15);
    }
    SUBCASE("balance point gives a flat start for sigma > 0") {
        // mu*alpha^{p-1} = 1/(p-1): alpha = 1 for p=2, mu=1
        const auto [w, wp] = expand_at_origin(1.0, pp, 1e-4);
        CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::fabs(wp) < 1e-11);
    }
    SUBCASE("matches the fourth-order series oracle") {
        // For alpha0=1, p=2, q=3, sigma=2, mu=1, n=1 the expansion is
        // w = 1 + r^4/12 + O(r^6): order r^0 gives 2 a2 = alpha - alpha^2 = 0
        // and order r^2 gives 12 a4 = 2 a2 (1 - alpha) + alpha^3 = 1.
        const double eps = 1e-6;
        const auto [w0, wp0] = expand_at_origin(1.0, pp, eps);
        const auto end = oracles::integrate_profile(pp, eps, w0, wp0, 0.05, 4000);
        CHECK(end.w == doctest::Approx(1.0 + std::pow(0.05, 4) / 12.0).epsilon(1e-9));
        CHECK(end.wp == doctest::Approx(std::pow(0.05, 3) / 3.0).epsilon(1e-4));
    }
    SUBCASE("rejects bad input") {
        CHECK_THROWS_AS(expand_at_origin(0.0, pp, 1e-6), std::invalid_argument);
        CHECK_THROWS_AS(expand_at_origin(1.0, pp, 0.0), std::invalid_argument);
    }
}

TEST_CASE("shoot classifies and locates the crossing") {
    ProblemParams pp = golden_params();
    pp.mu = 20.0;

    const auto shot = shoot(1.0, pp, 20.0);
    REQUIRE(shot.cls == ShotClass::Crossed);
    CHECK(shot.r0 > 0.0);
    CHECK(shot.wp_r0 < 0.0);
    CHECK(std::fabs(shot.wp_r0) > 1e-8);

    SUBCASE("crossing radius agrees with an independent fine-step oracle") {
        const double eps = 1e-6;
        const auto [w0, wp0] = expand_at_origin(1.0, pp, eps);
        const double r0_ref = oracles::first_zero_radius(pp, eps, w0, wp0, 20.0, 2e-4);
        REQUIRE(r0_ref > 0.0);
        CHECK(shot.r0 == doctest::Approx(r0_ref).epsilon(1e-6));
    }
    SUBCASE("outcome class and r0 stable under tolerance halving") {
        SearchControls tight;
        tight.shoot_rtol /= 2.0;
        tight.shoot_atol /= 2.0;
        const auto shot2 = shoot(1.0, pp, 20.0, tight);
        CHECK(shot2.cls == ShotClass::Crossed);
        CHECK(shot2.r0 == doctest::Approx(shot.r0).epsilon(1e-6));
    }
    SUBCASE("origin eps consistency: 10x smaller start moves r0 by O(eps^2)") {
        SearchControls a, b;
        a.origin_eps = 1e-4;
        b.origin_eps = 1e-5;
        const auto sa = shoot(1.0, pp, 20.0, a);
        const auto sb = shoot(1.0, pp, 20.0, b);
        REQUIRE(sa.cls == ShotClass::Crossed);
        REQUIRE(sb.cls == ShotClass::Crossed);
        CHECK(std::fabs(sa.r0 - sb.r0) < 1e-7);
    }
}

TEST_CASE("shoot outcome for a small shooting height is stable") {
    ProblemParams pp = golden_params();
    const auto s1 = shoot(1e-4, pp, 25.0);
    SearchControls tight;
    tight.shoot_rtol /= 2.0;
    const auto s2 = shoot(1e-4, pp, 25.0, tight);
    CHECK(s1.cls == s2.cls);
    CHECK(s1.cls != ShotClass::NonFinite);
    CHECK(s1.cls != ShotClass::StepUnderflow);
}

TEST_CASE("find_profile certifies the first crossing in scan order") {
    const Profile& prof = golden_profile();

    CHECK(prof.params.mu == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(prof.alpha0 == doctest::Approx(4.6415888336127775).epsilon(1e-12));
    CHECK(prof.r0 == doctest::Approx(1.2117187120).epsilon(1e-6));

    SUBCASE("table invariants") {
        REQUIRE(prof.values.size() == prof.grid.size());
        REQUIRE(prof.derivs.size() == prof.grid.size());
        CHECK(prof.values.front() == doctest::Approx(prof.alpha0));
        CHECK(prof.values.back() == 0.0);
        CHECK(prof.derivs.front() == 0.0);
        CHECK(prof.interface_slope() < -1e-8);
        for (std::size_t k = 0; k + 1 < prof.values.size(); ++k) {
            CHECK(prof.values[k] > 0.0);
            CHECK(prof.values[k] <= prof.alpha0 * (1 + 1e-12));
        }
    }
    SUBCASE("residual certificate holds and is re-checkable") {
        CHECK(prof.residual_tol == doctest::Approx(1e-6 * (1 + std::pow(prof.alpha0, 3.0))));
        CHECK(prof.residual_max <= prof.residual_tol);
        // independent centered-difference pass written out in the test
        const double h = prof.h();
        double worst = 0.0;
        for (std::size_t k = 1; k + 1 < prof.values.size(); ++k) {
            const double r = prof.grid[k];
            const double d2 =
                (prof.values[k - 1] - 2 * prof.values[k] + prof.values[k + 1]) / (h * h);
            const double d1 = (prof.values[k + 1] - prof.values[k - 1]) / (2 * h);
            const double res = d2 + (0.0 / r - 0.5 * r) * d1 - prof.values[k] +
                               std::pow(prof.values[k], 2.0) - r * r * std::pow(prof.values[k], 3.0);
            worst = std::fmax(worst, std::fabs(res));
        }
        CHECK(worst <= prof.residual_tol);
        CHECK(worst == doctest::Approx(prof.residual_max).epsilon(1e-6));
    }
    SUBCASE("gaussian weight is tabulated as a diagnostic") {
        REQUIRE(prof.weight.size() == prof.grid.size());
        CHECK(prof.weight.front() == doctest::Approx(1.0));
        const std::size_t mid = prof.grid.size() / 2;
        CHECK(prof.weight[mid] ==
              doctest::Approx(std::exp(-prof.grid[mid] * prof.grid[mid] / 4.0)));
    }
}

TEST_CASE("profile refinement oracles") {
    const Profile& prof = golden_profile();
    const int k_coarse = static_cast<int>(prof.grid.size());

    SUBCASE("doubling the grid changes tabulated values by <= 1e-5") {
        const Profile fine = tabulate_profile(prof.params, prof.alpha0, prof.r0,
                                              2 * (k_coarse - 1) + 1, 4, 1e-6, 1e-8);
        for (std::size_t k = 0; k < prof.values.size(); ++k) {
            CHECK(std::fabs(prof.values[k] - fine.values[2 * k]) <= 1e-5);
        }
    }
    SUBCASE("r0 stable to 1e-6 relative under substep halving") {
        const Profile fine = tabulate_profile(prof.params, prof.alpha0, prof.r0, k_coarse, 8,
                                              1e-6, 1e-8);
        CHECK(std::fabs(fine.r0 - prof.r0) <= 1e-6 * prof.r0);
    }
}

TEST_CASE("extended evaluator") {
    const Profile& prof = golden_profile();

    CHECK(prof.value(0.0) == doctest::Approx(prof.alpha0));
    CHECK(prof.value(prof.r0) == 0.0);
    CHECK(prof.value(prof.r0 + 1.0) == 0.0);
    CHECK(prof.deriv(prof.r0 + 0.5) == 0.0);
    CHECK(prof.interface_slope() < 0.0);
    CHECK_THROWS_AS(prof.value(-0.1), std::invalid_argument);

    SUBCASE("nonnegative everywhere and zero beyond r0") {
        for (double r = 0.0; r < 2.0 * prof.r0; r += prof.r0 / 997.0) {
            CHECK(prof.value(r) >= 0.0);
            if (r > prof.r0) CHECK(prof.value(r) == 0.0);
        }
    }
    SUBCASE("midpoint interpolation matches a double-resolution table to 1e-6") {
        const Profile fine =
            tabulate_profile(prof.params, prof.alpha0, prof.r0,
                             2 * (static_cast<int>(prof.grid.size()) - 1) + 1, 4, 1e-6, 1e-8);
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < prof.grid.size(); k += 7) {
            const double rm = 0.5 * (prof.grid[k] + prof.grid[k + 1]);
            worst = std::fmax(worst, std::fabs(prof.value(rm) - fine.values[2 * k + 1]));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("find_profile guards") {
    SUBCASE("refuses sigma below critical before searching") {
        ProblemParams pp = golden_params();
        pp.sigma = 1.0;
        CHECK_THROWS_AS(find_profile(pp), std::invalid_argument);
    }
    SUBCASE("search exhaustion reports the scan trace") {
        ProblemParams pp = golden_params();
        SearchControls tiny;
        tiny.mu_min = 1e-3;
        tiny.mu_max = 2e-3;
        tiny.alpha_min = 1e-3;
        tiny.alpha_max = 2e-3;
        tiny.bisect_budget = 4;
        try {
            find_profile(pp, tiny);
            FAIL("expected SearchExhausted");
        } catch (const SearchExhausted& e) {
            CHECK(!e.trace.empty());
        }
    }
}

TEST_CASE("profile json round trip") {
    const Profile& prof = golden_profile();
    const std::string text = profile_to_json(prof);
    const Profile back = profile_from_json(text);
    CHECK(back.alpha0 == prof.alpha0);
    CHECK(back.r0 == prof.r0);
    CHECK(back.params.mu == prof.params.mu);
    REQUIRE(back.values.size() == prof.values.size());
    for (std::size_t k = 0; k < prof.values.size(); k += 11) {
        CHECK(back.values[k] == prof.values[k]);
        CHECK(back.derivs[k] == prof.derivs[k]);
    }
    CHECK(back.residual_max == prof.residual_max);
}

TEST_CASE("golden profile regression") {
    const std::string path = std::string(BLOWLAB_SOURCE_DIR) + "/data/golden/profile_p2q3s2n1.json";
    std::ifstream is(path);
    if (!is) {
        MESSAGE("golden file missing; regenerate with: blowlab profile find");
        FAIL("missing golden profile at " << path);
    }
    const Profile gold = load_profile(path);
    const Profile& prof = golden_profile();
    CHECK(prof.params.mu == doctest::Approx(gold.params.mu).epsilon(1e-12));
    CHECK(prof.alpha0 == doctest::Approx(gold.alpha0).epsilon(1e-12));
    CHECK(prof.r0 == doctest::Approx(gold.r0).epsilon(1e-9));
    REQUIRE(prof.values.size() == gold.values.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < gold.values.size(); ++k)
        worst = std::fmax(worst, std::fabs(prof.values[k] - gold.values[k]));
    CHECK(worst <= 1e-9);
}
