#include <doctest.h>

#include <random>
#include <stdexcept>

#include "blowlab/scaling.hpp"

using namespace blowlab;

TEST_CASE("critical_sigma values") {
    CHECK(critical_sigma(2, 3) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(critical_sigma(2, 2) == doctest::Approx(0.0));
    CHECK(critical_sigma(3, 5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(critical_sigma(1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(critical_sigma(0.5, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(critical_sigma(2.0, 1.5), std::invalid_argument);
}

TEST_CASE("critical_sigma is monotone in q and pins q = 2p-1 to 2") {
    for (double p : {1.2, 1.5, 2.0, 2.7, 3.0, 4.5}) {
        double prev = -1.0;
        for (double q = p; q < p + 4.0; q += 0.25) {
            const double sc = critical_sigma(p, q);
            CHECK(sc >= prev);
            prev = sc;
        }
        CHECK(critical_sigma(p, 2 * p - 1) == doctest::Approx(2.0).epsilon(1e-13));
    }
}

TEST_CASE("check_hypotheses flag structure") {
    ProblemParams pp;
    pp.p = 2;
    pp.q = 3;
    pp.sigma = 2;
    pp.n = 1;

    SUBCASE("sigma-critical case passes with the equality flag set") {
        const auto rep = check_hypotheses(pp);
        CHECK(rep.all_required_pass());
        REQUIRE(rep.find("sigma_exactly_critical") != nullptr);
        CHECK(rep.find("sigma_exactly_critical")->pass);
    }
    SUBCASE("sigma below critical fails the threshold flag") {
        pp.sigma = 1;
        const auto rep = check_hypotheses(pp);
        CHECK_FALSE(rep.all_required_pass());
        CHECK_FALSE(rep.find("sigma_at_least_critical")->pass);
    }
    SUBCASE("sobolev boundary: q = (n+2)/(n-2) is not subcritical") {
        pp.n = 4;
        pp.dim_cap = 4;
        const auto rep = check_hypotheses(pp);
        CHECK_FALSE(rep.find("sobolev_subcritical")->pass);
        CHECK_FALSE(rep.all_required_pass());
    }
    SUBCASE("fujita flag is informational") {
        pp.p = 4.0;
        pp.q = 4.0;
        const auto rep = check_hypotheses(pp);
        CHECK_FALSE(rep.find("fujita_range")->pass);
        CHECK_FALSE(rep.find("fujita_range")->required);
    }
    SUBCASE("pure: identical inputs give identical reports") {
        const auto a = check_hypotheses(pp);
        const auto b = check_hypotheses(pp);
        REQUIRE(a.flags.size() == b.flags.size());
        for (std::size_t i = 0; i < a.flags.size(); ++i) {
            CHECK(a.flags[i].name == b.flags[i].name);
            CHECK(a.flags[i].pass == b.flags[i].pass);
            CHECK(a.flags[i].detail == b.flags[i].detail);
        }
    }
}

TEST_CASE("params validation") {
    ProblemParams pp;
    CHECK(pp.is_valid());
    pp.q = 1.5;  // q < p
    CHECK_FALSE(pp.is_valid());
    pp.q = 3;
    pp.n = 4;  // above the default dimension cap
    CHECK_FALSE(pp.is_valid());
    pp.dim_cap = 4;
    CHECK(pp.is_valid());
}

TEST_CASE("to_similarity basics") {
    const Vec3 x0{0, 0, 0};
    CHECK(to_similarity(x0, -1.0, x0, 1).r == doctest::Approx(0.0));
    const Vec3 x{2, 0, 0};
    CHECK(to_similarity(x, -4.0, x0, 2).r == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(to_similarity(x, 0.0, x0, 1), std::invalid_argument);
    CHECK_THROWS_AS(to_similarity(x, 0.5, x0, 1), std::invalid_argument);
}

TEST_CASE("to_similarity round trip on random points") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    std::uniform_real_distribution<double> time(-10.0, -1e-6);
    for (int n : {1, 2, 3}) {
        for (int it = 0; it < 100; ++it) {
            Vec3 x0{coord(rng), coord(rng), coord(rng)};
            Vec3 x{0, 0, 0};
            for (int k = 0; k < n; ++k) x[k] = coord(rng);
            const double t = time(rng);
            const auto sp = to_similarity(x, t, x0, n);
            const double dist = euclidean_dist(x, x0, n);
            if (dist < 1e-12) continue;
            Vec3 dir{0, 0, 0};
            for (int k = 0; k < n; ++k) dir[k] = (x[k] - x0[k]) / dist;
            const Vec3 back = from_similarity(sp, x0, dir, n);
            for (int k = 0; k < n; ++k)
                CHECK(back[k] == doctest::Approx(x[k]).epsilon(1e-12));
        }
    }
}
