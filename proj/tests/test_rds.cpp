#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "blowlab/rds.hpp"

using namespace blowlab;
using kernels::BoundaryKind;

namespace {

Field make_interval_field(std::size_t n, double xmin, double xmax, BoundaryKind bc) {
    Field f;
    f.geom.radial = false;
    f.geom.xmin = xmin;
    f.geom.h = (xmax - xmin) / double(n - 1);
    f.geom.n = n;
    f.geom.left = bc;
    f.geom.right = bc;
    f.u.assign(n, 0.0);
    return f;
}

ReactionSpec pure_reaction(double mu, double p, double q, std::size_t n) {
    ReactionSpec rs;
    rs.mu = mu;
    rs.p = p;
    rs.q = q;
    rs.d = 0.0;
    rs.a.assign(n, 0.0);
    return rs;
}

}  // namespace

TEST_CASE("pure reaction reproduces the closed-form Riccati solution") {
    const std::size_t n = 11;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.u.assign(n, 1.0);
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    SolverControls ctl;
    ctl.rtol = 1e-10;
    ctl.atol = 1e-13;
    ctl.horizon = 0.9;
    ctl.u_cap = 1e12;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::GlobalUpToHorizon);
    // u(t) = 1/(1-t): u(0.9) = 10
    for (double v : f.u) CHECK(std::fabs(v - 10.0) < 1e-6);
}

TEST_CASE("pure reaction blowup time within 1 percent of the closed form") {
    const std::size_t n = 11;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.u.assign(n, 2.0);
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    SolverControls ctl;
    ctl.horizon = 2.0;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::Blowup);
    // T* = eta^{1-p} / (mu (p-1)) = 0.5
    CHECK(std::fabs(res.t_star_hat - 0.5) < 0.005);
    CHECK(res.t_star_hat > res.t_end - 1e-12);
}

TEST_CASE("zero initial data stays at the trivial equilibrium") {
    const std::size_t n = 31;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    rs.d = 0.5;
    SolverControls ctl;
    ctl.horizon = 0.5;
    const auto res = run(f, rs, ctl);
    CHECK(res.status == SimStatus::GlobalUpToHorizon);
    CHECK(res.sup_end == 0.0);
    CHECK_FALSE(res.rate_fit.has_value());  // rate fit only accompanies blowup
}

TEST_CASE("p = 3 pure reaction run fits the -1/2 law") {
    const std::size_t n = 11;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.u.assign(n, 2.0);
    ReactionSpec rs = pure_reaction(1.0, 3.0, 4.0, n);
    SolverControls ctl;
    ctl.horizon = 1.0;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::Blowup);
    // T* = eta^{1-p}/(mu (p-1)) = 1/8
    CHECK(std::fabs(res.t_star_hat - 0.125) < 0.00125);
    REQUIRE(res.rate_fit.has_value());
    REQUIRE(res.rate_fit->ok);
    CHECK(std::fabs(res.rate_fit->exponent - (-0.5)) < 0.05);
}

TEST_CASE("neumann heat flow conserves mass to 1e-8 per unit time") {
    const std::size_t n = 201;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    for (std::size_t i = 0; i < n; ++i)
        f.u[i] = 1.0 + 0.4 * std::cos(2.0 * std::numbers::pi * f.geom.x(i)) +
                 0.2 * std::cos(5.0 * std::numbers::pi * f.geom.x(i));
    ReactionSpec rs = pure_reaction(0.0, 2.0, 3.0, n);
    rs.d = 0.3;

    // trapezoid mass with the scheme's natural half-weights at the ends
    auto mass = [&](const Field& fld) {
        double s = 0.5 * fld.u[0] + 0.5 * fld.u[n - 1];
        for (std::size_t i = 1; i + 1 < n; ++i) s += fld.u[i];
        return s * fld.geom.h;
    };
    const double m0 = mass(f);
    SolverControls ctl;
    ctl.horizon = 1.0;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::GlobalUpToHorizon);
    CHECK(std::fabs(mass(f) - m0) <= 1e-8 * std::fmax(1.0, std::fabs(m0)));
}

TEST_CASE("linear heat eigenmode decays like exp(-t) to 1e-6") {
    const std::size_t n = 801;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    for (std::size_t i = 0; i < n; ++i) f.u[i] = std::cos(std::numbers::pi * f.geom.x(i));
    ReactionSpec rs = pure_reaction(0.0, 2.0, 3.0, n);
    rs.d = 1.0 / (std::numbers::pi * std::numbers::pi);
    SolverControls ctl;
    ctl.horizon = 1.0;
    ctl.rtol = 1e-10;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::GlobalUpToHorizon);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = std::exp(-1.0) * std::cos(std::numbers::pi * f.geom.x(i));
        worst = std::fmax(worst, std::fabs(f.u[i] - exact));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("radial 3-d ball: fundamental dirichlet mode decays at its rate") {
    // j0(pi r / R) = sin(pi r / R)/(pi r / R) is the fundamental mode with
    // eigenvalue (pi/R)^2; it exercises the full radial stencil and the axis
    // regularization at once.
    const std::size_t n = 401;
    Field f;
    f.geom.radial = true;
    f.geom.dim = 3;
    f.geom.xmin = 0.0;
    f.geom.h = 1.0 / (n - 1);
    f.geom.n = n;
    f.geom.right = BoundaryKind::Dirichlet;
    f.u.resize(n);
    auto j0 = [](double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; };
    for (std::size_t i = 0; i < n; ++i) f.u[i] = j0(std::numbers::pi * f.geom.x(i));
    f.u[n - 1] = 0.0;
    ReactionSpec rs = pure_reaction(0.0, 2.0, 3.0, n);
    rs.d = 1.0 / (std::numbers::pi * std::numbers::pi);
    SolverControls ctl;
    ctl.horizon = 0.5;
    ctl.rtol = 1e-10;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::GlobalUpToHorizon);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::fmax(worst, std::fabs(f.u[i] - std::exp(-0.5) * j0(std::numbers::pi *
                                                                        f.geom.x(i))));
    CHECK(worst < 1e-5);
}

TEST_CASE("radial 3-d ball seeded with the lower solution blows up by -t0") {
    ProblemParams pp;
    pp.p = 2;
    pp.q = 3;
    pp.sigma = 2;
    pp.n = 3;
    const Profile prof = find_profile(pp);
    const auto ls = make_lower_solution(prof, -1.0, 1.0, prof.params.mu, {0, 0, 0});

    const std::size_t n = 201;
    Field f;
    f.geom.radial = true;
    f.geom.dim = 3;
    f.geom.xmin = 0.0;
    f.geom.h = prof.r0 / (n - 1);
    f.geom.n = n;
    f.geom.right = BoundaryKind::Dirichlet;
    f.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.u[i] = prof.value(f.geom.x(i));
    f.u[n - 1] = 0.0;
    ReactionSpec rs = pure_reaction(prof.params.mu, 2.0, 3.0, n);
    rs.d = 1.0;
    for (std::size_t i = 0; i < n; ++i) rs.a[i] = f.geom.x(i) * f.geom.x(i);

    SolverControls ctl;
    ctl.horizon = 1.2;
    Monitors mon;
    mon.comparison = &ls;
    mon.cmp_t0 = -1.0;
    mon.tol_cmp = f.geom.h * f.geom.h;
    const auto res = run(f, rs, ctl, mon);
    REQUIRE(res.status == SimStatus::Blowup);
    CHECK(res.t_star_hat <= 1.05);
    CHECK(res.comparison_ok);
    CHECK(res.min_comparison >= -mon.tol_cmp);
    CHECK(res.blowup_point == 0.0);  // the a(x) zero sits on the axis
}

TEST_CASE("supercritical absorption order: seeded run still blows up by -t0") {
    // sigma = 3 > sigma_crit = 2 exercises the restricted t0 branch and the
    // (-t)-factor surplus in the lower-solution inequality end to end.
    ProblemParams pp;
    pp.p = 2;
    pp.q = 3;
    pp.sigma = 3;
    pp.n = 1;
    const Profile prof = find_profile(pp);
    const auto ls = make_lower_solution(prof, -1.0, 1.0, prof.params.mu, {0, 0, 0});

    const std::size_t n = 151;
    Field f;
    f.geom.radial = true;
    f.geom.dim = 1;
    f.geom.xmin = 0.0;
    f.geom.h = prof.r0 / (n - 1);
    f.geom.n = n;
    f.geom.right = BoundaryKind::Dirichlet;
    f.u.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.u[i] = prof.value(f.geom.x(i));
    f.u[n - 1] = 0.0;
    ReactionSpec rs = pure_reaction(prof.params.mu, 2.0, 3.0, n);
    rs.d = 1.0;
    for (std::size_t i = 0; i < n; ++i) rs.a[i] = std::pow(f.geom.x(i), 3.0);

    SolverControls ctl;
    ctl.horizon = 1.2;
    Monitors mon;
    mon.comparison = &ls;
    mon.cmp_t0 = -1.0;
    mon.tol_cmp = f.geom.h * f.geom.h;
    const auto res = run(f, rs, ctl, mon);
    REQUIRE(res.status == SimStatus::Blowup);
    CHECK(res.t_star_hat <= 1.05);
    CHECK(res.comparison_ok);
}

TEST_CASE("positivity is preserved from nonnegative data") {
    const std::size_t n = 101;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    for (std::size_t i = 0; i < n; ++i)
        f.u[i] = std::fmax(0.0, std::cos(3.0 * std::numbers::pi * f.geom.x(i)));
    ReactionSpec rs = pure_reaction(0.5, 2.0, 3.0, n);
    rs.d = 0.2;
    for (std::size_t i = 0; i < n; ++i) rs.a[i] = 5.0 + 4.0 * std::sin(7.0 * f.geom.x(i));
    SolverControls ctl;
    ctl.horizon = 0.5;
    const auto res = run(f, rs, ctl);
    CHECK(res.positivity_ok);
    CHECK(res.min_u >= -1e-12);
}

TEST_CASE("truncated-cauchy margin stays tiny for a compact seed") {
    const std::size_t n = 401;
    Field f = make_interval_field(n, -8, 8, BoundaryKind::Dirichlet);
    for (std::size_t i = 0; i < n; ++i)
        f.u[i] = 4.0 * std::exp(-std::pow(f.geom.x(i) / 1.5, 2));
    f.u[0] = f.u[n - 1] = 0.0;
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    rs.d = 1.0;
    SolverControls ctl;
    ctl.horizon = 1.0;
    Monitors mon;
    mon.boundary_margin = true;
    const auto res = run(f, rs, ctl, mon);
    REQUIRE(res.status == SimStatus::Blowup);  // wide tall seed: mu u^2 outruns diffusion
    CHECK(res.boundary_margin_max < 1e-6);
}

TEST_CASE("step obeys the stability and reaction caps") {
    const std::size_t n = 101;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.u.assign(n, 100.0);
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    rs.d = 1.0;
    SolverControls ctl;
    ctl.horizon = 1.0;
    RdsStepper st(f, rs, ctl);
    REQUIRE(st.step() == RdsStepper::Status::Ok);
    const double h = f.geom.h;
    CHECK(st.last_dt() <= 0.4 * h * h / 2.0 + 1e-18);
    CHECK(st.last_dt() <= 0.2 / (1.0 + 2.0 * 100.0) + 1e-18);
}

TEST_CASE("synthetic power laws are fitted exactly") {
    SUBCASE("slope -1") {
        std::vector<SampleRow> series;
        const double T = 2.0;
        for (int k = 0; k < 400; ++k) {
            const double t = T - std::pow(10.0, -0.01 * k);
            series.push_back({t, 3.0 / (T - t), 0.0, false, 0.0});
        }
        const auto fit = fit_blowup_rate(series, T);
        REQUIRE(fit.ok);
        CHECK(std::fabs(fit.exponent - (-1.0)) < 1e-6);
    }
    SUBCASE("slope -1/2") {
        std::vector<SampleRow> series;
        const double T = 1.0;
        for (int k = 0; k < 600; ++k) {
            const double t = T - std::pow(10.0, -0.01 * k);
            series.push_back({t, std::pow(T - t, -0.5), 0.0, false, 0.0});
        }
        const auto fit = fit_blowup_rate(series, T);
        REQUIRE(fit.ok);
        CHECK(std::fabs(fit.exponent - (-0.5)) < 1e-6);
    }
    SUBCASE("insufficient span is refused, not silently fitted") {
        std::vector<SampleRow> series;
        for (int k = 0; k < 50; ++k)
            series.push_back({0.01 * k, 1.0 + 0.1 * k, 0.0, false, 0.0});
        const auto fit = fit_blowup_rate(series, 1.0);
        CHECK_FALSE(fit.ok);
        CHECK(!fit.reason.empty());
    }
}

TEST_CASE("t-star extrapolation is exact on the Riccati law") {
    std::vector<SampleRow> series;
    const double T = 0.75;
    for (int k = 0; k < 300; ++k) {
        const double t = T - std::pow(10.0, -0.03 * k);
        if (t < 0) continue;
        series.push_back({t, 1.0 / (T - t), 0.0, false, 0.0});
    }
    const auto fit = extrapolate_t_star(series, 2.0);
    REQUIRE(fit.ok);
    CHECK(std::fabs(fit.t_star - T) < 1e-9);
    CHECK(fit.ci >= 0.0);
}

TEST_CASE("blowup point localization") {
    SimResult res;
    res.status = SimStatus::Blowup;
    const double h = 0.01;
    const std::vector<double> zeros{0.0, 0.5};

    SUBCASE("argmax sitting on a zero passes") {
        for (int k = 0; k < 60; ++k) res.samples.push_back({0.01 * k, 1.0, 0.5, false, 0.0});
        const auto rep = locate_blowup_points(res, zeros, h);
        CHECK(rep.converged);
        CHECK(rep.pass);
        CHECK(rep.nearest_zero == doctest::Approx(0.5));
    }
    SUBCASE("argmax five cells away fails") {
        for (int k = 0; k < 60; ++k) res.samples.push_back({0.01 * k, 1.0, 0.55, false, 0.0});
        const auto rep = locate_blowup_points(res, zeros, h);
        CHECK(rep.converged);
        CHECK_FALSE(rep.pass);
        CHECK(rep.distance_cells == doctest::Approx(5.0));
    }
    SUBCASE("oscillating trace is refused") {
        for (int k = 0; k < 60; ++k)
            res.samples.push_back({0.01 * k, 1.0, k % 2 ? 0.1 : 0.4, false, 0.0});
        const auto rep = locate_blowup_points(res, zeros, h);
        CHECK_FALSE(rep.converged);
        CHECK(!rep.reason.empty());
    }
}

TEST_CASE("zero-node detection on coefficient shapes") {
    SUBCASE("1 - cos(k pi x) has zeros at the even multiples") {
        const std::size_t n = 401;
        kernels::GridGeom g;
        g.xmin = 0;
        g.h = 1.0 / 400;
        g.n = n;
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i)
            a[i] = 1.0 - std::cos(10.0 * std::numbers::pi * g.x(i));
        const auto zeros = find_zero_nodes(a, g);
        REQUIRE(zeros.size() == 6);
        for (std::size_t j = 0; j < 6; ++j) CHECK(zeros[j] == doctest::Approx(0.2 * j));
    }
    SUBCASE("|x|^2 on a ball has the single zero at the axis") {
        const std::size_t n = 101;
        kernels::GridGeom g;
        g.radial = true;
        g.xmin = 0;
        g.h = 0.01;
        g.n = n;
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = g.x(i) * g.x(i);
        const auto zeros = find_zero_nodes(a, g);
        REQUIRE(zeros.size() == 1);
        CHECK(zeros[0] == 0.0);
    }
}

TEST_CASE("two-component: evolved v stays near the stationary eigenmode") {
    const std::size_t n = 201;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.v[i] = 3.0 * std::cos(std::numbers::pi * f.geom.x(i));
        f.u[i] = 0.1;
    }
    ReactionSpec rs;
    rs.two_component = true;
    rs.mu = 1.0;
    rs.p = 2.0;
    rs.q = 3.0;
    rs.d1 = 1.0 / (std::numbers::pi * std::numbers::pi);
    rs.d2 = 0.0;
    rs.m = 3.0;
    rs.sigma_couple = 1.0;
    rs.f.kind = kernels::KineticLaw::Linear;
    rs.f.lambda = 1.0;
    rs.v_stationary = false;
    SolverControls ctl;
    ctl.horizon = 0.3;
    const auto res = run(f, rs, ctl);
    REQUIRE(res.status == SimStatus::GlobalUpToHorizon);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        worst = std::fmax(worst,
                          std::fabs(f.v[i] - 3.0 * std::cos(std::numbers::pi * f.geom.x(i))));
    CHECK(worst < 1e-4);  // O(h^2) eigenvalue drift over a short horizon
}

TEST_CASE("series csv carries the exact header and summary json the digest") {
    const std::size_t n = 11;
    Field f = make_interval_field(n, 0, 1, BoundaryKind::Neumann);
    f.u.assign(n, 1.0);
    ReactionSpec rs = pure_reaction(1.0, 2.0, 3.0, n);
    SolverControls ctl;
    ctl.horizon = 0.1;
    ctl.settings_digest = "deadbeef00000000";
    const auto res = run(f, rs, ctl);
    const std::string path = "/tmp/blowlab_test_series.csv";
    write_series_csv(path, res);
    std::ifstream is(path);
    std::string digest_line, header;
    std::getline(is, digest_line);
    std::getline(is, header);
    CHECK(digest_line == "# scenario_digest: deadbeef00000000");
    CHECK(header == "t,sup_u,argmax_x,min_cmp");
    const std::string sj = summary_json(res);
    CHECK(sj.find("deadbeef00000000") != std::string::npos);
    CHECK(sj.find("GLOBAL_UP_TO_HORIZON") != std::string::npos);
}
