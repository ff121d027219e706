#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "blowlab/parallel.hpp"

namespace blowlab::kernels {

using par::ExecPolicy;

enum class BoundaryKind { Neumann, Dirichlet };

// Uniform 1-D grid: an interval [xmin, xmin + (n-1)h], or a radial ball
// [0, R] of dimension `dim` (node 0 is the symmetry axis).
struct GridGeom {
    bool radial = false;
    int dim = 1;
    double xmin = 0.0;
    double h = 0.0;
    std::size_t n = 0;
    BoundaryKind left = BoundaryKind::Neumann;   // ignored for radial grids
    BoundaryKind right = BoundaryKind::Neumann;

    double x(std::size_t i) const { return xmin + static_cast<double>(i) * h; }
};

// x^e with fast paths for the small integer exponents that dominate here.
// The fast path agrees with std::pow to ~1 ulp.
inline double pow_fast(double x, double e) {
    if (e == 2.0) return x * x;
    if (e == 3.0) return x * x * x;
    if (e == 1.0) return x;
    if (e == 4.0) {
        const double s = x * x;
        return s * s;
    }
    return std::pow(x, e);
}

// out = diff*Lap(u) + mu*max(u,0)^p - a*max(u,0)^q; Dirichlet rows are pinned
// (rhs 0). Neumann uses reflected ghosts; the radial axis uses the
// 2*dim*(u1-u0)/h^2 regularization.
void reaction_diffusion_rhs(const GridGeom& g, double diff, double mu, double p, double q,
                            std::span<const double> a, std::span<const double> u,
                            std::span<double> out, const ExecPolicy& pol);

// Scalar kinetic law f(v) for the uncoupled component of two-component runs.
// Built-ins cover the linear and logistic laws; arbitrary laws are accepted
// as a tabulated univariate function (piecewise linear, clamped ends).
struct KineticLaw {
    enum Kind { Zero, Linear, Logistic, Tabulated } kind = Zero;
    double lambda = 0.0;
    double h0 = 0.0;
    double l = 2.0;
    std::vector<std::array<double, 2>> table;  // (v, f(v)) sorted by v

    double operator()(double v) const {
        switch (kind) {
            case Zero: return 0.0;
            case Linear: return lambda * v;
            case Logistic: return lambda * v - h0 * pow_fast(v, l);
            case Tabulated: return eval_table(v);
        }
        return 0.0;
    }

    double eval_table(double v) const {
        if (table.empty()) return 0.0;
        if (v <= table.front()[0]) return table.front()[1];
        if (v >= table.back()[0]) return table.back()[1];
        std::size_t lo = 0, hi = table.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (table[mid][0] <= v)
                lo = mid;
            else
                hi = mid;
        }
        const double t = (v - table[lo][0]) / (table[hi][0] - table[lo][0]);
        return table[lo][1] * (1.0 - t) + table[hi][1] * t;
    }
};

// out = diff*Lap(v) + f(v); same boundary handling as above.
void linear_reaction_rhs(const GridGeom& g, double diff, const KineticLaw& f,
                         std::span<const double> v, std::span<double> out, const ExecPolicy& pol);

// a[i] = |m - v[i]|^sigma
void coupling_absorption(double m, double sigma, std::span<const double> v, std::span<double> a,
                         const ExecPolicy& pol);

// out = base + c*k
void saxpy(std::span<double> out, std::span<const double> base, double c,
           std::span<const double> k, const ExecPolicy& pol);

// out = base + c1*k1 + c2*k2 + c3*k3
void stage_combine3(std::span<double> out, std::span<const double> base, double c1,
                    std::span<const double> k1, double c2, std::span<const double> k2, double c3,
                    std::span<const double> k3, const ExecPolicy& pol);

struct MaxLoc {
    double value;
    std::size_t index;
};

// Largest value; ties resolved to the lowest index (deterministic for any
// thread count: fixed blocks combined in index order).
MaxLoc max_value_loc(std::span<const double> u, const ExecPolicy& pol);

double min_value(std::span<const double> u, const ExecPolicy& pol);

// min over i of (u[i] - v[i])
double min_diff(std::span<const double> u, std::span<const double> v, const ExecPolicy& pol);

// Fixed-block compensated-order sum: bit-identical for any thread count.
double blocked_sum(std::span<const double> u, const ExecPolicy& pol);

// max_i |e1*k1 + e2*k2 + e3*k3 + e4*k4|_i / (atol + rtol*max(|u|,|u_new|)_i)
double embedded_error_norm(std::span<const double> u, std::span<const double> u_new, double dt,
                           double e1, std::span<const double> k1, double e2,
                           std::span<const double> k2, double e3, std::span<const double> k3,
                           double e4, std::span<const double> k4, double atol, double rtol,
                           const ExecPolicy& pol);

// Plain-loop reference implementations, kept for correctness tests and the
// serial-vs-parallel benchmark. Must produce bit-identical results.
namespace serial {

void reaction_diffusion_rhs(const GridGeom& g, double diff, double mu, double p, double q,
                            std::span<const double> a, std::span<const double> u,
                            std::span<double> out);
MaxLoc max_value_loc(std::span<const double> u);
double min_diff(std::span<const double> u, std::span<const double> v);
double blocked_sum(std::span<const double> u);

}  // namespace serial

}  // namespace blowlab::kernels
