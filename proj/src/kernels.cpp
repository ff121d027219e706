#include "blowlab/kernels.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace blowlab::kernels {

namespace {

// Discrete Laplacian row i. Dirichlet boundary rows are handled by the caller
// (pinned); this assumes 0 < i < n-1, or i at a Neumann/axis end.
inline double lap_row(const GridGeom& g, std::span<const double> u, std::size_t i) {
    const double h2 = g.h * g.h;
    const std::size_t last = g.n - 1;
    if (g.radial) {
        if (i == 0) return 2.0 * g.dim * (u[1] - u[0]) / h2;
        const double um = u[i - 1];
        const double up = i == last ? u[last - 1] : u[i + 1];  // Neumann reflection at R
        const double second = (um - 2.0 * u[i] + up) / h2;
        const double first = (up - um) / (2.0 * g.h);
        return second + (g.dim - 1.0) / g.x(i) * first;
    }
    const double um = i == 0 ? u[1] : u[i - 1];
    const double up = i == last ? u[last - 1] : u[i + 1];
    return (um - 2.0 * u[i] + up) / h2;
}

inline bool pinned(const GridGeom& g, std::size_t i) {
    const std::size_t last = g.n - 1;
    if (g.radial) return i == last && g.right == BoundaryKind::Dirichlet;
    return (i == 0 && g.left == BoundaryKind::Dirichlet) ||
           (i == last && g.right == BoundaryKind::Dirichlet);
}

}  // namespace

void reaction_diffusion_rhs(const GridGeom& g, double diff, double mu, double p, double q,
                            std::span<const double> a, std::span<const double> u,
                            std::span<double> out, const ExecPolicy& pol) {
    par::parallel_for(g.n, pol, [&](std::size_t i) {
        if (pinned(g, i)) {
            out[i] = 0.0;
            return;
        }
        const double upos = std::fmax(u[i], 0.0);
        out[i] = diff * lap_row(g, u, i) + mu * pow_fast(upos, p) - a[i] * pow_fast(upos, q);
    });
}

void linear_reaction_rhs(const GridGeom& g, double diff, const KineticLaw& f,
                         std::span<const double> v, std::span<double> out, const ExecPolicy& pol) {
    par::parallel_for(g.n, pol, [&](std::size_t i) {
        if (pinned(g, i)) {
            out[i] = 0.0;
            return;
        }
        out[i] = diff * lap_row(g, v, i) + f(v[i]);
    });
}

void coupling_absorption(double m, double sigma, std::span<const double> v, std::span<double> a,
                         const ExecPolicy& pol) {
    par::parallel_for(v.size(), pol,
                      [&](std::size_t i) { a[i] = pow_fast(std::fabs(m - v[i]), sigma); });
}

void saxpy(std::span<double> out, std::span<const double> base, double c,
           std::span<const double> k, const ExecPolicy& pol) {
    par::parallel_for(out.size(), pol, [&](std::size_t i) { out[i] = base[i] + c * k[i]; });
}

void stage_combine3(std::span<double> out, std::span<const double> base, double c1,
                    std::span<const double> k1, double c2, std::span<const double> k2, double c3,
                    std::span<const double> k3, const ExecPolicy& pol) {
    par::parallel_for(out.size(), pol, [&](std::size_t i) {
        out[i] = base[i] + c1 * k1[i] + c2 * k2[i] + c3 * k3[i];
    });
}

MaxLoc max_value_loc(std::span<const double> u, const ExecPolicy& pol) {
    const std::size_t nb = par::num_blocks(u.size());
    std::vector<MaxLoc> partial(nb, {-std::numeric_limits<double>::infinity(), 0});
    par::for_each_block(u.size(), pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        MaxLoc best{-std::numeric_limits<double>::infinity(), lo};
        for (std::size_t i = lo; i < hi; ++i)
            if (u[i] > best.value) best = {u[i], i};
        partial[b] = best;
    });
    MaxLoc best{-std::numeric_limits<double>::infinity(), 0};
    for (const auto& c : partial)
        if (c.value > best.value) best = c;  // strict '>': lowest index wins ties
    return best;
}

double min_value(std::span<const double> u, const ExecPolicy& pol) {
    const std::size_t nb = par::num_blocks(u.size());
    std::vector<double> partial(nb, std::numeric_limits<double>::infinity());
    par::for_each_block(u.size(), pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) m = std::fmin(m, u[i]);
        partial[b] = m;
    });
    double m = std::numeric_limits<double>::infinity();
    for (double c : partial) m = std::fmin(m, c);
    return m;
}

double min_diff(std::span<const double> u, std::span<const double> v, const ExecPolicy& pol) {
    const std::size_t nb = par::num_blocks(u.size());
    std::vector<double> partial(nb, std::numeric_limits<double>::infinity());
    par::for_each_block(u.size(), pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = lo; i < hi; ++i) m = std::fmin(m, u[i] - v[i]);
        partial[b] = m;
    });
    double m = std::numeric_limits<double>::infinity();
    for (double c : partial) m = std::fmin(m, c);
    return m;
}

double blocked_sum(std::span<const double> u, const ExecPolicy& pol) {
    const std::size_t nb = par::num_blocks(u.size());
    std::vector<double> partial(nb, 0.0);
    par::for_each_block(u.size(), pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += u[i];
        partial[b] = s;
    });
    double s = 0.0;
    for (double c : partial) s += c;
    return s;
}

double embedded_error_norm(std::span<const double> u, std::span<const double> u_new, double dt,
                           double e1, std::span<const double> k1, double e2,
                           std::span<const double> k2, double e3, std::span<const double> k3,
                           double e4, std::span<const double> k4, double atol, double rtol,
                           const ExecPolicy& pol) {
    const std::size_t nb = par::num_blocks(u.size());
    std::vector<double> partial(nb, 0.0);
    par::for_each_block(u.size(), pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double m = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double err =
                std::fabs(dt * (e1 * k1[i] + e2 * k2[i] + e3 * k3[i] + e4 * k4[i]));
            const double sc = atol + rtol * std::fmax(std::fabs(u[i]), std::fabs(u_new[i]));
            m = std::fmax(m, err / sc);
        }
        partial[b] = m;
    });
    double m = 0.0;
    for (double c : partial) m = std::fmax(m, c);
    return m;
}

namespace serial {

void reaction_diffusion_rhs(const GridGeom& g, double diff, double mu, double p, double q,
                            std::span<const double> a, std::span<const double> u,
                            std::span<double> out) {
    const double h2 = g.h * g.h;
    const std::size_t last = g.n - 1;
    for (std::size_t i = 0; i < g.n; ++i) {
        double lap;
        if (g.radial) {
            if (i == 0) {
                lap = 2.0 * g.dim * (u[1] - u[0]) / h2;
            } else {
                const double um = u[i - 1];
                const double up = i == last ? u[last - 1] : u[i + 1];
                const double second = (um - 2.0 * u[i] + up) / h2;
                const double first = (up - um) / (2.0 * g.h);
                lap = second + (g.dim - 1.0) / g.x(i) * first;
            }
            if (i == last && g.right == BoundaryKind::Dirichlet) {
                out[i] = 0.0;
                continue;
            }
        } else {
            if ((i == 0 && g.left == BoundaryKind::Dirichlet) ||
                (i == last && g.right == BoundaryKind::Dirichlet)) {
                out[i] = 0.0;
                continue;
            }
            const double um = i == 0 ? u[1] : u[i - 1];
            const double up = i == last ? u[last - 1] : u[i + 1];
            lap = (um - 2.0 * u[i] + up) / h2;
        }
        const double upos = std::fmax(u[i], 0.0);
        out[i] = diff * lap + mu * pow_fast(upos, p) - a[i] * pow_fast(upos, q);
    }
}

MaxLoc max_value_loc(std::span<const double> u) {
    MaxLoc best{-std::numeric_limits<double>::infinity(), 0};
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] > best.value) best = {u[i], i};
    return best;
}

double min_diff(std::span<const double> u, std::span<const double> v) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) m = std::fmin(m, u[i] - v[i]);
    return m;
}

double blocked_sum(std::span<const double> u) {
    // same fixed-block order as the parallel kernel
    double total = 0.0;
    for (std::size_t lo = 0; lo < u.size(); lo += par::kReduceBlock) {
        const std::size_t hi = std::min(lo + par::kReduceBlock, u.size());
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += u[i];
        total += s;
    }
    return total;
}

}  // namespace serial

}  // namespace blowlab::kernels
