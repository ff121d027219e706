#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace blowlab::ode {

enum class StepStatus { Ok, Underflow, NonFinite };

struct StepControls {
    double rtol = 1e-10;
    double atol = 1e-13;
    double h_init = 1e-4;
    double h_min = 1e-14;
    double h_max = 0.25;
    double safety = 0.9;
};

// Dormand-Prince 5(4) embedded pair for small dense systems. The caller owns
// the loop: try_step() advances (t, y) by one accepted step or reports why it
// could not. State is a fixed-size array so shooting (2) and kinetics (2)
// stay allocation-free.
template <std::size_t N, typename RHS>
class Dopri5 {
public:
    using State = std::array<double, N>;

    Dopri5(RHS rhs, State y0, double t0, StepControls ctl)
        : rhs_(rhs), y_(y0), t_(t0), ctl_(ctl), h_(ctl.h_init) {}

    double t() const { return t_; }
    const State& y() const { return y_; }
    double h() const { return h_; }
    void set_h(double h) { h_ = h; }
    void set_state(double t, const State& y) { t_ = t; y_ = y; }

    // Advances by at most h_cap; never steps past t_end.
    StepStatus try_step(double t_end) {
        // roundoff sliver left at the endpoint: snap instead of underflowing
        if (t_end - t_ <= ctl_.h_min) {
            t_ = t_end;
            return StepStatus::Ok;
        }
        while (true) {
            double h = std::fmin(h_, ctl_.h_max);
            if (t_ + h > t_end) h = t_end - t_;
            if (h < ctl_.h_min) return StepStatus::Underflow;

            State y5, y4;
            if (!step_once(t_, y_, h, y5, y4)) return StepStatus::NonFinite;

            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double sc = ctl_.atol + ctl_.rtol * std::fmax(std::fabs(y_[i]), std::fabs(y5[i]));
                err = std::fmax(err, std::fabs(y5[i] - y4[i]) / sc);
            }
            if (!std::isfinite(err)) return StepStatus::NonFinite;

            const double fac = err > 0.0 ? ctl_.safety * std::pow(err, -0.2) : 5.0;
            const double hn = h * std::fmin(5.0, std::fmax(0.2, fac));
            if (err <= 1.0) {
                last_h_ = h;
                t_ += h;
                y_ = y5;
                h_ = hn;
                return StepStatus::Ok;
            }
            h_ = hn;
            if (h_ < ctl_.h_min) return StepStatus::Underflow;
        }
    }

    double last_accepted_h() const { return last_h_; }

    // Single fixed-size step of the 5th-order formula, no error control.
    // Used for event refinement from a frozen pre-step state.
    bool step5(double t0, const State& y0, double h, State& out) const {
        State dummy;
        return step_once(t0, y0, h, out, dummy);
    }

private:
    bool step_once(double t0, const State& y0, double h, State& y5, State& y4) const {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                                e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

        State k1, k2, k3, k4, k5, k6, k7, tmp;
        rhs_(t0, y0, k1);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + h * a21 * k1[i];
        rhs_(t0 + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y0[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs_(t0 + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y0[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs_(t0 + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y0[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs_(t0 + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y0[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs_(t0 + h, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            y5[i] = y0[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs_(t0 + h, y5, k7);
        for (std::size_t i = 0; i < N; ++i)
            y4[i] = y0[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                 e7 * k7[i]);
        for (std::size_t i = 0; i < N; ++i)
            if (!std::isfinite(y5[i])) return false;
        return true;
    }

    RHS rhs_;
    State y_;
    double t_;
    StepControls ctl_;
    double h_;
    double last_h_ = 0.0;
};

}  // namespace blowlab::ode
