#ifndef EMHD_ODE_HPP
#define EMHD_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "emhd/errors.hpp"

namespace emhd {

// Embedded Dormand-Prince 5(4) pair with the classical quartic dense-output
// interpolant. Coefficients follow Hairer, Norsett & Wanner.
namespace dopri {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
inline constexpr double e1 = b1 - 5179.0 / 57600.0, e3 = b3 - 7571.0 / 16695.0,
                        e4 = b4 - 393.0 / 640.0, e5 = b5 + 92097.0 / 339200.0,
                        e6 = b6 - 187.0 / 2100.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace dopri

template <std::size_t N>
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    std::array<std::array<double, N>, 5> rcont{};

    std::array<double, N> eval(double t) const {
        double th = (t - t0) / h;
        double th1 = 1.0 - th;
        std::array<double, N> y;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = rcont[0][i] +
                   th * (rcont[1][i] +
                         th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
        }
        return y;
    }
};

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    std::size_t max_steps = 200000;
    double h_init = 0.0; // 0 -> automatic
};

// Integrates y' = f(t, y) from t0 to t1 (either direction). If `dense` is
// non-null the accepted steps' interpolants are appended.
template <std::size_t N, typename F>
std::array<double, N> integrate_ode(F&& f, double t0, const std::array<double, N>& y0in,
                                    double t1, const OdeOptions& opt = {},
                                    std::vector<DenseStep<N>>* dense = nullptr) {
    using State = std::array<double, N>;
    if (t1 == t0) return y0in;
    const double dir = (t1 > t0) ? 1.0 : -1.0;
    const double span = std::fabs(t1 - t0);

    State y = y0in;
    double t = t0;
    State k1;
    f(t, y, k1);

    double h = opt.h_init > 0.0 ? opt.h_init : span / 100.0;
    h = std::min(h, span);
    const double hmin = span * 1e-14 + 1e-300;

    std::size_t steps = 0;
    bool last = false;
    while (true) {
        if (std::fabs(t1 - t) <= std::fabs(h)) {
            h = std::fabs(t1 - t);
            last = true;
        }
        if (h < hmin) throw IntegratorFailure("integrate_ode: step size underflow");
        if (++steps > opt.max_steps) throw IntegratorFailure("integrate_ode: step limit exceeded");

        const double hs = dir * h;
        State k2, k3, k4, k5, k6, k7, yt, y1;
        using namespace dopri;
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        f(t + hs * c2, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + hs * c3, yt, k3);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + hs * c4, yt, k4);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + hs * c5, yt, k5);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + hs, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            y1[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t + hs, y1, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double e = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                             e7 * k7[i]);
            double sc = opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
            double q = e / sc;
            err += q * q;
        }
        err = std::sqrt(err / static_cast<double>(N));

        if (err <= 1.0) {
            if (dense) {
                DenseStep<N> st;
                st.t0 = t;
                st.h = hs;
                for (std::size_t i = 0; i < N; ++i) {
                    double dy = y1[i] - y[i];
                    double bspl = hs * k1[i] - dy;
                    st.rcont[0][i] = y[i];
                    st.rcont[1][i] = dy;
                    st.rcont[2][i] = bspl;
                    st.rcont[3][i] = dy - hs * k7[i] - bspl;
                    st.rcont[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                           d6 * k6[i] + d7 * k7[i]);
                }
                dense->push_back(st);
            }
            t += hs;
            y = y1;
            k1 = k7; // FSAL
            if (last) return y;
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h *= std::clamp(fac, 0.2, 5.0);
            h = std::min(h, span);
        } else {
            double fac = 0.9 * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.1, 0.9);
            last = false;
        }
    }
}

// Piecewise dense-output trajectory with binary-search lookup.
template <std::size_t N>
class DenseTrajectory {
public:
    DenseTrajectory() = default;
    explicit DenseTrajectory(std::vector<DenseStep<N>> steps) : steps_(std::move(steps)) {}

    bool empty() const { return steps_.empty(); }
    double t_begin() const { return steps_.front().t0; }
    double t_end() const { return steps_.back().t0 + steps_.back().h; }

    std::array<double, N> eval(double t) const {
        // steps are monotone in t (single integration direction)
        std::size_t lo = 0, hi = steps_.size() - 1;
        const bool fwd = steps_.front().h > 0.0;
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            double tend = steps_[mid].t0 + steps_[mid].h;
            bool before = fwd ? (t > tend) : (t < tend);
            if (before)
                lo = mid + 1;
            else
                hi = mid;
        }
        return steps_[lo].eval(t);
    }

private:
    std::vector<DenseStep<N>> steps_;
};

} // namespace emhd

#endif
