#ifndef EMHD_QUADRATURE_HPP
#define EMHD_QUADRATURE_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "emhd/errors.hpp"

namespace emhd {

namespace gk {

// Gauss 7 / Kronrod 15 nodes and weights on [-1,1] (positive half).
inline constexpr double xk[8] = {0.0,
                                 0.2077849550078985,
                                 0.4058451513773972,
                                 0.5860872354676911,
                                 0.7415311855993944,
                                 0.8648644233597691,
                                 0.9491079123427585,
                                 0.9914553711208126};
inline constexpr double wk[8] = {0.2094821410847278, 0.2044329400752989, 0.1903505780647854,
                                 0.1690047266392679, 0.1406532597155259, 0.1047900103222502,
                                 0.0630920926299786, 0.0229353220105292};
// Gauss-7 weights matched to xk[0], xk[2], xk[4], xk[6].
inline constexpr double wg[4] = {0.4179591836734694, 0.3818300505051189, 0.2797053914892767,
                                 0.1294849661688697};

template <typename F>
void g7k15(F&& f, double a, double b, double& kronrod, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fc = f(c);
    double resk = wk[0] * fc;
    double resg = wg[0] * fc;
    for (int i = 1; i < 8; ++i) {
        double fv = f(c - h * xk[i]) + f(c + h * xk[i]);
        resk += wk[i] * fv;
        if (i % 2 == 0) resg += wg[i / 2] * fv;
    }
    kronrod = resk * h;
    err = std::fabs((resk - resg) * h);
}

} // namespace gk

struct QuadOptions {
    double rtol = 1e-8;
    double atol = 1e-300;
    std::size_t max_intervals = 20000;
};

// Adaptive bisection driven by the Kronrod-Gauss error estimate.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, const QuadOptions& opt = {}) {
    if (a == b) return 0.0;

    struct Seg {
        double a, b, val, err;
    };
    std::vector<Seg> segs;
    double v0, e0;
    gk::g7k15(f, a, b, v0, e0);
    segs.push_back({a, b, v0, e0});

    auto total = [&segs] {
        double v = 0.0, e = 0.0;
        for (const auto& s : segs) {
            v += s.val;
            e += s.err;
        }
        return std::pair<double, double>(v, e);
    };

    while (true) {
        auto [value, err] = total();
        double tol = std::max(opt.atol, opt.rtol * std::fabs(value));
        if (err <= tol) return value;
        if (segs.size() >= opt.max_intervals)
            throw QuadratureFailure("integrate_adaptive: interval budget exhausted");
        // split the worst segment
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].err > segs[worst].err) worst = i;
        Seg s = segs[worst];
        double m = 0.5 * (s.a + s.b);
        if (m == s.a || m == s.b)
            throw QuadratureFailure("integrate_adaptive: interval underflow");
        Seg l, r;
        l.a = s.a;
        l.b = m;
        r.a = m;
        r.b = s.b;
        gk::g7k15(f, l.a, l.b, l.val, l.err);
        gk::g7k15(f, r.a, r.b, r.val, r.err);
        segs[worst] = l;
        segs.push_back(r);
    }
}

} // namespace emhd

#endif
