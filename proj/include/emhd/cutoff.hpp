#ifndef EMHD_CUTOFF_HPP
#define EMHD_CUTOFF_HPP

#include <cmath>

#include "emhd/errors.hpp"
#include "emhd/jet.hpp"

namespace emhd {

// Smooth even cutoff: f(x) = 1 on |x| <= 1/2, f(x) = 0 on |x| >= 1,
// C^inf transition f(x) = h(2(1-|x|)) with
//   h(s) = psi(s) / (psi(s) + psi(1-s)),  psi(s) = exp(-1/s) (s > 0, else 0).
// At the plateau boundaries |x| in {1/2, 1} the one-sided plateau values
// are returned; all derivatives vanish there from both sides.
namespace cutoff_detail {

constexpr std::size_t kMaxOrder = 8;

inline Jet<kMaxOrder> psi(const Jet<kMaxOrder>& s) {
    // exp(-1/s); caller guarantees s.a[0] > 0.
    auto minus_inv = -1.0 * jet_recip(s);
    return jet_exp(minus_inv);
}

inline Jet<kMaxOrder> transition(double x_abs, double sign_x) {
    // u = 2(1-|x|) as a jet in x
    auto u = Jet<kMaxOrder>::constant(2.0 * (1.0 - x_abs));
    u.a[1] = -2.0 * sign_x;
    auto one_minus_u = Jet<kMaxOrder>::constant(1.0) - u;
    auto pu = psi(u);
    auto pv = psi(one_minus_u);
    return pu * jet_recip(pu + pv);
}

} // namespace cutoff_detail

inline double cutoff_eval(double x) {
    double ax = std::fabs(x);
    if (ax <= 0.5) return 1.0;
    if (ax >= 1.0) return 0.0;
    double s = 2.0 * (1.0 - ax);
    double ps = std::exp(-1.0 / s);
    double pq = std::exp(-1.0 / (1.0 - s));
    return ps / (ps + pq);
}

// k-th derivative of f, 1 <= k <= kMaxOrder. Zero on both plateaus.
inline double cutoff_deriv(double x, std::size_t k) {
    if (k == 0) return cutoff_eval(x);
    if (k > cutoff_detail::kMaxOrder)
        throw UnsupportedOrder("cutoff_deriv: order above jet cap");
    double ax = std::fabs(x);
    if (ax <= 0.5 || ax >= 1.0) return 0.0;
    double sign = (x > 0.0) ? 1.0 : -1.0;
    auto h = cutoff_detail::transition(ax, sign);
    return h.deriv(k);
}

} // namespace emhd

#endif
