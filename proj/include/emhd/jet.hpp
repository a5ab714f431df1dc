#ifndef EMHD_JET_HPP
#define EMHD_JET_HPP

#include <array>
#include <cmath>
#include <cstddef>

namespace emhd {

// Truncated univariate Taylor series a[k] = f^(k)(x0)/k!. Supports the
// operations needed to differentiate exp(-1/s)-style bump functions to
// arbitrary (capped) order without finite differences.
template <std::size_t N>
struct Jet {
    std::array<double, N + 1> a{};

    static Jet constant(double c) {
        Jet j;
        j.a[0] = c;
        return j;
    }
    static Jet variable(double x0) {
        Jet j;
        j.a[0] = x0;
        if constexpr (N >= 1) j.a[1] = 1.0;
        return j;
    }

    double deriv(std::size_t k) const {
        double fact = 1.0;
        for (std::size_t i = 2; i <= k; ++i) fact *= static_cast<double>(i);
        return a[k] * fact;
    }

    friend Jet operator+(const Jet& u, const Jet& v) {
        Jet r;
        for (std::size_t k = 0; k <= N; ++k) r.a[k] = u.a[k] + v.a[k];
        return r;
    }
    friend Jet operator-(const Jet& u, const Jet& v) {
        Jet r;
        for (std::size_t k = 0; k <= N; ++k) r.a[k] = u.a[k] - v.a[k];
        return r;
    }
    friend Jet operator*(const Jet& u, const Jet& v) {
        Jet r;
        for (std::size_t k = 0; k <= N; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j <= k; ++j) s += u.a[j] * v.a[k - j];
            r.a[k] = s;
        }
        return r;
    }
    friend Jet operator*(double c, const Jet& u) {
        Jet r;
        for (std::size_t k = 0; k <= N; ++k) r.a[k] = c * u.a[k];
        return r;
    }
};

// 1/u, requires u.a[0] != 0.
template <std::size_t N>
Jet<N> jet_recip(const Jet<N>& u) {
    Jet<N> r;
    r.a[0] = 1.0 / u.a[0];
    for (std::size_t k = 1; k <= N; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += u.a[j] * r.a[k - j];
        r.a[k] = -s / u.a[0];
    }
    return r;
}

// exp(u) via the standard recurrence g' = u' g.
template <std::size_t N>
Jet<N> jet_exp(const Jet<N>& u) {
    Jet<N> g;
    g.a[0] = std::exp(u.a[0]);
    for (std::size_t k = 1; k <= N; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j)
            s += static_cast<double>(j) * u.a[j] * g.a[k - j];
        g.a[k] = s / static_cast<double>(k);
    }
    return g;
}

} // namespace emhd

#endif
