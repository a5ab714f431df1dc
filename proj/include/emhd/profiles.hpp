#ifndef EMHD_PROFILES_HPP
#define EMHD_PROFILES_HPP

#include <cmath>
#include <string>

#include "emhd/errors.hpp"
#include "emhd/expr.hpp"
#include "emhd/rng.hpp"

namespace emhd {

enum class ScheduleMode { ExactLog, Tempered };
enum class Family { Hyperbolic, Shear };

struct Params {
    double lambda = 100.0; // base frequency (lambda or lambda_0)
    double gamma = -1.0;
    double gamma1 = 0.6;
    double gamma2 = 0.6;
    double eps = 0.1;
    double shear_base = 2.0;    // b, shear exact-log schedule
    ScheduleMode mode = ScheduleMode::Tempered;
    double tempered_ratio = 8.0; // rho
    bool mollified_ramp = false;

    void validate() const {
        if (!(lambda > 1.0)) throw InvalidParams("lambda must be > 1");
        if (!(gamma2 > 0.5)) throw InvalidParams("gamma2 must satisfy gamma2 > 1/2");
        if (!(gamma1 > 0.5)) throw InvalidParams("gamma1 must satisfy gamma1 > 1/2");
        if (!(eps > 0.0 && eps < 0.5)) throw InvalidParams("eps must lie in (0, 1/2)");
        if (!(shear_base > 1.0)) throw InvalidParams("shear_base must be > 1");
        if (!(tempered_ratio > 1.0)) throw InvalidParams("tempered_ratio must be > 1");
    }

    // reported constraint from the construction: 2*gamma1 >= gamma2 - eps
    bool gamma_constraint_ok() const { return 2.0 * gamma1 >= gamma2 - eps; }
    // plateau reachability: the sine peak pi/(2 lambda) sits on the cutoff plateau
    bool plateau_ok() const { return std::pow(lambda, gamma1) * M_PI / (2.0 * lambda) <= 0.5; }
};

struct ProfileBundle {
    VectorExpr B;    // magnetic field (0,0,B^3)
    VectorExpr J;    // current density, curl B
    VectorExpr Jbar; // modified current (axis-linearized in x)
    ScalarExpr alpha; // Jbar^1 = x * alpha(y,t)
    ScalarExpr beta;  // Jbar^2 = beta(y,t)
    double lambda = 0.0;
};

// Modified current of a horizontal-curl field V with V^3 = 0:
// (x d_x V^1(0,y,0,t), V^2(0,y,0,t), 0). Divergence-free whenever V is.
inline VectorExpr modified_current(const VectorExpr& V) {
    return vec(coord(Axis::X) * pin_xz(partial(V[0], Axis::X)), pin_xz(V[1]), constant(0.0));
}

// Stationary profile with a hyperbolic current flow near the origin:
// B^3 = -l^g sin(lx) f(l^{g1} x) sin(ly) f(l^{g2} y)
inline ProfileBundle build_hyperbolic_profile(const Params& p) {
    p.validate();
    const double l = p.lambda;
    ScalarExpr X = coord(Axis::X), Y = coord(Axis::Y);
    ScalarExpr b3 = constant(-std::pow(l, p.gamma)) * sin_of(constant(l) * X) *
                    cutoff_of(constant(std::pow(l, p.gamma1)) * X) * sin_of(constant(l) * Y) *
                    cutoff_of(constant(std::pow(l, p.gamma2)) * Y);
    ProfileBundle out;
    out.lambda = l;
    out.B = vec(constant(0.0), constant(0.0), b3);
    out.J = curl(out.B);
    out.Jbar = modified_current(out.J);
    out.alpha = pin_xz(partial(out.J[0], Axis::X));
    out.beta = pin_xz(out.J[1]);
    return out;
}

// Closed-form modified current of the hyperbolic profile, written out
// explicitly; used to cross-check the generic modified_current route.
inline VectorExpr hyperbolic_jbar_closed_form(const Params& p) {
    const double l = p.lambda;
    ScalarExpr X = coord(Axis::X), Y = coord(Axis::Y);
    ScalarExpr fy = cutoff_of(constant(std::pow(l, p.gamma2)) * Y);
    ScalarExpr fpy = cutoff_deriv_of(constant(std::pow(l, p.gamma2)) * Y, 1);
    ScalarExpr j1 = X * (constant(-std::pow(l, 2.0 + p.gamma)) * cos_of(constant(l) * Y) * fy +
                         constant(-std::pow(l, 1.0 + p.gamma + p.gamma2)) *
                             sin_of(constant(l) * Y) * fpy);
    ScalarExpr j2 = constant(std::pow(l, 1.0 + p.gamma)) * sin_of(constant(l) * Y) * fy;
    return vec(j1, j2, constant(0.0));
}

// Stage-q frequency of the shear family.
inline double shear_lambda(const Params& p, int q) {
    if (p.mode == ScheduleMode::Tempered)
        return p.lambda * std::pow(p.tempered_ratio, q);
    double loglam = std::pow(p.shear_base, q) * std::log(p.lambda);
    if (loglam > 690.0)
        throw OverflowError("shear_lambda: exact-log frequency exceeds numeric range");
    return std::exp(loglam);
}

// Shear profile B = (0,0,B^3(x)) with B^3 = -l_q^g sin(l_q x) f(l_q^{1/2} x).
// Its current is a pure shear (0, -d_x B^3, 0) and the Hall term vanishes.
inline ProfileBundle build_shear_profile(const Params& p, int q = 0) {
    p.validate();
    const double lq = shear_lambda(p, q);
    ScalarExpr X = coord(Axis::X);
    ScalarExpr b3 = constant(-std::pow(lq, p.gamma)) * sin_of(constant(lq) * X) *
                    cutoff_of(constant(std::pow(lq, 0.5)) * X);
    ProfileBundle out;
    out.lambda = lq;
    out.B = vec(constant(0.0), constant(0.0), b3);
    out.J = curl(out.B);
    out.Jbar = out.J; // no modification needed: the shear current is already exact
    out.alpha = constant(0.0);
    out.beta = pin_xz(out.J[1]);
    return out;
}

struct HyperbolicityReport {
    double max_ratio = 0.0; // max |J - l^{2+g}(-x,y,0)| / (l^{2+g} r)
    double bound = 0.0;     // 5 (l r)^2
    bool regime_ok = false; // r << 1/lambda
    bool pass = false;
    int samples = 0;
};

// Measures how close the current is to the hyperbolic flow l^{2+g}(-x,y,0)
// on a disk of radius r around the origin.
inline HyperbolicityReport hyperbolicity_report(const ProfileBundle& bundle, const Params& p,
                                                double r, int n_samples = 200,
                                                std::uint64_t seed = 42) {
    HyperbolicityReport rep;
    const double c = std::pow(p.lambda, 2.0 + p.gamma);
    rep.bound = 5.0 * (p.lambda * r) * (p.lambda * r);
    rep.regime_ok = p.lambda * r <= 0.1;
    CounterRng rng(seed, 31);
    EvalCache ws;
    for (int i = 0; i < n_samples; ++i) {
        double rho = r * std::sqrt(rng.uniform(2 * static_cast<std::uint64_t>(i)));
        double th = 2.0 * M_PI * rng.uniform(2 * static_cast<std::uint64_t>(i) + 1);
        Point q{rho * std::cos(th), rho * std::sin(th), 0.0, 0.0};
        ws.clear();
        Vec3 J = bundle.J.eval(q, ws);
        Vec3 hyp{-c * q.x, c * q.y, 0.0};
        rep.max_ratio = std::max(rep.max_ratio, norm_inf(J - hyp) / (c * r));
        ++rep.samples;
    }
    rep.pass = rep.regime_ok && rep.max_ratio <= rep.bound;
    return rep;
}

inline const char* to_string(Family f) { return f == Family::Hyperbolic ? "hyperbolic" : "shear"; }
inline const char* to_string(ScheduleMode m) {
    return m == ScheduleMode::ExactLog ? "exact-log" : "tempered";
}

} // namespace emhd

#endif
