#ifndef EMHD_FLOWMAP_HPP
#define EMHD_FLOWMAP_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "emhd/expr.hpp"
#include "emhd/ode.hpp"
#include "emhd/rng.hpp"

namespace emhd {

// Characteristic flow of a drift V = (x*alpha(y,t), beta(y,t), 0):
//   d phi/ds = -V(phi, s),  phi(.,t0,t0) = id.
// The first component is exactly x * exp(Lam) with Lam' = -alpha along the
// y-characteristic, so the integrated state is (v, Lam, mu, Gam):
//   v   = phi^2,          v' = -beta(v,s)
//   Lam = log(phi^1/x),   Lam' = -alpha(v,s)
//   mu  = log d_y phi^2,  mu' = -beta_y(v,s)
//   Gam = d_y Lam,        Gam' = -alpha_y(v,s) exp(mu)
// Every drift in the construction has this form; the third component is
// trivial (phi^3 = z).
class FlowMap final : public FlowField {
public:
    struct Options {
        double rtol = 1e-10;
        double atol = 1e-13;
        double fd_scale = 0.01;        // y extent used for FD second derivatives
        double fd_rel = 1e-5;          // h = fd_rel * fd_scale
        std::vector<double> break_times; // drift kink times (temporal cutoffs)
        double t_freeze = 0.0;         // drift vanishes for t below this
    };

    FlowMap(ScalarExpr alpha, ScalarExpr beta, Options opt = {})
        : alpha_(std::move(alpha)),
          beta_(std::move(beta)),
          alpha_y_(partial(alpha_, Axis::Y)),
          beta_y_(partial(beta_, Axis::Y)),
          opt_(std::move(opt)) {}

    const Options& options() const { return opt_; }

    // ---- FlowField interface ----

    FlowData flow_to_one(double y, double t, EvalCache& ws, bool via_table) const override {
        check_time(t);
        EvalCache::Key key{this, y, t, via_table ? 1 : 0};
        auto it = ws.flow.find(key);
        if (it != ws.flow.end()) return it->second;
        FlowData d = (via_table && table_) ? table_query(y, t) : direct_query(y, t, 1.0);
        ws.flow.emplace(key, d);
        return d;
    }

    FlowSecond flow_second(double y, double t, EvalCache& ws, bool via_table) const override {
        check_time(t);
        EvalCache::Key key{this, y, t, via_table ? 1 : 0};
        auto it = ws.second.find(key);
        if (it != ws.second.end()) return it->second;

        const double h = opt_.fd_rel * opt_.fd_scale;
        auto probe = [&](double yy) { return flow_to_one(yy, t, ws, via_table); };
        auto diff = [&](double hh) {
            FlowData dp = probe(y + hh), dm = probe(y - hh);
            return FlowSecond{(dp.m - dm.m) / (2.0 * hh), (dp.G - dm.G) / (2.0 * hh)};
        };
        FlowSecond d1 = diff(h), d2 = diff(0.5 * h);
        FlowSecond r{(4.0 * d2.m_y - d1.m_y) / 3.0, (4.0 * d2.G_y - d1.G_y) / 3.0};

        FlowData base = probe(y);
        double noise = 8.0 * (opt_.atol + opt_.rtol * (1.0 + std::fabs(base.m) + std::fabs(base.G))) / h;
        auto check = [&](double a, double b, double ref) {
            double disc = std::fabs(a - b);
            if (disc > std::max(1e-4 * std::fabs(ref), noise))
                throw StepTooLarge("flow_second: Richardson discrepancy above 1e-4 relative");
        };
        check(d1.m_y, d2.m_y, r.m_y);
        check(d1.G_y, d2.G_y, r.G_y);

        ws.second.emplace(key, r);
        return r;
    }

    const ScalarExpr& drift_alpha() const override { return alpha_; }
    const ScalarExpr& drift_beta() const override { return beta_; }

    // ---- generic integration (arbitrary t0 -> t1) ----

    struct State {
        double v, Lam, mu, Gam;
    };

    State raw_integrate(double y, double t0, double t1) const {
        check_time(t0);
        check_time(t1);
        if (t0 == t1) return {y, 0.0, 0.0, 0.0};
        std::array<double, 4> s{y, 0.0, 0.0, 0.0};
        // split at drift kink times so the controller never straddles a corner
        std::vector<double> pts;
        pts.push_back(t0);
        const double lo = std::min(t0, t1), hi = std::max(t0, t1);
        std::vector<double> inner;
        for (double b : opt_.break_times)
            if (b > lo && b < hi) inner.push_back(b);
        std::sort(inner.begin(), inner.end());
        if (t1 < t0) std::reverse(inner.begin(), inner.end());
        for (double b : inner) pts.push_back(b);
        pts.push_back(t1);

        EvalCache local;
        auto rhs = [&](double sx, const std::array<double, 4>& u, std::array<double, 4>& du) {
            local.clear();
            Point q{0.0, u[0], 0.0, sx};
            double a = alpha_.eval(q, local);
            double b = beta_.eval(q, local);
            double ay = alpha_y_.eval(q, local);
            double by = beta_y_.eval(q, local);
            du[0] = -b;
            du[1] = -a;
            du[2] = -by;
            du[3] = -ay * std::exp(u[2]);
        };
        OdeOptions oo;
        oo.rtol = opt_.rtol;
        oo.atol = opt_.atol;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            s = integrate_ode<4>(rhs, pts[i], s, pts[i + 1], oo);
        return {s[0], s[1], s[2], s[3]};
    }

    // phi(p, t0, t1) as a point map (spec op `integrate`)
    Point integrate(const Point& p, double t0, double t1) const {
        State s = raw_integrate(p.y, t0, t1);
        return Point{p.x * std::exp(s.Lam), s.v, p.z, t1};
    }

    // horizontal Jacobian d(phi^1,phi^2)/d(x,y) of phi(.,t0,t1)
    std::array<std::array<double, 2>, 2> jacobian(const Point& p, double t0, double t1) const {
        State s = raw_integrate(p.y, t0, t1);
        double eL = std::exp(s.Lam), em = std::exp(s.mu);
        return {{{eL, p.x * eL * s.Gam}, {0.0, em}}};
    }

    // second-derivative tensor of the horizontal map: t[i][j][k] =
    // d^2 phi^{i+1} / d a_j d a_k, a = (x, y). FD of the variational data in
    // the base point, Richardson-verified.
    std::array<std::array<std::array<double, 2>, 2>, 2> second_jacobian(const Point& p, double t0,
                                                                        double t1) const {
        const double h = opt_.fd_rel * opt_.fd_scale;
        auto diff = [&](double hh) {
            State sp = raw_integrate(p.y + hh, t0, t1);
            State sm = raw_integrate(p.y - hh, t0, t1);
            return std::array<double, 2>{(sp.mu - sm.mu) / (2.0 * hh),
                                         (sp.Gam - sm.Gam) / (2.0 * hh)};
        };
        auto d1 = diff(h), d2 = diff(0.5 * h);
        double mu_y = (4.0 * d2[0] - d1[0]) / 3.0;
        double Gam_y = (4.0 * d2[1] - d1[1]) / 3.0;
        State s = raw_integrate(p.y, t0, t1);
        double noise = 8.0 * (opt_.atol + opt_.rtol * (1.0 + std::fabs(s.mu) + std::fabs(s.Gam))) / h;
        if (std::fabs(d1[0] - d2[0]) > std::max(1e-4 * std::fabs(mu_y), noise) ||
            std::fabs(d1[1] - d2[1]) > std::max(1e-4 * std::fabs(Gam_y), noise))
            throw StepTooLarge("second_jacobian: Richardson discrepancy above 1e-4 relative");

        double eL = std::exp(s.Lam), em = std::exp(s.mu);
        std::array<std::array<std::array<double, 2>, 2>, 2> T{};
        T[0][0][0] = 0.0;
        T[0][0][1] = eL * s.Gam;
        T[0][1][0] = eL * s.Gam;
        T[0][1][1] = p.x * eL * (s.Gam * s.Gam + Gam_y);
        T[1][0][0] = T[1][0][1] = T[1][1][0] = 0.0;
        T[1][1][1] = em * mu_y;
        return T;
    }

    // ---- characteristic table ----

    // Integrates backward characteristics from t = 1 and stores dense output
    // of (xi, ell, pi, Ghat):
    //   xi' = -beta, ell' = +alpha, pi' = -beta_y, Ghat' = alpha_y + beta_y*Ghat
    // so that on the characteristic through (y,t):
    //   v = label, L = ell(t), m = -pi(t), G = Ghat(t).
    void build_table(double v_max, int n_chars, double t_lo) {
        Table tab;
        tab.t_lo = std::max(t_lo, opt_.t_freeze);
        tab.v.resize(static_cast<std::size_t>(n_chars));
        tab.traj.resize(static_cast<std::size_t>(n_chars));
        for (int j = 0; j < n_chars; ++j)
            tab.v[static_cast<std::size_t>(j)] =
                -v_max + 2.0 * v_max * static_cast<double>(j) / static_cast<double>(n_chars - 1);

        std::vector<double> inner;
        for (double b : opt_.break_times)
            if (b > tab.t_lo && b < 1.0) inner.push_back(b);
        std::sort(inner.rbegin(), inner.rend());

        OdeOptions oo;
        oo.rtol = opt_.rtol;
        oo.atol = opt_.atol;
        for (int j = 0; j < n_chars; ++j) {
            EvalCache local;
            auto rhs = [&](double sx, const std::array<double, 4>& u, std::array<double, 4>& du) {
                local.clear();
                Point q{0.0, u[0], 0.0, sx};
                double a = alpha_.eval(q, local);
                double b = beta_.eval(q, local);
                double ayv = alpha_y_.eval(q, local);
                double byv = beta_y_.eval(q, local);
                du[0] = -b;
                du[1] = a;
                du[2] = -byv;
                du[3] = ayv + byv * u[3];
            };
            std::vector<DenseStep<4>> steps;
            std::array<double, 4> s{tab.v[static_cast<std::size_t>(j)], 0.0, 0.0, 0.0};
            double tcur = 1.0;
            for (double b : inner) {
                s = integrate_ode<4>(rhs, tcur, s, b, oo, &steps);
                tcur = b;
            }
            s = integrate_ode<4>(rhs, tcur, s, tab.t_lo, oo, &steps);
            tab.traj[static_cast<std::size_t>(j)] = DenseTrajectory<4>(std::move(steps));
        }
        table_ = std::make_shared<Table>(std::move(tab));
    }

    bool has_table() const { return table_ != nullptr; }
    double table_v_max() const { return table_ ? table_->v.back() : 0.0; }

private:
    struct Table {
        std::vector<double> v;
        std::vector<DenseTrajectory<4>> traj;
        double t_lo = 0.0;
    };

    void check_time(double t) const {
        if (!(t >= 0.0 && t <= 1.0))
            throw FlowMapDomainError("flow map queried outside its time window [0,1]");
    }

    FlowData direct_query(double y, double t, double t1) const {
        double t0 = t;
        // drift vanishes below t_freeze; skip the frozen span exactly
        if (t0 < opt_.t_freeze && t1 >= opt_.t_freeze) t0 = opt_.t_freeze;
        State s = raw_integrate(y, t0, t1);
        return FlowData{s.v, s.Lam, s.mu, s.Gam};
    }

    FlowData table_query(double y, double t) const {
        const Table& tab = *table_;
        double tc = std::clamp(t, tab.t_lo, 1.0);
        const std::size_t n = tab.v.size();

        auto xi_at = [&](std::size_t j) { return tab.traj[j].eval(tc); };

        // characteristics are ordered; locate the bracket of y at time tc
        std::array<double, 4> s_lo = xi_at(0), s_hi = xi_at(n - 1);
        if (y <= s_lo[0] || y >= s_hi[0]) return direct_query(y, tc, 1.0);
        std::size_t lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (xi_at(mid)[0] <= y)
                lo = mid;
            else
                hi = mid;
        }
        // 4-point stencil around the bracket
        std::size_t j0 = (lo == 0) ? 0 : lo - 1;
        if (j0 + 3 >= n) j0 = n - 4;
        std::array<std::array<double, 4>, 4> st;
        std::array<double, 4> xs;
        for (std::size_t k = 0; k < 4; ++k) {
            st[k] = xi_at(j0 + k);
            xs[k] = st[k][0];
        }
        double span = xs[3] - xs[0];
        if (!(span > 0.0) || span < 1e-280) return direct_query(y, tc, 1.0);

        // Lagrange-4 in the characteristic positions
        FlowData d{0.0, 0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < 4; ++k) {
            double w = 1.0;
            for (std::size_t l = 0; l < 4; ++l) {
                if (l == k) continue;
                double den = xs[k] - xs[l];
                if (den == 0.0) return direct_query(y, tc, 1.0);
                w *= (y - xs[l]) / den;
            }
            d.v += w * tab.v[j0 + k];
            d.L += w * st[k][1];
            d.m += w * (-st[k][2]);
            d.G += w * st[k][3];
        }
        return d;
    }

    ScalarExpr alpha_, beta_, alpha_y_, beta_y_;
    Options opt_;
    std::shared_ptr<const Table> table_;
};

// ---- flow-map lemma verification ----

struct FlowBoundReport {
    double tphi1_min = 0.0, tphi1_max = 0.0;   // observed range of |phi~^1|
    double dphi2K_min = 0.0, dphi2K_max = 0.0; // observed range of |d_y phi^2| K(t)
    double d2_tphi1_max = 0.0;                 // max ratio |d_y^2 phi~^1| / bound
    double d2phi2_max = 0.0;                   // max ratio |d_y^2 phi^2| / bound
    double remainder_max = 0.0;                // max |beta_rem| / (norm4 |y|^3)
    double p01_max = 0.0;                      // max |P01| / (norm4 y^2)
    bool pass = false;
    Point worst{};
    double worst_value = 0.0;
    std::string worst_check;
    int samples = 0;
};

struct PhiBoundSpec {
    double t_lo = 0.0, t_hi = 1.0;      // lemma time window
    double lambda_next = 0.0;           // domain scale lambda_{q+1}
    double gamma2 = 0.6;
    double core_radius = 1e-3;          // clamp of the sampled y-domain
    double slack = 1.5;
    double norm4 = 0.0;                 // lambda_q^{4+gamma}
    double d2_tphi1_bound = 0.0;        // 8 lambda_q^{4+gamma} lambda_{q+1}^{-gamma2} (times K)
    int n_times = 12;
    int n_y = 24;
    std::uint64_t seed = 42;
};

// Samples the flow-stretch lemma quantities on the lemma domain (clamped to
// the hyperbolic core at desk scale) and checks the stated bounds with slack.
inline FlowBoundReport compute_phi_bounds(const FlowMap& fm, const PhiBoundSpec& spec,
                                          const std::function<double(double)>& logK) {
    FlowBoundReport rep;
    rep.tphi1_min = HUGE_VAL;
    rep.dphi2K_min = HUGE_VAL;
    rep.tphi1_max = rep.dphi2K_max = 0.0;
    CounterRng rng(spec.seed, 7701);

    EvalCache ws;
    const ScalarExpr& beta = fm.drift_beta();
    const ScalarExpr beta_y = partial(beta, Axis::Y);
    const ScalarExpr& alpha = fm.drift_alpha();

    auto note_worst = [&rep](double badness, double value, const Point& p, const char* check) {
        if (badness > rep.worst_value) {
            rep.worst_value = badness;
            rep.worst = p;
            rep.worst_check = check;
        }
    };

    std::uint64_t ctr = 0;
    for (int it = 0; it < spec.n_times; ++it) {
        double t = spec.t_lo + (spec.t_hi - spec.t_lo) *
                                   (static_cast<double>(it) + 0.5) / spec.n_times;
        double lk = logK(t);
        double y_dom = 2.0 * std::pow(spec.lambda_next, -spec.gamma2) * std::exp(std::min(lk, 700.0));
        double y_max = std::min(y_dom, spec.core_radius);

        for (int iy = 0; iy < spec.n_y; ++iy) {
            // half log-spaced toward the axis, half uniform, both signs
            double u = rng.uniform(ctr++);
            double mag = (iy % 2 == 0) ? y_max * std::pow(10.0, -3.0 * u) : y_max * u;
            double y = (rng.bits(ctr++) & 1) ? mag : -mag;
            Point p{0.0, y, 0.0, t};
            ws.clear();

            FlowData d = fm.flow_to_one(y, t, ws, false);
            double tphi1 = std::exp(d.L - lk);
            double dphi2K = std::exp(d.m + lk);
            rep.tphi1_min = std::min(rep.tphi1_min, tphi1);
            rep.tphi1_max = std::max(rep.tphi1_max, tphi1);
            rep.dphi2K_min = std::min(rep.dphi2K_min, dphi2K);
            rep.dphi2K_max = std::max(rep.dphi2K_max, dphi2K);
            note_worst(std::max(tphi1, 1.0 / tphi1), tphi1, p, "tilde_phi1");
            note_worst(std::max(dphi2K, 1.0 / dphi2K), dphi2K, p, "dphi2_K");

            FlowSecond s2 = fm.flow_second(y, t, ws, false);
            double d2tphi1 = std::fabs(tphi1 * (d.G * d.G + s2.G_y));
            double bound1 = spec.d2_tphi1_bound * std::exp(std::min(lk, 700.0));
            if (bound1 > 0.0) rep.d2_tphi1_max = std::max(rep.d2_tphi1_max, d2tphi1 / bound1);
            double d2phi2 = std::fabs(std::exp(d.m) * s2.m_y);
            double bound2 = spec.norm4 * std::pow(spec.lambda_next, -spec.gamma2) *
                            std::exp(std::min(lk, 700.0));
            if (bound2 > 0.0) rep.d2phi2_max = std::max(rep.d2phi2_max, d2phi2 / bound2);

            // remainder and axis-offset coefficients of the drift
            if (spec.norm4 > 0.0 && y != 0.0) {
                double bv = beta.eval(p, ws);
                double by0 = beta_y.eval(Point{0.0, 0.0, 0.0, t}, ws);
                double rem = std::fabs(bv - y * by0) / (spec.norm4 * std::fabs(y * y * y));
                rep.remainder_max = std::max(rep.remainder_max, rem);
                double av = alpha.eval(Point{0.0, d.v, 0.0, t}, ws);
                double a0 = alpha.eval(Point{0.0, 0.0, 0.0, t}, ws);
                double p01 = std::fabs(av - a0) / (spec.norm4 * y * y);
                rep.p01_max = std::max(rep.p01_max, p01);
            }
            ++rep.samples;
        }
    }

    const double lo = 0.5 / spec.slack, hi = 2.0 * spec.slack;
    rep.pass = rep.tphi1_min >= lo && rep.tphi1_max <= hi && rep.dphi2K_min >= lo &&
               rep.dphi2K_max <= hi && rep.d2_tphi1_max <= spec.slack &&
               rep.d2phi2_max <= spec.slack;
    return rep;
}

inline FlowBoundReport verify_phi_bounds(const FlowMap& fm, const PhiBoundSpec& spec,
                                         const std::function<double(double)>& logK) {
    FlowBoundReport rep = compute_phi_bounds(fm, spec, logK);
    if (!rep.pass)
        throw BoundViolation("flow-map bounds violated: " + rep.worst_check, rep.worst_value,
                             rep.worst.x, rep.worst.y, rep.worst.z, rep.worst.t);
    return rep;
}

} // namespace emhd

#endif
