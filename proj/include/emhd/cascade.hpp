#ifndef EMHD_CASCADE_HPP
#define EMHD_CASCADE_HPP

#include <cmath>
#include <memory>
#include <vector>

#include "emhd/expr.hpp"
#include "emhd/flowmap.hpp"
#include "emhd/profiles.hpp"
#include "emhd/quadrature.hpp"
#include "emhd/schedule.hpp"

namespace emhd {

struct CascadeOptions {
    int table_chars = 513;      // odd, so the axis characteristic is stored
    double table_margin = 1.5;  // table half-width = margin * lambda_{q+1}^{-gamma2}
    double rtol = 1e-10;
    double atol = 1e-13;
    double quad_rtol = 1e-8;
    bool build_tables = true;
};

// Per-stage record. Field expressions (Wbar, W, V, B, J, F) evaluate flow
// compositions by direct integration; the drift coefficients (alpha, beta,
// Vbar) route flow queries through the previous stage's characteristic
// table. Both sides of every identity use the same expression objects, so
// residual cancellations hold to integrator tolerance by construction.
struct StageRecord {
    int q = 0;
    double log_lambda = 0.0;
    double lambda = 0.0; // numeric value (valid when representable)
    TemporalCutoff g;
    VectorExpr Wbar;   // transported perturbation (unmultiplied)
    VectorExpr W;      // g_q * Wbar
    VectorExpr V;      // curl W
    VectorExpr Vbar;   // modified current (x alpha, beta, 0)
    ScalarExpr alpha;  // d_x V^1 on the axis
    ScalarExpr beta;   // V^2 on the axis
    VectorExpr F;      // reduced forcing
    VectorExpr F_full; // unreduced four-bracket forcing
    VectorExpr B;      // assembled field through this stage
    VectorExpr J;      // curl B
    VectorExpr sumF;   // cumulative forcing
    std::shared_ptr<FlowMap> fm; // flow of Vbar (drift for stage q+1)
};

class Cascade {
public:
    Cascade(const Params& p, Family fam, CascadeOptions opt = {})
        : sched_(p, fam), family_(fam), opt_(opt) {
        p.validate();
        profile_ = (fam == Family::Hyperbolic) ? build_hyperbolic_profile(p)
                                               : build_shear_profile(p, 0);
        StageRecord r;
        r.q = 0;
        r.log_lambda = std::log(p.lambda);
        r.lambda = p.lambda;
        r.B = profile_.B;
        r.J = profile_.J;
        r.Vbar = profile_.Jbar;
        r.alpha = profile_.alpha;
        r.beta = profile_.beta;
        r.Wbar = zero_vector();
        r.W = zero_vector();
        r.V = zero_vector();
        r.F = zero_vector();
        r.F_full = zero_vector();
        r.sumF = zero_vector();
        if (fam == Family::Hyperbolic) {
            FlowMap::Options fo;
            fo.rtol = opt_.rtol;
            fo.atol = opt_.atol;
            fo.fd_scale = std::pow(p.lambda, -p.gamma2);
            r.fm = std::make_shared<FlowMap>(r.alpha, r.beta, fo);
            if (p.mode == ScheduleMode::Tempered && opt_.build_tables) {
                double vmax = opt_.table_margin *
                              std::pow(p.lambda * p.tempered_ratio, -p.gamma2);
                r.fm->build_table(vmax, opt_.table_chars, sched_.t_q(0));
            }
        }
        stages_.push_back(std::move(r));
    }

    const Schedule& schedule() const { return sched_; }
    const Params& params() const { return sched_.params(); }
    Family family() const { return family_; }
    const ProfileBundle& profile() const { return profile_; }
    int max_stage() const { return static_cast<int>(stages_.size()) - 1; }
    const StageRecord& stage(int q) const { return stages_.at(static_cast<std::size_t>(q)); }

    // Ending data at a numeric frequency (hyperbolic family uses the 2D
    // product profile, shear the 1D one).
    VectorExpr build_ending_data(double lam) const {
        const Params& p = params();
        ScalarExpr X = coord(Axis::X), Y = coord(Axis::Y);
        ScalarExpr w3;
        if (family_ == Family::Hyperbolic) {
            w3 = constant(-std::pow(lam, p.gamma)) * sin_of(constant(lam) * X) *
                 cutoff_of(constant(std::pow(lam, p.gamma1)) * X) * sin_of(constant(lam) * Y) *
                 cutoff_of(constant(std::pow(lam, p.gamma2)) * Y);
        } else {
            w3 = constant(-std::pow(lam, p.gamma)) * sin_of(constant(lam) * X) *
                 cutoff_of(constant(std::pow(lam, 0.5)) * X);
        }
        return vec(constant(0.0), constant(0.0), w3);
    }

    // log K_q(t) = int_t^1 -alpha_q(0,s) ds by adaptive quadrature.
    double K_log(int q, double t) const {
        const StageRecord& r = stage(q);
        if (family_ == Family::Shear) return 0.0; // shear drift has no x-stretch
        EvalCache ws;
        auto f = [&](double s) {
            ws.clear();
            return -r.alpha.eval(Point{0.0, 0.0, 0.0, s}, ws);
        };
        QuadOptions qo;
        qo.rtol = opt_.quad_rtol;
        double acc = 0.0;
        double lo = t;
        for (double b : kinks_)
            if (b > lo && b < 1.0) {
                acc += integrate_adaptive(f, lo, b, qo);
                lo = b;
            }
        acc += integrate_adaptive(f, lo, 1.0, qo);
        return acc;
    }

    // log lambda_{q+1} as defined by the construction: 2 int over the stage
    // window of -d_x V_q^1(0,s).
    double next_lambda_log(int q) const { return 2.0 * K_log(q, sched_.t_q(q)); }

    // Largest t with log K_q(t) >= target (K decreases toward t = 1).
    double t_for_logK(int q, double target) const {
        double lo = sched_.t_q(q), hi = 1.0;
        if (K_log(q, lo) <= target) return lo;
        for (int i = 0; i < 60; ++i) {
            double mid = 0.5 * (lo + hi);
            (K_log(q, mid) > target ? lo : hi) = mid;
        }
        return hi;
    }

    // Builds stages 1..Q.
    void build(int Q) {
        while (max_stage() < Q) build_next();
    }

    const std::vector<double>& kink_times() const { return kinks_; }

private:
    void build_next() {
        int q = sched_.advance_closed_form();
        const Params& p = params();
        if (p.mode == ScheduleMode::Tempered && family_ == Family::Hyperbolic)
            sched_.record_quadrature(q, next_lambda_log(q - 1));

        StageRecord r;
        r.q = q;
        r.log_lambda = sched_.log_lambda(q);
        r.lambda = sched_.lambda(q); // throws OverflowError when astronomically large
        r.g = make_temporal_cutoff(sched_, q);
        kinks_.push_back(r.g.ramp->t_on);
        kinks_.push_back(r.g.ramp->t_full);

        ScalarExpr gE = ramp_expr(r.g.ramp);
        ScalarExpr gP = ramp_deriv_expr(r.g.ramp);
        VectorExpr end = build_ending_data(r.lambda);
        const StageRecord& prev = stages_.back();

        if (family_ == Family::Hyperbolic) {
            ScalarExpr wbar3 = flow_pullback(prev.fm, end[2], /*via_table=*/false);
            ScalarExpr wbar3_tab = flow_pullback(prev.fm, end[2], /*via_table=*/true);
            r.Wbar = vec(constant(0.0), constant(0.0), wbar3);
            r.W = vec(constant(0.0), constant(0.0), gE * wbar3);
            r.V = curl(r.W);

            VectorExpr W_tab = vec(constant(0.0), constant(0.0), gE * wbar3_tab);
            VectorExpr V_tab = curl(W_tab);
            r.alpha = pin_xz(partial(V_tab[0], Axis::X));
            r.beta = pin_xz(V_tab[1]);
            r.Vbar = vec(coord(Axis::X) * r.alpha, r.beta, constant(0.0));

            VectorExpr mismatch = prev.Vbar - prev.J;
            VectorExpr curlW = curl(r.Wbar);
            r.F = gP * r.Wbar + gE * advect(mismatch, r.Wbar) - gE * advect(curlW, prev.B);
            VectorExpr bracket1 = advect(mismatch, r.Wbar) - advect(r.Wbar, mismatch);
            VectorExpr bracket2 = advect(prev.B, curlW) - advect(curlW, prev.B);
            VectorExpr bracket3 = advect(r.Wbar, curlW) - advect(curlW, r.Wbar);
            r.F_full = gP * r.Wbar + gE * bracket1 + gE * bracket2 + (gE * gE) * bracket3;

            FlowMap::Options fo;
            fo.rtol = opt_.rtol;
            fo.atol = opt_.atol;
            fo.fd_scale = std::pow(r.lambda, -p.gamma2);
            fo.break_times = kinks_;
            fo.t_freeze = r.g.ramp->t_on;
            r.fm = std::make_shared<FlowMap>(r.alpha, r.beta, fo);
            if (p.mode == ScheduleMode::Tempered && opt_.build_tables) {
                double vmax = opt_.table_margin *
                              std::pow(r.lambda * p.tempered_ratio, -p.gamma2);
                r.fm->build_table(vmax, opt_.table_chars, r.g.ramp->t_on);
            }
        } else {
            // Shear: the transported solution equals its ending data at all
            // times, so no flow machinery is involved.
            r.Wbar = end;
            r.W = vec(constant(0.0), constant(0.0), gE * end[2]);
            r.V = curl(r.W);
            r.alpha = constant(0.0);
            r.beta = pin_xz(r.V[1]);
            r.Vbar = vec(constant(0.0), constant(0.0), constant(0.0));
            r.F = gP * r.Wbar;
            r.F_full = r.F;
            r.fm = nullptr;
        }

        r.B = prev.B + r.W;
        r.J = curl(r.B);
        r.sumF = prev.sumF + r.F;
        stages_.push_back(std::move(r));
    }

    Schedule sched_;
    Family family_;
    CascadeOptions opt_;
    ProfileBundle profile_;
    std::vector<StageRecord> stages_;
    std::vector<double> kinks_;
};

} // namespace emhd

#endif
