#ifndef EMHD_VERIFY_HPP
#define EMHD_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "emhd/cascade.hpp"
#include "emhd/holder.hpp"
#include "emhd/parallel.hpp"
#include "emhd/rng.hpp"

namespace emhd {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     // worst observed (normalized where applicable)
    double threshold = 0.0;
    Point worst{};
    int samples = 0;
    std::string details;
};

struct ResidualOptions {
    int samples = 1000;
    double tol = 1e-5;
    double forcing_scale = 1.0; // negative-control hook
    double t_step_frac = 0.0;   // 0 -> 1e-7 hyperbolic, 1e-3 shear
    std::uint64_t seed = 42;
};

struct ResidualReport {
    int q = 0;
    double sup_normalized = 0.0;
    double tol = 0.0;
    Point worst{};
    int samples = 0;
    bool pass = false;
};

struct DiagnosticsSeries {
    bool log_domain = false;
    std::vector<double> t;
    std::vector<double> sup_curlJ;        // log values in exact-log mode
    std::vector<double> partial_integral; // cumulative; log-domain when flagged
    bool sup_increasing = false;
    bool partial_increasing = false;
    bool terms_nondecaying = true;
};

struct HolderRatioRow {
    int q = 0;
    double t = 0.0;
    double beta = 0.0;
    double w_ratio = 0.0;
    double f_ratio = 0.0;
};

class Verifier {
public:
    Verifier(const Cascade& c, std::uint64_t seed = 42) : c_(c), seed_(seed) {}

    // ---- sampled geometry helpers ----

    // log K_{j}(t), linearly interpolated from a per-stage table
    double logK(int j, double t) const {
        if (j < 0 || c_.family() == Family::Shear) return 0.0;
        auto it = logK_tab_.find(j);
        if (it == logK_tab_.end()) {
            KTab tab;
            tab.t_lo = (j == 0) ? c_.schedule().t_q(0) : c_.stage(j).g.ramp->t_on;
            const int n = 257;
            tab.vals.resize(n);
            for (int i = 0; i < n; ++i) {
                double t_i = tab.t_lo + (1.0 - tab.t_lo) * i / (n - 1);
                tab.vals[static_cast<std::size_t>(i)] = c_.K_log(j, t_i);
            }
            it = logK_tab_.emplace(j, std::move(tab)).first;
        }
        const KTab& tab = it->second;
        double tc = std::clamp(t, tab.t_lo, 1.0);
        double f = (tc - tab.t_lo) / (1.0 - tab.t_lo) * (tab.vals.size() - 1);
        std::size_t i = std::min(static_cast<std::size_t>(f), tab.vals.size() - 2);
        double th = f - static_cast<double>(i);
        return (1.0 - th) * tab.vals[i] + th * tab.vals[i + 1];
    }

    // sampling box around the structures of stage j at time t
    struct Box {
        double xh, yh;
    };
    Box stage_box(int j, double t) const {
        const Params& p = c_.params();
        if (c_.family() == Family::Shear) {
            double lam = c_.stage(j).lambda;
            return Box{1.2 * std::pow(lam, -0.5), 0.5};
        }
        if (j == 0) return Box{1.2 * std::pow(p.lambda, -p.gamma1), 1.2 * std::pow(p.lambda, -p.gamma2)};
        double lam = c_.stage(j).lambda;
        double lk = std::min(logK(j - 1, t), 640.0);
        double xh = 1.2 * std::pow(lam, -p.gamma1) * std::exp(-lk);
        xh = std::max(xh, 1e-250);
        double core = 1.3 * M_PI / c_.stage(j - 1).lambda;
        double yh = 1.2 * std::min(2.0 * std::pow(lam, -p.gamma2) * std::exp(std::min(lk, 640.0)), core);
        return Box{xh, yh};
    }

    // earliest time at which every stage <= q evaluates within double range
    double representable_t(int q) const {
        if (c_.family() == Family::Shear) return (q >= 1) ? c_.stage(q).g.ramp->t_on : 0.0;
        double t = (q >= 1) ? c_.stage(q).g.ramp->t_on : c_.schedule().t_q(0);
        for (int j = 1; j <= q; ++j) {
            double cap = 280.0 - 2.0 * c_.stage(j).log_lambda;
            if (logK(j - 1, t) > cap) {
                double lo = t, hi = 1.0;
                for (int i = 0; i < 50; ++i) {
                    double mid = 0.5 * (lo + hi);
                    (logK(j - 1, mid) > cap ? lo : hi) = mid;
                }
                t = hi;
            }
        }
        return t;
    }

    // ---- PDE residual of the forced equation at stage q ----

    ResidualReport residual_check(int q, const ResidualOptions& opt = {}) const {
        const StageRecord& r = c_.stage(q);
        const VectorExpr transport = advect(r.J, r.B);
        const VectorExpr stretch = advect(r.B, r.J);
        const bool shear = c_.family() == Family::Shear;

        const double t_on = (q >= 1) ? r.g.ramp->t_on : 0.0;
        const double window = 1.0 - t_on;
        double frac = opt.t_step_frac > 0.0 ? opt.t_step_frac : (shear ? 1e-3 : 1e-7);
        const double dt = frac * window;
        const double t_lo = std::max(representable_t(q), t_on) + 4.0 * dt;

        const auto& kinks = c_.kink_times();
        CounterRng rng(opt.seed, 101 + static_cast<std::uint64_t>(q));

        auto sample_one = [&](std::size_t i) {
            std::uint64_t ctr = i * 16;
            double t = 0.0;
            for (int attempt = 0; attempt < 64; ++attempt) {
                t = rng.uniform(ctr++, t_lo, 1.0 - 4.0 * dt);
                bool clear = true;
                for (double kk : kinks)
                    if (std::fabs(t - kk) < 8.0 * dt) clear = false;
                if (clear) break;
            }
            int j = q >= 1 ? 1 + static_cast<int>(rng.bits(ctr++) % static_cast<std::uint64_t>(q)) : 0;
            Box b = stage_box(j, t);
            Point p{rng.uniform(ctr++, -b.xh, b.xh), rng.uniform(ctr++, -b.yh, b.yh),
                    rng.uniform(ctr++, -1.0, 1.0), t};

            EvalCache ws;
            auto evalB = [&](double tt) {
                Point pp = p;
                pp.t = tt;
                return r.B.eval(pp, ws);
            };
            Vec3 d1 = (1.0 / (2.0 * dt)) * (evalB(t + dt) - evalB(t - dt));
            Vec3 d2 = (1.0 / dt) * (evalB(t + 0.5 * dt) - evalB(t - 0.5 * dt));
            Vec3 dBdt = (1.0 / 3.0) * (4.0 * d2 - d1);

            Vec3 T2 = transport.eval(p, ws);
            Vec3 T3 = stretch.eval(p, ws);
            Vec3 T4 = r.sumF.eval(p, ws);
            Vec3 resid{dBdt[0] - T2[0] + T3[0] - opt.forcing_scale * T4[0],
                       dBdt[1] - T2[1] + T3[1] - opt.forcing_scale * T4[1],
                       dBdt[2] - T2[2] + T3[2] - opt.forcing_scale * T4[2]};
            double scale = std::max({norm_inf(dBdt), norm_inf(T2), norm_inf(T3), norm_inf(T4), 1e-30});
            return std::pair<double, Point>(norm_inf(resid) / scale, p);
        };

        auto vals = parallel_map<std::pair<double, Point>>(static_cast<std::size_t>(opt.samples),
                                                           sample_one);
        ResidualReport rep;
        rep.q = q;
        rep.tol = opt.tol;
        rep.samples = opt.samples;
        for (const auto& v : vals)
            if (v.first > rep.sup_normalized) {
                rep.sup_normalized = v.first;
                rep.worst = v.second;
            }
        rep.pass = rep.sup_normalized < opt.tol;
        return rep;
    }

    // ---- structural identity battery ----

    std::vector<CheckResult> structural_identities(int q, int n_points = 100) const {
        std::vector<CheckResult> out;
        const StageRecord& r = c_.stage(q);
        const bool shear = c_.family() == Family::Shear;

        struct Item {
            std::string name;
            VectorExpr diff;
            VectorExpr scale;
        };
        std::vector<Item> items;

        items.push_back({"stretching_vanishes", advect(r.B, r.J), advect_mag(r.B, r.J)});
        items.push_back({"transport_of_B3_vanishes_for_curl_drift", advect(r.J, r.B),
                         advect_mag(r.J, r.B)});
        items.push_back({"hall_two_path_agreement", hall_term(r.B) - hall_term_split(r.B),
                         advect_mag(r.B, r.J) + advect_mag(r.J, r.B)});
        {
            VectorExpr dc = vec(div(r.J), constant(0.0), constant(0.0));
            VectorExpr sc = vec(abs_of(partial(r.J[0], Axis::X)) + abs_of(partial(r.J[1], Axis::Y)) +
                                    abs_of(partial(r.J[2], Axis::Z)),
                                constant(0.0), constant(0.0));
            items.push_back({"div_curl_zero", dc, sc});
        }

        if (q >= 1 && !shear) {
            const StageRecord& prev = c_.stage(q - 1);
            VectorExpr curlW = curl(r.Wbar);
            items.push_back({"curlW_grad_W_vanishes", advect(curlW, r.Wbar),
                             advect_mag(curlW, r.Wbar)});
            items.push_back({"W_grad_curlW_vanishes", advect(r.Wbar, curlW),
                             advect_mag(r.Wbar, curlW)});
            items.push_back({"B_grad_curlW_vanishes", advect(prev.B, curlW),
                             advect_mag(prev.B, curlW)});
            VectorExpr mismatch = prev.Vbar - prev.J;
            items.push_back({"W_grad_mismatch_vanishes", advect(r.Wbar, mismatch),
                             advect_mag(r.Wbar, mismatch)});
            items.push_back({"forcing_bracket_reduction", r.F_full - r.F,
                             advect_mag(mismatch, r.Wbar) + advect_mag(curlW, prev.B)});
            {
                VectorExpr dv = vec(div(r.Vbar), constant(0.0), constant(0.0));
                VectorExpr sv = vec(abs_of(r.alpha) + abs_of(partial(r.beta, Axis::Y)),
                                    constant(0.0), constant(0.0));
                items.push_back({"modified_current_divergence_free", dv, sv});
            }
        }
        if (q >= 1 && shear) {
            const StageRecord& prev = c_.stage(q - 1);
            items.push_back({"shear_hall_vanishes", hall_term(r.B),
                             advect_mag(r.B, r.J) + advect_mag(r.J, r.B)});
            // W.grad J reduces to (0, W^1 d_x J^2, 0); W^1 = 0 here
            items.push_back({"shear_W_grad_J_reduction", advect(r.Wbar, prev.J),
                             advect_mag(r.Wbar, prev.J)});
        }

        const double t_lo = representable_t(q);
        const double t_on = (q >= 1) ? r.g.ramp->t_on : 0.0;
        CounterRng rng(seed_, 300 + static_cast<std::uint64_t>(q));
        for (std::size_t item_i = 0; item_i < items.size(); ++item_i) {
            const Item& it = items[item_i];
            auto vals = parallel_map<std::pair<double, Point>>(
                static_cast<std::size_t>(n_points), [&](std::size_t i) {
                    std::uint64_t ctr = (item_i * 1000 + i) * 8;
                    double t = rng.uniform(ctr++, std::max(t_lo, t_on), 1.0);
                    int j = q >= 1 ? 1 + static_cast<int>(rng.bits(ctr++) %
                                                          static_cast<std::uint64_t>(q))
                                   : 0;
                    Box b = stage_box(j, t);
                    Point p{rng.uniform(ctr++, -b.xh, b.xh), rng.uniform(ctr++, -b.yh, b.yh),
                            rng.uniform(ctr++, -1.0, 1.0), t};
                    EvalCache ws;
                    double d = norm_inf(it.diff.eval(p, ws));
                    double s = norm_inf(it.scale.eval(p, ws));
                    return std::pair<double, Point>(d / std::max(s, 1e-30), p);
                });
            CheckResult cr;
            cr.name = it.name + "_q" + std::to_string(q);
            cr.threshold = 1e-6;
            cr.samples = n_points;
            for (const auto& v : vals)
                if (v.first > cr.value) {
                    cr.value = v.first;
                    cr.worst = v.second;
                }
            cr.pass = cr.value < cr.threshold;
            out.push_back(std::move(cr));
        }
        return out;
    }

    // ---- support containment (shell sampling outside the bound) ----

    CheckResult support_check(int q, int n_points = 200) const {
        const StageRecord& r = c_.stage(q);
        const Params& p = c_.params();
        CheckResult cr;
        cr.name = "support_containment_q" + std::to_string(q);
        cr.samples = n_points;
        double amp = std::exp(p.gamma * r.log_lambda);
        cr.threshold = 1e-12 * amp;
        const double t_lo = std::max(representable_t(q), (q >= 1) ? r.g.ramp->t_on : 0.0);
        CounterRng rng(seed_, 500 + static_cast<std::uint64_t>(q));
        auto vals = parallel_map<std::pair<double, Point>>(
            static_cast<std::size_t>(n_points), [&](std::size_t i) {
                std::uint64_t ctr = i * 8;
                double t = rng.uniform(ctr++, t_lo, 1.0);
                double lk = std::min(logK(q - 1, t), 600.0);
                double bound = 2.0 * std::pow(r.lambda, -p.gamma2) * std::exp(lk);
                double y = rng.uniform(ctr++, bound, 2.0 * bound);
                if (rng.bits(ctr++) & 1) y = -y;
                Box b = stage_box(q, t);
                Point pt{rng.uniform(ctr++, -2.0 * b.xh, 2.0 * b.xh), y,
                         rng.uniform(ctr++, -1.0, 1.0), t};
                EvalCache ws;
                return std::pair<double, Point>(std::fabs(r.Wbar[2].eval(pt, ws)), pt);
            });
        for (const auto& v : vals)
            if (v.first > cr.value) {
                cr.value = v.first;
                cr.worst = v.second;
            }
        cr.pass = cr.value < cr.threshold;
        return cr;
    }

    // ---- frozen prefix: B_p = B_q below 1 - lambda_q^{-eps/2} ----

    CheckResult frozen_prefix(int q, int n_points = 100) const {
        CheckResult cr;
        cr.name = "frozen_prefix_q" + std::to_string(q);
        cr.threshold = 1e-12;
        cr.samples = n_points;
        if (q >= c_.max_stage()) {
            cr.pass = true;
            cr.details = "no later stage built";
            return cr;
        }
        const StageRecord& rq = c_.stage(q);
        const double t_hi = c_.schedule().t_q(q);
        const double t_lo = representable_t(c_.max_stage());
        CounterRng rng(seed_, 600 + static_cast<std::uint64_t>(q));
        double worst = 0.0;
        Point wp{};
        EvalCache ws;
        for (int i = 0; i < n_points; ++i) {
            std::uint64_t ctr = static_cast<std::uint64_t>(i) * 8;
            double t = rng.uniform(ctr++, std::min(t_lo, t_hi) * 0.5, t_hi);
            Box b = stage_box(std::max(q, 1), t);
            Point p{rng.uniform(ctr++, -b.xh, b.xh), rng.uniform(ctr++, -b.yh, b.yh),
                    rng.uniform(ctr++, -1.0, 1.0), t};
            ws.clear();
            for (int pp = q + 1; pp <= c_.max_stage(); ++pp) {
                const StageRecord& rp = c_.stage(pp);
                double scale = std::max({norm_inf(rq.B.eval(p, ws)), 1e-30});
                double dB = norm_inf(rp.B.eval(p, ws) - rq.B.eval(p, ws)) / scale;
                double dF = norm_inf(rp.sumF.eval(p, ws) - rq.sumF.eval(p, ws)) /
                            std::max(norm_inf(rq.sumF.eval(p, ws)), 1e-30);
                double d = std::max(dB, dF);
                if (d > worst) {
                    worst = d;
                    wp = p;
                }
            }
        }
        cr.value = worst;
        cr.worst = wp;
        cr.pass = worst <= cr.threshold;
        return cr;
    }

    // ---- flow-map stretch bounds (Lemma-style) for stage q's flow ----

    FlowBoundReport flow_bounds(int q, double slack = 1.5, int n_times = 10, int n_y = 20) const {
        const Params& p = c_.params();
        const StageRecord& r = c_.stage(q);
        if (!r.fm) throw InvalidParams("flow_bounds: stage has no flow map (shear family)");
        PhiBoundSpec spec;
        spec.t_lo = c_.schedule().t_q(q);
        spec.t_hi = 1.0 - 1e-9;
        double log_next = c_.schedule().log_lambda(std::min(q + 1, c_.schedule().max_stage()));
        if (c_.schedule().max_stage() < q + 1) {
            log_next = (p.mode == ScheduleMode::Tempered)
                           ? r.log_lambda + std::log(p.tempered_ratio)
                           : r.log_lambda;
        }
        spec.lambda_next = std::exp(std::min(log_next, 650.0));
        spec.gamma2 = p.gamma2;
        // desk-scale clamp: the hyperbolic core where the linearized drift
        // dominates; at asymptotic frequencies the lemma domain is already
        // inside it.
        spec.core_radius = std::exp(-(2.0 + 0.5 * p.gamma) * r.log_lambda);
        spec.slack = slack;
        spec.norm4 = std::exp(std::min((4.0 + p.gamma) * r.log_lambda, 650.0));
        spec.d2_tphi1_bound = 8.0 * spec.norm4 * std::pow(spec.lambda_next, -p.gamma2);
        spec.n_times = n_times;
        spec.n_y = n_y;
        spec.seed = seed_;
        auto lk = [this, q](double t) { return logK(q, t); };
        return compute_phi_bounds(*r.fm, spec, lk);
    }

    // ---- Holder growth ratios ----

    std::vector<HolderRatioRow> holder_ratios(int q, const std::vector<double>& betas,
                                              int n_fine = 2048, int n_lines = 6) const {
        const StageRecord& r = c_.stage(q);
        const Params& p = c_.params();
        std::vector<HolderRatioRow> rows;
        // lemma window tail where the substrate stretch K stays order one
        double lemma_lo = 1.0 - std::exp(-0.5 * p.eps * r.log_lambda);
        double t_k = (q >= 1 && c_.family() == Family::Hyperbolic)
                         ? c_.t_for_logK(q - 1, std::log(2.0))
                         : lemma_lo;
        double t = std::max(lemma_lo, t_k);
        if (q >= 1) t = std::max(t, r.g.ramp->t_full + 1e-4 * (1.0 - r.g.ramp->t_full));

        Box b = stage_box(q, t);
        HolderBox hb;
        hb.x_half = b.xh;
        hb.y_half = b.yh;
        hb.t = t;
        HolderSpec hs;
        hs.n_fine = n_fine;
        hs.n_lines = n_lines;
        double lk = (q >= 1) ? logK(q - 1, t) : 0.0;
        hs.freq_hint = r.lambda * std::exp(std::min(lk, 60.0));

        double wn = 0.0, fn = 0.0;
        for (double beta : betas) {
            HolderRatioRow row;
            row.q = q;
            row.t = t;
            row.beta = beta;
            wn = holder_estimate(r.Wbar[2], 0, beta, hb, hs);
            row.w_ratio = wn / std::exp((p.gamma + beta) * r.log_lambda);
            fn = holder_estimate_vec(r.F, 0, beta, hb, hs);
            row.f_ratio = fn / std::exp((1.0 + p.gamma + beta) * r.log_lambda);
            rows.push_back(row);
        }
        return rows;
    }

    // ---- blowup diagnostics ----

    // Sampled sup of |Delta B(., t)| = |curl J|: structured scan of each
    // stage's oscillation, then full evaluation at the best candidates with
    // one 3x local refinement pass.
    double sup_laplacian(double t, int n_y = 129, int n_x = 2048) const {
        const Params& p = c_.params();
        const int Q = c_.max_stage();
        const StageRecord& top = c_.stage(Q);
        ScalarExpr lap = partial(top.B[2], Axis::X, 2) + partial(top.B[2], Axis::Y, 2);

        struct Cand {
            double score;
            Point p;
            bool operator<(const Cand& o) const { return score > o.score; }
        };
        std::vector<Cand> cands;

        EvalCache ws;
        for (int j = 0; j <= Q; ++j) {
            const StageRecord& r = c_.stage(j);
            double g = (j >= 1) ? r.g.value(t) : 1.0;
            if (j >= 1 && g == 0.0) continue;
            Box b = stage_box(j, t);
            double lam = r.lambda;
            double g1 = (c_.family() == Family::Hyperbolic) ? p.gamma1 : 0.5;
            for (int iy = 0; iy < n_y; ++iy) {
                double y = -b.yh + 2.0 * b.yh * iy / (n_y - 1);
                double L = 0.0, v = y;
                if (j >= 1 && c_.family() == Family::Hyperbolic) {
                    ws.clear();
                    FlowData d = c_.stage(j - 1).fm->flow_to_one(y, t, ws, true);
                    L = d.L;
                    v = d.v;
                }
                double s2 = std::sin(lam * v) * cutoff_eval(std::pow(lam, p.gamma2) * v);
                if (c_.family() == Family::Shear) s2 = 1.0;
                if (s2 == 0.0 && std::fabs(v) * std::pow(lam, p.gamma2) >= 1.0) continue;
                // scan the mapped oscillation u = x e^L over the data support
                for (int ix = 0; ix < n_x; ++ix) {
                    double u = -std::pow(lam, -g1) + 2.0 * std::pow(lam, -g1) * ix / (n_x - 1);
                    double s1_dd = -lam * lam * std::sin(lam * u) * cutoff_eval(std::pow(lam, g1) * u);
                    double proxy = std::fabs(g * std::pow(lam, p.gamma) * s1_dd * s2) *
                                   std::exp(std::min(2.0 * L, 600.0));
                    if (proxy > 0.0) {
                        double x = u * std::exp(-L);
                        cands.push_back({proxy, Point{x, y, 0.0, t}});
                    }
                }
            }
        }
        std::sort(cands.begin(), cands.end());
        if (cands.size() > 48) cands.resize(48);

        double best = 0.0;
        Point bp{};
        for (const auto& cd : cands) {
            ws.clear();
            double v = std::fabs(lap.eval(cd.p, ws));
            if (v > best) {
                best = v;
                bp = cd.p;
            }
        }
        // local 3x refinement around the argmax
        if (best > 0.0) {
            Box b = stage_box(std::max(1, Q), t);
            double hx = 2.0 * b.xh / n_x, hy = 2.0 * b.yh / n_y;
            for (int ix = -3; ix <= 3; ++ix)
                for (int iy = -3; iy <= 3; ++iy) {
                    Point p2{bp.x + ix * hx / 3.0, bp.y + iy * hy / 3.0, 0.0, t};
                    ws.clear();
                    best = std::max(best, std::fabs(lap.eval(p2, ws)));
                }
        }
        return best;
    }

    DiagnosticsSeries blowup_series(int Q) const {
        DiagnosticsSeries out;
        const Params& p = c_.params();
        const Schedule& sched = c_.schedule();
        if (p.mode == ScheduleMode::ExactLog) {
            out.log_domain = true;
            // analytic surrogate lambda_q^{gamma+2+eps} in log space
            std::vector<double> loglam;
            for (int q2 = 0; q2 <= sched.max_stage(); ++q2) loglam.push_back(sched.log_lambda(q2));
            while (static_cast<int>(loglam.size()) <= Q + 1) {
                // extend by the closed-form law from the last value
                double last = loglam.back();
                double e = (c_.family() == Family::Shear)
                               ? p.shear_base * last
                               : (2.0 + p.gamma - 0.5 * p.eps) * last;
                if (c_.family() == Family::Shear)
                    loglam.push_back(e);
                else
                    loglam.push_back(e > 690.0 ? std::numeric_limits<double>::infinity()
                                               : 2.0 * std::exp(e));
            }
            double logP = -std::numeric_limits<double>::infinity();
            double prev_term = -std::numeric_limits<double>::infinity();
            for (int q = 0; q <= Q; ++q) {
                if (!std::isfinite(loglam[static_cast<std::size_t>(q)])) break;
                double ll = loglam[static_cast<std::size_t>(q)];
                double t_q = 1.0 - std::exp(-0.5 * p.eps * ll);
                double log_sup = (p.gamma + 2.0 + p.eps) * ll;
                out.t.push_back(t_q);
                out.sup_curlJ.push_back(log_sup);
                out.partial_integral.push_back(logP);
                if (q <= Q && std::isfinite(loglam[static_cast<std::size_t>(q) + 1])) {
                    double lln = loglam[static_cast<std::size_t>(q) + 1];
                    // log(t_{q+1} - t_q) = log(lambda_q^{-e/2} - lambda_{q+1}^{-e/2})
                    double a = -0.5 * p.eps * ll, b = -0.5 * p.eps * lln;
                    double logdt = a + std::log1p(-std::exp(std::min(b - a, -1e-300)));
                    double term = log_sup + logdt;
                    if (q >= 1 && term < prev_term - 1e-9) out.terms_nondecaying = false;
                    prev_term = std::max(prev_term, term);
                    logP = std::max(logP, term) + std::log1p(std::exp(-std::fabs(logP - term)));
                }
            }
            out.sup_increasing = std::is_sorted(out.sup_curlJ.begin(), out.sup_curlJ.end());
            out.partial_increasing = true;
            for (std::size_t i = 2; i < out.partial_integral.size(); ++i)
                if (!(out.partial_integral[i] > out.partial_integral[i - 1]))
                    out.partial_increasing = false;
            return out;
        }

        // tempered: sampled sup of |Delta B| at t_q
        double P = 0.0;
        for (int q = 0; q <= Q; ++q) {
            double t_q = sched.t_q(q);
            double sup = sup_laplacian(t_q);
            out.t.push_back(t_q);
            out.sup_curlJ.push_back(sup);
            out.partial_integral.push_back(P);
            double t_next = (q + 1 <= sched.max_stage())
                                ? sched.t_q(q + 1)
                                : 1.0 - std::exp(-0.5 * p.eps *
                                                 (sched.log_lambda(q) + std::log(p.tempered_ratio)));
            P += sup * (t_next - t_q);
            prev_sup = sup;
        }
        out.sup_increasing = true;
        for (std::size_t i = 2; i < out.sup_curlJ.size(); ++i)
            if (!(out.sup_curlJ[i] > out.sup_curlJ[i - 1])) out.sup_increasing = false;
        out.partial_increasing = true;
        for (std::size_t i = 2; i < out.partial_integral.size(); ++i)
            if (!(out.partial_integral[i] > out.partial_integral[i - 1]))
                out.partial_increasing = false;
        return out;
    }

private:
    struct KTab {
        double t_lo = 0.0;
        std::vector<double> vals;
    };
    const Cascade& c_;
    std::uint64_t seed_;
    mutable std::map<int, KTab> logK_tab_;
};

} // namespace emhd

#endif
