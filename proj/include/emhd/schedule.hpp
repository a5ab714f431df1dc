#ifndef EMHD_SCHEDULE_HPP
#define EMHD_SCHEDULE_HPP

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "emhd/errors.hpp"
#include "emhd/expr.hpp"
#include "emhd/profiles.hpp"

namespace emhd {

// Frequency ladder. Exact-log mode stores only log lambda_q and advances by
// the closed-form doubling law (hyperbolic) or the power law (shear); the
// tempered mode advances geometrically so fields stay representable, while
// the construction-defined integral is recorded alongside for reporting.
class Schedule {
public:
    Schedule(const Params& p, Family fam) : params_(p), family_(fam) {
        log_lambda_.push_back(std::log(p.lambda));
        quad_log_.push_back(std::numeric_limits<double>::quiet_NaN());
    }

    const Params& params() const { return params_; }
    Family family() const { return family_; }
    int max_stage() const { return static_cast<int>(log_lambda_.size()) - 1; }

    double log_lambda(int q) const { return log_lambda_.at(static_cast<std::size_t>(q)); }

    bool representable(int q) const { return log_lambda(q) < 690.0; }

    double lambda(int q) const {
        if (!representable(q))
            throw OverflowError("lambda_" + std::to_string(q) + " exceeds the numeric range");
        return std::exp(log_lambda(q));
    }

    // lambda_q^e, guarded
    double lambda_pow(int q, double e) const {
        double l = e * log_lambda(q);
        if (l > 690.0) throw OverflowError("lambda power exceeds the numeric range");
        return std::exp(l);
    }

    // t_q = 1 - lambda_q^{-eps/2}; also the opening time of stage q+1
    double t_q(int q) const { return 1.0 - lambda_pow(q, -0.5 * params_.eps); }

    // closed-form advance; returns the new stage index
    int advance_closed_form() {
        double next;
        if (params_.mode == ScheduleMode::Tempered) {
            next = log_lambda_.back() + std::log(params_.tempered_ratio);
        } else if (family_ == Family::Shear) {
            next = params_.shear_base * log_lambda_.back();
        } else {
            // log lambda_{q+1} = 2 lambda_q^{2+gamma-eps/2}
            double e = (2.0 + params_.gamma - 0.5 * params_.eps) * log_lambda_.back();
            next = (e > 690.0) ? std::numeric_limits<double>::infinity() : 2.0 * std::exp(e);
        }
        log_lambda_.push_back(next);
        quad_log_.push_back(std::numeric_limits<double>::quiet_NaN());
        return max_stage();
    }

    void record_quadrature(int q, double log_lam) { quad_log_.at(static_cast<std::size_t>(q)) = log_lam; }
    double quadrature_log(int q) const { return quad_log_.at(static_cast<std::size_t>(q)); }

    // reported (not asserted): does the construction-defined ladder grow?
    std::vector<bool> growth_report() const {
        std::vector<bool> r;
        for (int q = 0; q + 1 <= max_stage(); ++q)
            r.push_back(log_lambda(q + 1) > log_lambda(q));
        return r;
    }

private:
    Params params_;
    Family family_;
    std::vector<double> log_lambda_;
    std::vector<double> quad_log_;
};

// Temporal cutoff g_q: off before 1 - lambda_{q-1}^{-eps/2}, ramps with slope
// lambda_q^{eps}, saturates at 1.
struct TemporalCutoff {
    int q = 0;
    std::shared_ptr<const RampSpec> ramp;

    double value(double t) const { return ramp->value(t); }
    double prime(double t) const { return ramp->deriv(t); }
    bool on_kink(double t, double tol = 0.0) const { return ramp->on_kink(t, tol); }
};

inline TemporalCutoff make_temporal_cutoff(const Schedule& sched, int q) {
    if (q < 1) throw InvalidParams("temporal cutoff indices start at stage 1");
    const double eps = sched.params().eps;
    double t_on = sched.t_q(q - 1);
    double slope_log = eps * sched.log_lambda(q);
    if (slope_log > 690.0)
        throw OverflowError("temporal cutoff slope exceeds the numeric range");
    double slope = std::exp(slope_log);
    auto spec = std::make_shared<RampSpec>();
    spec->t_on = t_on;
    spec->t_full = t_on + 1.0 / slope;
    spec->slope = slope;
    spec->mollified = sched.params().mollified_ramp;
    return TemporalCutoff{q, spec};
}

// value and one-sided slope at t; flags kink hits (left slope is returned)
inline double g_eval(const TemporalCutoff& g, double t) { return g.value(t); }
inline double g_prime(const TemporalCutoff& g, double t, bool* on_kink = nullptr) {
    if (on_kink) *on_kink = g.on_kink(t);
    return g.prime(t);
}

} // namespace emhd

#endif
