#ifndef EMHD_HOLDER_HPP
#define EMHD_HOLDER_HPP

#include <cmath>
#include <vector>

#include "emhd/errors.hpp"
#include "emhd/expr.hpp"
#include "emhd/parallel.hpp"

namespace emhd {

struct HolderBox {
    double x_half = 1.0, y_half = 1.0;
    double x0 = 0.0, y0 = 0.0;
    double t = 1.0;
};

struct HolderSpec {
    int n_fine = 2048;     // samples per scan line
    int n_lines = 8;       // scan lines per direction
    double freq_hint = 0.0; // expected max spatial frequency, Nyquist guard
};

// Grid/line estimate of the C^{k,beta} norm at a fixed time: sup of the
// derivatives up to order k plus the beta-seminorm of the order-k
// derivatives over dyadic pair separations down to the line step. This is a
// lower estimate of the true norm; the sampling grid is part of the report.
inline double holder_estimate(const ScalarExpr& f, int k, double beta, const HolderBox& box,
                              const HolderSpec& spec) {
    if (k < 0 || k > 2) throw UnsupportedOrder("holder_estimate: k must be 0, 1 or 2");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidParams("holder_estimate: beta must be in (0,1)");
    const double step_x = 2.0 * box.x_half / (spec.n_fine - 1);
    const double step_y = 2.0 * box.y_half / (spec.n_fine - 1);
    if (spec.freq_hint > 0.0 && spec.freq_hint * std::max(step_x, step_y) > 0.8)
        throw GridTooCoarse("holder_estimate: field frequency exceeds the grid Nyquist limit");

    // derivative fields of order exactly k, and all lower ones for the sup
    std::vector<ScalarExpr> top;
    std::vector<ScalarExpr> lower;
    if (k == 0) {
        top.push_back(f);
    } else if (k == 1) {
        lower.push_back(f);
        top.push_back(partial(f, Axis::X));
        top.push_back(partial(f, Axis::Y));
    } else {
        lower.push_back(f);
        ScalarExpr fx = partial(f, Axis::X), fy = partial(f, Axis::Y);
        lower.push_back(fx);
        lower.push_back(fy);
        top.push_back(partial(fx, Axis::X));
        top.push_back(partial(fx, Axis::Y));
        top.push_back(partial(fy, Axis::Y));
    }

    double sup = 0.0, semi = 0.0;

    auto scan = [&](bool along_x, int line, const ScalarExpr& g, bool want_semi) {
        double off = (spec.n_lines == 1)
                         ? 0.0
                         : -1.0 + 2.0 * static_cast<double>(line) / (spec.n_lines - 1);
        std::vector<double> vals(static_cast<std::size_t>(spec.n_fine));
        EvalCache ws;
        for (int i = 0; i < spec.n_fine; ++i) {
            double s = -1.0 + 2.0 * static_cast<double>(i) / (spec.n_fine - 1);
            Point p;
            p.t = box.t;
            if (along_x) {
                p.x = box.x0 + s * box.x_half;
                p.y = box.y0 + off * box.y_half;
            } else {
                p.x = box.x0 + off * box.x_half;
                p.y = box.y0 + s * box.y_half;
            }
            ws.clear();
            vals[static_cast<std::size_t>(i)] = g.eval(p, ws);
        }
        double lsup = 0.0, lsemi = 0.0;
        for (double v : vals) lsup = std::max(lsup, std::fabs(v));
        if (want_semi) {
            double h = along_x ? step_x : step_y;
            for (int sep = 1; sep < spec.n_fine; sep *= 2) {
                double dist = std::pow(h * sep, beta);
                for (int i = 0; i + sep < spec.n_fine; ++i) {
                    double d = std::fabs(vals[static_cast<std::size_t>(i + sep)] -
                                         vals[static_cast<std::size_t>(i)]);
                    lsemi = std::max(lsemi, d / dist);
                }
            }
        }
        return std::pair<double, double>(lsup, lsemi);
    };

    for (const auto& g : top) {
        auto res = parallel_map<std::pair<double, double>>(
            static_cast<std::size_t>(2 * spec.n_lines), [&](std::size_t li) {
                bool along_x = li < static_cast<std::size_t>(spec.n_lines);
                int line = static_cast<int>(along_x ? li : li - static_cast<std::size_t>(spec.n_lines));
                return scan(along_x, line, g, true);
            });
        for (auto& r : res) {
            sup = std::max(sup, r.first);
            semi = std::max(semi, r.second);
        }
    }
    for (const auto& g : lower) {
        auto res = parallel_map<std::pair<double, double>>(
            static_cast<std::size_t>(2 * spec.n_lines), [&](std::size_t li) {
                bool along_x = li < static_cast<std::size_t>(spec.n_lines);
                int line = static_cast<int>(along_x ? li : li - static_cast<std::size_t>(spec.n_lines));
                return scan(along_x, line, g, false);
            });
        for (auto& r : res) sup = std::max(sup, r.first);
    }
    return sup + semi;
}

inline double holder_estimate_vec(const VectorExpr& v, int k, double beta, const HolderBox& box,
                                  const HolderSpec& spec) {
    double best = 0.0;
    for (int i = 0; i < 3; ++i) {
        const ScalarExpr& comp = v[i];
        if (is_const(comp, 0.0)) continue;
        best = std::max(best, holder_estimate(comp, k, beta, box, spec));
    }
    return best;
}

} // namespace emhd

#endif
