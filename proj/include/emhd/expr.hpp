#ifndef EMHD_EXPR_HPP
#define EMHD_EXPR_HPP

#include <cmath>
#include <memory>
#include <unordered_map>

#include "emhd/cutoff.hpp"
#include "emhd/errors.hpp"
#include "emhd/geometry.hpp"

namespace emhd {

class FlowField;

// Flow data of the map phi(x,t,1) for a drift of the form
// V = (x*alpha(y,t), beta(y,t), 0):
//   v = phi^2(y,t,1)
//   L = log(phi^1(x,t,1) / x)   (x-independent by linearity)
//   m = log d_y phi^2(y,t,1)
//   G = d_y L
struct FlowData {
    double v = 0.0, L = 0.0, m = 0.0, G = 0.0;
};

// Central differences of (m, G) in the base point y, Richardson-checked.
struct FlowSecond {
    double m_y = 0.0, G_y = 0.0;
};

// Per-point evaluation workspace. Flow queries repeat many times while one
// expression tree is evaluated at one point; cache them by exact key.
struct EvalCache {
    struct Key {
        const void* fm;
        double y, t;
        int variant;
        bool operator==(const Key& o) const {
            return fm == o.fm && y == o.y && t == o.t && variant == o.variant;
        }
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            auto mix = [](std::size_t h, std::size_t v) {
                return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
            };
            std::size_t h = std::hash<const void*>()(k.fm);
            h = mix(h, std::hash<double>()(k.y));
            h = mix(h, std::hash<double>()(k.t));
            h = mix(h, std::hash<int>()(k.variant));
            return h;
        }
    };
    std::unordered_map<Key, FlowData, KeyHash> flow;
    std::unordered_map<Key, FlowSecond, KeyHash> second;

    void clear() {
        flow.clear();
        second.clear();
    }
};

// Piecewise-linear temporal ramp: 0 before t_on, 1 after t_full,
// slope*(t - t_on) between. The optional mollified variant replaces the
// linear segment by s^2(3-2s). Kink times return the left slope.
struct RampSpec {
    double t_on = 0.0;
    double t_full = 1.0;
    double slope = 1.0;
    bool mollified = false;

    double value(double t) const {
        if (t <= t_on) return 0.0;
        if (t >= t_full) return 1.0;
        double s = (t - t_on) * slope;
        if (s >= 1.0) return 1.0;
        return mollified ? s * s * (3.0 - 2.0 * s) : s;
    }
    double deriv(double t) const {
        if (t <= t_on || t > t_full) return 0.0;
        double s = (t - t_on) * slope;
        if (s > 1.0) return 0.0;
        return mollified ? 6.0 * s * (1.0 - s) * slope : slope;
    }
    bool on_kink(double t, double tol) const {
        return std::fabs(t - t_on) <= tol || std::fabs(t - t_full) <= tol;
    }
};

enum class NodeKind {
    Const,
    Coord,
    Add,
    Sub,
    Mul,
    Neg,
    Abs,
    Sin,
    Cos,
    Exp,
    Pow,
    Cutoff,
    CutoffD,
    Ramp,
    RampD,
    PinXZ,
    Pullback,
    FlowStretch,   // e^L  = d phi^1 / dx
    FlowContract,  // e^m  = d phi^2 / dy
    FlowGrad,      // G    = d_y L
    FlowContractY, // d_y e^m
    FlowGradY      // d_y G
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;
    Axis axis = Axis::X;
    int ideg = 0; // CutoffD order / Pow exponent
    NodePtr a, b;
    std::shared_ptr<const RampSpec> ramp;
    std::shared_ptr<const FlowField> fm;
    bool via_table = false;
};

class ScalarExpr {
public:
    ScalarExpr() = default;
    explicit ScalarExpr(NodePtr n) : node_(std::move(n)) {}

    const NodePtr& node() const { return node_; }
    bool valid() const { return node_ != nullptr; }

    double eval(const Point& p, EvalCache& ws) const;

private:
    NodePtr node_;
};

// Drift interface exposed to expression nodes. Implemented by FlowMap.
class FlowField {
public:
    virtual ~FlowField() = default;
    virtual FlowData flow_to_one(double y, double t, EvalCache& ws, bool via_table) const = 0;
    virtual FlowSecond flow_second(double y, double t, EvalCache& ws, bool via_table) const = 0;
    virtual const ScalarExpr& drift_alpha() const = 0;
    virtual const ScalarExpr& drift_beta() const = 0;
};

// ---- smart constructors (fold constants aggressively) ----

inline ScalarExpr constant(double c) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Const;
    n->value = c;
    return ScalarExpr(n);
}

inline ScalarExpr coord(Axis a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Coord;
    n->axis = a;
    return ScalarExpr(n);
}

inline bool is_const(const ScalarExpr& e, double v) {
    return e.node()->kind == NodeKind::Const && e.node()->value == v;
}
inline bool is_const(const ScalarExpr& e) { return e.node()->kind == NodeKind::Const; }
inline double const_value(const ScalarExpr& e) { return e.node()->value; }

inline ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
    if (is_const(a) && is_const(b)) return constant(const_value(a) + const_value(b));
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Add;
    n->a = a.node();
    n->b = b.node();
    return ScalarExpr(n);
}

inline ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) {
    if (is_const(a) && is_const(b)) return constant(const_value(a) - const_value(b));
    if (is_const(b, 0.0)) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Sub;
    n->a = a.node();
    n->b = b.node();
    return ScalarExpr(n);
}

inline ScalarExpr operator-(const ScalarExpr& a) {
    if (is_const(a)) return constant(-const_value(a));
    if (a.node()->kind == NodeKind::Neg) return ScalarExpr(a.node()->a);
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Neg;
    n->a = a.node();
    return ScalarExpr(n);
}

inline ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
    if (is_const(a) && is_const(b)) return constant(const_value(a) * const_value(b));
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Mul;
    n->a = a.node();
    n->b = b.node();
    return ScalarExpr(n);
}

inline ScalarExpr operator*(double c, const ScalarExpr& b) { return constant(c) * b; }

namespace detail {
inline ScalarExpr unary(NodeKind k, const ScalarExpr& a, int ideg = 0) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = a.node();
    n->ideg = ideg;
    return ScalarExpr(n);
}
} // namespace detail

inline ScalarExpr abs_of(const ScalarExpr& a) {
    if (is_const(a)) return constant(std::fabs(const_value(a)));
    return detail::unary(NodeKind::Abs, a);
}
inline ScalarExpr sin_of(const ScalarExpr& a) {
    if (is_const(a)) return constant(std::sin(const_value(a)));
    return detail::unary(NodeKind::Sin, a);
}
inline ScalarExpr cos_of(const ScalarExpr& a) {
    if (is_const(a)) return constant(std::cos(const_value(a)));
    return detail::unary(NodeKind::Cos, a);
}
inline ScalarExpr exp_of(const ScalarExpr& a) {
    if (is_const(a)) return constant(std::exp(const_value(a)));
    return detail::unary(NodeKind::Exp, a);
}
inline ScalarExpr pow_i(const ScalarExpr& a, int n) {
    if (n == 0) return constant(1.0);
    if (n == 1) return a;
    if (is_const(a)) return constant(std::pow(const_value(a), n));
    return detail::unary(NodeKind::Pow, a, n);
}
inline ScalarExpr cutoff_of(const ScalarExpr& a) {
    if (is_const(a)) return constant(cutoff_eval(const_value(a)));
    return detail::unary(NodeKind::Cutoff, a);
}
inline ScalarExpr cutoff_deriv_of(const ScalarExpr& a, int k) {
    if (k == 0) return cutoff_of(a);
    if (is_const(a)) return constant(cutoff_deriv(const_value(a), static_cast<std::size_t>(k)));
    return detail::unary(NodeKind::CutoffD, a, k);
}
inline ScalarExpr ramp_expr(std::shared_ptr<const RampSpec> r) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Ramp;
    n->ramp = std::move(r);
    return ScalarExpr(n);
}
inline ScalarExpr ramp_deriv_expr(std::shared_ptr<const RampSpec> r) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::RampD;
    n->ramp = std::move(r);
    return ScalarExpr(n);
}
inline ScalarExpr pin_xz(const ScalarExpr& a) {
    if (is_const(a)) return a;
    return detail::unary(NodeKind::PinXZ, a);
}
inline ScalarExpr flow_pullback(std::shared_ptr<const FlowField> fm, const ScalarExpr& target,
                                bool via_table) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Pullback;
    n->fm = std::move(fm);
    n->a = target.node();
    n->via_table = via_table;
    return ScalarExpr(n);
}
inline ScalarExpr flow_node(NodeKind k, std::shared_ptr<const FlowField> fm, bool via_table) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->fm = std::move(fm);
    n->via_table = via_table;
    return ScalarExpr(n);
}

// ---- evaluation ----

namespace detail {

inline double eval_node(const Node* n, const Point& p, EvalCache& ws);

inline double pullback_arg_u(const FlowData& d, double x) {
    if (x == 0.0) return 0.0;
    if (d.L > 700.0) {
        double lu = std::log(std::fabs(x)) + d.L;
        if (lu > 700.0) return x > 0.0 ? HUGE_VAL : -HUGE_VAL;
        return (x > 0.0 ? 1.0 : -1.0) * std::exp(lu);
    }
    return x * std::exp(d.L);
}

inline double eval_node(const Node* n, const Point& p, EvalCache& ws) {
    switch (n->kind) {
        case NodeKind::Const: return n->value;
        case NodeKind::Coord: return p.coord(n->axis);
        case NodeKind::Add: return eval_node(n->a.get(), p, ws) + eval_node(n->b.get(), p, ws);
        case NodeKind::Sub: return eval_node(n->a.get(), p, ws) - eval_node(n->b.get(), p, ws);
        case NodeKind::Mul: {
            // Exact-zero factors annihilate the product even if the partner
            // overflowed or lost meaning; zeros here come from compact
            // supports, which bound the true product by zero.
            double va = eval_node(n->a.get(), p, ws);
            if (va == 0.0) return 0.0;
            double vb = eval_node(n->b.get(), p, ws);
            if (vb == 0.0) return 0.0;
            return va * vb;
        }
        case NodeKind::Neg: return -eval_node(n->a.get(), p, ws);
        case NodeKind::Abs: return std::fabs(eval_node(n->a.get(), p, ws));
        case NodeKind::Sin: return std::sin(eval_node(n->a.get(), p, ws));
        case NodeKind::Cos: return std::cos(eval_node(n->a.get(), p, ws));
        case NodeKind::Exp: return std::exp(eval_node(n->a.get(), p, ws));
        case NodeKind::Pow: {
            double v = eval_node(n->a.get(), p, ws);
            double r = v;
            for (int i = 1; i < n->ideg; ++i) r *= v;
            return r;
        }
        case NodeKind::Cutoff: return cutoff_eval(eval_node(n->a.get(), p, ws));
        case NodeKind::CutoffD:
            return cutoff_deriv(eval_node(n->a.get(), p, ws), static_cast<std::size_t>(n->ideg));
        case NodeKind::Ramp: return n->ramp->value(p.t);
        case NodeKind::RampD: return n->ramp->deriv(p.t);
        case NodeKind::PinXZ: {
            Point q{0.0, p.y, 0.0, p.t};
            return eval_node(n->a.get(), q, ws);
        }
        case NodeKind::Pullback: {
            FlowData d = n->fm->flow_to_one(p.y, p.t, ws, n->via_table);
            Point q{pullback_arg_u(d, p.x), d.v, p.z, 1.0};
            return eval_node(n->a.get(), q, ws);
        }
        case NodeKind::FlowStretch: {
            FlowData d = n->fm->flow_to_one(p.y, p.t, ws, n->via_table);
            return std::exp(d.L);
        }
        case NodeKind::FlowContract: {
            FlowData d = n->fm->flow_to_one(p.y, p.t, ws, n->via_table);
            return std::exp(d.m);
        }
        case NodeKind::FlowGrad: {
            FlowData d = n->fm->flow_to_one(p.y, p.t, ws, n->via_table);
            return d.G;
        }
        case NodeKind::FlowContractY: {
            FlowData d = n->fm->flow_to_one(p.y, p.t, ws, n->via_table);
            FlowSecond s = n->fm->flow_second(p.y, p.t, ws, n->via_table);
            return std::exp(d.m) * s.m_y;
        }
        case NodeKind::FlowGradY: {
            FlowSecond s = n->fm->flow_second(p.y, p.t, ws, n->via_table);
            return s.G_y;
        }
    }
    return 0.0;
}

} // namespace detail

inline double ScalarExpr::eval(const Point& p, EvalCache& ws) const {
    return detail::eval_node(node_.get(), p, ws);
}

// ---- symbolic partial derivatives ----

namespace detail {

inline ScalarExpr partial_expr(const ScalarExpr& e, Axis ax);

inline ScalarExpr wrap(NodePtr n) { return ScalarExpr(std::move(n)); }

inline ScalarExpr partial_node(const NodePtr& n, Axis ax) {
    switch (n->kind) {
        case NodeKind::Const: return constant(0.0);
        case NodeKind::Coord: return constant(n->axis == ax ? 1.0 : 0.0);
        case NodeKind::Add: return partial_expr(wrap(n->a), ax) + partial_expr(wrap(n->b), ax);
        case NodeKind::Sub: return partial_expr(wrap(n->a), ax) - partial_expr(wrap(n->b), ax);
        case NodeKind::Mul:
            return partial_expr(wrap(n->a), ax) * wrap(n->b) +
                   wrap(n->a) * partial_expr(wrap(n->b), ax);
        case NodeKind::Neg: return -partial_expr(wrap(n->a), ax);
        case NodeKind::Abs:
            throw UnsupportedOrder("partial: |.| appears only in magnitude scales");
        case NodeKind::Sin: return cos_of(wrap(n->a)) * partial_expr(wrap(n->a), ax);
        case NodeKind::Cos: return -(sin_of(wrap(n->a)) * partial_expr(wrap(n->a), ax));
        case NodeKind::Exp: return exp_of(wrap(n->a)) * partial_expr(wrap(n->a), ax);
        case NodeKind::Pow:
            return constant(static_cast<double>(n->ideg)) * pow_i(wrap(n->a), n->ideg - 1) *
                   partial_expr(wrap(n->a), ax);
        case NodeKind::Cutoff:
            return cutoff_deriv_of(wrap(n->a), 1) * partial_expr(wrap(n->a), ax);
        case NodeKind::CutoffD:
            return cutoff_deriv_of(wrap(n->a), n->ideg + 1) * partial_expr(wrap(n->a), ax);
        case NodeKind::Ramp:
            return ax == Axis::T ? ramp_deriv_expr(n->ramp) : constant(0.0);
        case NodeKind::RampD:
            // piecewise constant; derivative vanishes away from kinks
            return constant(0.0);
        case NodeKind::PinXZ:
            if (ax == Axis::X || ax == Axis::Z) return constant(0.0);
            return pin_xz(partial_expr(wrap(n->a), ax));
        case NodeKind::Pullback: {
            ScalarExpr self = wrap(n);
            auto stretch = flow_node(NodeKind::FlowStretch, n->fm, n->via_table);
            auto contract = flow_node(NodeKind::FlowContract, n->fm, n->via_table);
            auto grad = flow_node(NodeKind::FlowGrad, n->fm, n->via_table);
            ScalarExpr tgt = wrap(n->a);
            auto pb = [&](const ScalarExpr& g) { return flow_pullback(n->fm, g, n->via_table); };
            switch (ax) {
                case Axis::X:
                    return pb(partial_expr(tgt, Axis::X)) * stretch;
                case Axis::Y:
                    return pb(partial_expr(tgt, Axis::X)) * (coord(Axis::X) * stretch * grad) +
                           pb(partial_expr(tgt, Axis::Y)) * contract;
                case Axis::Z:
                    return pb(partial_expr(tgt, Axis::Z));
                default: {
                    // d_t of a backward pullback equals transport by the drift:
                    // d_t (G o phi) = V . grad (G o phi)
                    const ScalarExpr& alpha = n->fm->drift_alpha();
                    const ScalarExpr& beta = n->fm->drift_beta();
                    return coord(Axis::X) * alpha * partial_node(n, Axis::X) +
                           beta * partial_node(n, Axis::Y);
                }
            }
        }
        case NodeKind::FlowStretch:
            if (ax == Axis::Y)
                return wrap(n) * flow_node(NodeKind::FlowGrad, n->fm, n->via_table);
            if (ax == Axis::X || ax == Axis::Z) return constant(0.0);
            throw UnsupportedOrder("time derivative of flow Jacobian data is not available");
        case NodeKind::FlowContract:
            if (ax == Axis::Y) return flow_node(NodeKind::FlowContractY, n->fm, n->via_table);
            if (ax == Axis::X || ax == Axis::Z) return constant(0.0);
            throw UnsupportedOrder("time derivative of flow Jacobian data is not available");
        case NodeKind::FlowGrad:
            if (ax == Axis::Y) return flow_node(NodeKind::FlowGradY, n->fm, n->via_table);
            if (ax == Axis::X || ax == Axis::Z) return constant(0.0);
            throw UnsupportedOrder("time derivative of flow Jacobian data is not available");
        case NodeKind::FlowContractY:
        case NodeKind::FlowGradY:
            if (ax == Axis::X || ax == Axis::Z) return constant(0.0);
            throw UnsupportedOrder("flow-map spatial derivatives are capped at order 2");
    }
    return constant(0.0);
}

inline ScalarExpr partial_expr(const ScalarExpr& e, Axis ax) { return partial_node(e.node(), ax); }

inline bool has_flow_node(const Node* n) {
    if (!n) return false;
    switch (n->kind) {
        case NodeKind::Pullback:
        case NodeKind::FlowStretch:
        case NodeKind::FlowContract:
        case NodeKind::FlowGrad:
        case NodeKind::FlowContractY:
        case NodeKind::FlowGradY: return true;
        default: break;
    }
    return has_flow_node(n->a.get()) || has_flow_node(n->b.get());
}

} // namespace detail

inline bool has_flow(const ScalarExpr& e) { return detail::has_flow_node(e.node().get()); }

inline ScalarExpr partial(const ScalarExpr& e, Axis ax, int order = 1) {
    if (order > 2 && has_flow(e))
        throw UnsupportedOrder("partial: order above 2 through flow-map nodes");
    ScalarExpr r = e;
    for (int i = 0; i < order; ++i) r = detail::partial_expr(r, ax);
    return r;
}

// ---- vector fields ----

struct VectorExpr {
    std::array<ScalarExpr, 3> c;

    const ScalarExpr& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
    ScalarExpr& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

    Vec3 eval(const Point& p, EvalCache& ws) const {
        return {c[0].eval(p, ws), c[1].eval(p, ws), c[2].eval(p, ws)};
    }
};

inline VectorExpr vec(const ScalarExpr& a, const ScalarExpr& b, const ScalarExpr& cc) {
    return VectorExpr{{a, b, cc}};
}

inline VectorExpr zero_vector() { return vec(constant(0.0), constant(0.0), constant(0.0)); }

inline VectorExpr operator+(const VectorExpr& a, const VectorExpr& b) {
    return vec(a[0] + b[0], a[1] + b[1], a[2] + b[2]);
}
inline VectorExpr operator-(const VectorExpr& a, const VectorExpr& b) {
    return vec(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}
inline VectorExpr operator*(const ScalarExpr& s, const VectorExpr& a) {
    return vec(s * a[0], s * a[1], s * a[2]);
}

inline VectorExpr curl(const VectorExpr& v) {
    return vec(partial(v[2], Axis::Y) - partial(v[1], Axis::Z),
               partial(v[0], Axis::Z) - partial(v[2], Axis::X),
               partial(v[1], Axis::X) - partial(v[0], Axis::Y));
}

inline ScalarExpr div(const VectorExpr& v) {
    return partial(v[0], Axis::X) + partial(v[1], Axis::Y) + partial(v[2], Axis::Z);
}

// (u . grad) v, componentwise
inline VectorExpr advect(const VectorExpr& u, const VectorExpr& v) {
    VectorExpr r;
    for (int i = 0; i < 3; ++i)
        r[i] = u[0] * partial(v[i], Axis::X) + u[1] * partial(v[i], Axis::Y) +
               u[2] * partial(v[i], Axis::Z);
    return r;
}

// magnitude envelope of (u . grad) v, for normalizing identity residuals
inline VectorExpr advect_mag(const VectorExpr& u, const VectorExpr& v) {
    VectorExpr r;
    for (int i = 0; i < 3; ++i)
        r[i] = abs_of(u[0]) * abs_of(partial(v[i], Axis::X)) +
               abs_of(u[1]) * abs_of(partial(v[i], Axis::Y)) +
               abs_of(u[2]) * abs_of(partial(v[i], Axis::Z));
    return r;
}

inline VectorExpr cross(const VectorExpr& a, const VectorExpr& b) {
    return vec(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
}

// curl((curl B) x B), assembled directly
inline VectorExpr hall_term(const VectorExpr& B) { return curl(cross(curl(B), B)); }

// the same quantity through the transport/stretching split B.grad J - J.grad B
inline VectorExpr hall_term_split(const VectorExpr& B) {
    VectorExpr J = curl(B);
    return advect(B, J) - advect(J, B);
}

} // namespace emhd

#endif
