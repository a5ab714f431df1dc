#ifndef EMHD_GEOMETRY_HPP
#define EMHD_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace emhd {

enum class Axis : int { X = 0, Y = 1, Z = 2, T = 3 };

// Space-time evaluation point. Fields live on R^3 x [0,1].
struct Point {
    double x = 0.0, y = 0.0, z = 0.0, t = 0.0;

    double coord(Axis a) const {
        switch (a) {
            case Axis::X: return x;
            case Axis::Y: return y;
            case Axis::Z: return z;
            default: return t;
        }
    }
    Point shifted(Axis a, double h) const {
        Point p = *this;
        switch (a) {
            case Axis::X: p.x += h; break;
            case Axis::Y: p.y += h; break;
            case Axis::Z: p.z += h; break;
            default: p.t += h; break;
        }
        return p;
    }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(t);
    }
};

using Vec3 = std::array<double, 3>;

inline double norm_inf(const Vec3& v) {
    return std::max(std::fabs(v[0]), std::max(std::fabs(v[1]), std::fabs(v[2])));
}

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 operator*(double s, const Vec3& a) {
    return {s * a[0], s * a[1], s * a[2]};
}

} // namespace emhd

#endif
