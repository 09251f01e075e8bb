#pragma once

#include "facesim/common.hpp"

namespace facesim::contact {

/// Forward-mode scalar carrying value, gradient and Hessian over N inputs.
/// Used for exact derivatives of the pairwise distance and friction
/// energies, where N is at most 12.
template <int N>
struct D2 {
    double v = 0.0;
    Eigen::Matrix<double, N, 1> g = Eigen::Matrix<double, N, 1>::Zero();
    Eigen::Matrix<double, N, N> H = Eigen::Matrix<double, N, N>::Zero();

    D2() = default;
    explicit D2(double value) : v(value) {}

    static D2 variable(double value, int index) {
        D2 out(value);
        out.g(index) = 1.0;
        return out;
    }
};

template <int N>
D2<N> operator+(const D2<N>& a, const D2<N>& b) {
    D2<N> out(a.v + b.v);
    out.g = a.g + b.g;
    out.H = a.H + b.H;
    return out;
}

template <int N>
D2<N> operator-(const D2<N>& a, const D2<N>& b) {
    D2<N> out(a.v - b.v);
    out.g = a.g - b.g;
    out.H = a.H - b.H;
    return out;
}

template <int N>
D2<N> operator-(const D2<N>& a) {
    D2<N> out(-a.v);
    out.g = -a.g;
    out.H = -a.H;
    return out;
}

template <int N>
D2<N> operator*(const D2<N>& a, const D2<N>& b) {
    D2<N> out(a.v * b.v);
    out.g = a.v * b.g + b.v * a.g;
    out.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
    return out;
}

template <int N>
D2<N> operator*(double s, const D2<N>& a) {
    D2<N> out(s * a.v);
    out.g = s * a.g;
    out.H = s * a.H;
    return out;
}

template <int N>
D2<N> operator/(const D2<N>& a, const D2<N>& b) {
    const double inv = 1.0 / b.v;
    D2<N> out(a.v * inv);
    out.g = inv * a.g - (a.v * inv * inv) * b.g;
    out.H = inv * a.H - (a.v * inv * inv) * b.H -
            inv * inv * (a.g * b.g.transpose() + b.g * a.g.transpose()) +
            (2.0 * a.v * inv * inv * inv) * b.g * b.g.transpose();
    return out;
}

template <int N>
D2<N> sqrt(const D2<N>& a) {
    const double r = std::sqrt(a.v);
    const double inv = 0.5 / r;
    D2<N> out(r);
    out.g = inv * a.g;
    out.H = inv * a.H - (0.25 / (r * a.v)) * a.g * a.g.transpose();
    return out;
}

template <int N>
D2<N> log(const D2<N>& a) {
    const double inv = 1.0 / a.v;
    D2<N> out(std::log(a.v));
    out.g = inv * a.g;
    out.H = inv * a.H - inv * inv * a.g * a.g.transpose();
    return out;
}

template <int N>
struct V3 {
    D2<N> x, y, z;

    static V3 variables(const Vec3& p, int base) {
        return {D2<N>::variable(p[0], base), D2<N>::variable(p[1], base + 1),
                D2<N>::variable(p[2], base + 2)};
    }
    static V3 constants(const Vec3& p) { return {D2<N>(p[0]), D2<N>(p[1]), D2<N>(p[2])}; }
};

template <int N>
V3<N> operator-(const V3<N>& a, const V3<N>& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <int N>
D2<N> dot(const V3<N>& a, const V3<N>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <int N>
V3<N> cross(const V3<N>& a, const V3<N>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <int N>
D2<N> squared_norm(const V3<N>& a) {
    return dot(a, a);
}

}  // namespace facesim::contact
