#include "facesim/contact/distance.hpp"

#include "facesim/contact/autodiff.hpp"

namespace facesim::contact {

namespace {

// scatter a reduced-variable result into the 12-slot layout; map lists the
// source point index (0..3) of each reduced point
template <int NP>
DistanceResult expand(const D2<3 * NP>& d, const std::array<int, NP>& map,
                      DistanceSubcase subcase) {
    DistanceResult out;
    out.d = d.v;
    out.subcase = subcase;
    for (int r = 0; r < NP; ++r) {
        out.grad.template segment<3>(3 * map[r]) = d.g.template segment<3>(3 * r);
        for (int c = 0; c < NP; ++c)
            out.hess.template block<3, 3>(3 * map[r], 3 * map[c]) =
                d.H.template block<3, 3>(3 * r, 3 * c);
    }
    return out;
}

DistanceResult point_point(const Vec3& p, const Vec3& q, int pi, int qi) {
    using S = D2<6>;
    const auto P = V3<6>::variables(p, 0);
    const auto Q = V3<6>::variables(q, 3);
    const S d = sqrt(squared_norm(P - Q));
    return expand<2>(d, {pi, qi}, DistanceSubcase::PointPoint);
}

DistanceResult point_edge(const Vec3& p, const Vec3& e0, const Vec3& e1, int pi, int e0i,
                          int e1i) {
    using S = D2<9>;
    const auto P = V3<9>::variables(p, 0);
    const auto E0 = V3<9>::variables(e0, 3);
    const auto E1 = V3<9>::variables(e1, 6);
    const S d = sqrt(squared_norm(cross(P - E0, E1 - E0)) / squared_norm(E1 - E0));
    return expand<3>(d, {pi, e0i, e1i}, DistanceSubcase::PointEdge);
}

DistanceResult point_face(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2) {
    using S = D2<12>;
    const auto P = V3<12>::variables(p, 0);
    const auto T0 = V3<12>::variables(t0, 3);
    const auto T1 = V3<12>::variables(t1, 6);
    const auto T2 = V3<12>::variables(t2, 9);
    const auto n = cross(T1 - T0, T2 - T0);
    const S h = dot(P - T0, n);
    const S d = sqrt(h * h / squared_norm(n));
    return expand<4>(d, {0, 1, 2, 3}, DistanceSubcase::PointInterior);
}

DistanceResult edge_edge_interior(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                  const Vec3& b1) {
    using S = D2<12>;
    const auto A0 = V3<12>::variables(a0, 0);
    const auto A1 = V3<12>::variables(a1, 3);
    const auto B0 = V3<12>::variables(b0, 6);
    const auto B1 = V3<12>::variables(b1, 9);
    const auto n = cross(A1 - A0, B1 - B0);
    const S h = dot(B0 - A0, n);
    const S d = sqrt(h * h / squared_norm(n));
    return expand<4>(d, {0, 1, 2, 3}, DistanceSubcase::EdgeEdgeInterior);
}

}  // namespace

DistanceResult vertex_triangle_distance(const Vec3& p, const Vec3& t0, const Vec3& t1,
                                        const Vec3& t2) {
    const Vec3 ab = t1 - t0, ac = t2 - t0;
    FS_CHECK(ab.cross(ac).norm() > 1e-12 * std::max(1.0, ab.norm() * ac.norm()),
             "degenerate triangle in distance query");

    // closest-feature classification (Ericson)
    const Vec3 ap = p - t0;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return point_point(p, t0, 0, 1);

    const Vec3 bp = p - t1;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return point_point(p, t1, 0, 2);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return point_edge(p, t0, t1, 0, 1, 2);

    const Vec3 cp = p - t2;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return point_point(p, t2, 0, 3);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return point_edge(p, t0, t2, 0, 1, 3);

    const double va = d3 * d6 - d4 * d5;
    if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) return point_edge(p, t1, t2, 0, 2, 3);

    return point_face(p, t0, t1, t2);
}

Vec3 closest_point_triangle_bary(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2) {
    const Vec3 ab = t1 - t0, ac = t2 - t0, ap = p - t0;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return Vec3(1, 0, 0);
    const Vec3 bp = p - t1;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return Vec3(0, 1, 0);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return Vec3(1.0 - v, v, 0);
    }
    const Vec3 cp = p - t2;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return Vec3(0, 0, 1);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return Vec3(1.0 - w, 0, w);
    }
    const double va = d3 * d6 - d4 * d5;
    if (va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return Vec3(0, 1.0 - w, w);
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return Vec3(1.0 - v - w, v, w);
}

Vec2 closest_segment_params(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    const Vec3 da = a1 - a0, db = b1 - b0, r = a0 - b0;
    const double a = da.squaredNorm(), e = db.squaredNorm();
    const double f = db.dot(r), c = da.dot(r), b = da.dot(db);
    const double denom = a * e - b * b;
    double s = 0.0;
    if (denom > 1e-12 * a * e) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
    double t = (b * s + f) / e;
    if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
    } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
    }
    return Vec2(s, t);
}

DistanceResult edge_edge_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0,
                                  const Vec3& b1) {
    const Vec3 da = a1 - a0, db = b1 - b0, r = a0 - b0;
    const double a = da.squaredNorm(), e = db.squaredNorm();
    FS_CHECK(a > 1e-24 && e > 1e-24, "degenerate edge in distance query");
    const double f = db.dot(r), c = da.dot(r), b = da.dot(db);
    const double denom = a * e - b * b;

    // closest parameters (s on edge a, t on edge b), clamped to [0,1]
    double s = 0.0;
    const bool parallel = denom <= 1e-12 * a * e;
    if (!parallel) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
    double t = (b * s + f) / e;
    if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
    } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
    }

    const bool s_end = (s == 0.0 || s == 1.0);
    const bool t_end = (t == 0.0 || t == 1.0);
    const int si = s == 0.0 ? 0 : 1;  // endpoint index on a
    const int ti = t == 0.0 ? 2 : 3;  // endpoint index on b
    const Vec3 pa = s == 0.0 ? a0 : a1;
    const Vec3 pb = t == 0.0 ? b0 : b1;

    if (s_end && t_end) return point_point(pa, pb, si, ti);
    if (s_end) return point_edge(pa, b0, b1, si, 2, 3);
    if (t_end) return point_edge(pb, a0, a1, ti, 0, 1);
    if (parallel) return point_edge(a0, b0, b1, 0, 2, 3);  // overlapping lines
    return edge_edge_interior(a0, a1, b0, b1);
}

}  // namespace facesim::contact
