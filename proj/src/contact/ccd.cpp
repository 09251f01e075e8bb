#include "facesim/contact/ccd.hpp"

#include <unordered_map>
#include <unordered_set>

namespace facesim::contact {

namespace {

double poly(double c3, double c2, double c1, double c0, double t) {
    return ((c3 * t + c2) * t + c1) * t + c0;
}

// bisection on a bracketed sign change, then Newton polish
double refine_root(double c3, double c2, double c1, double c0, double lo, double hi) {
    double flo = poly(c3, c2, c1, c0, lo);
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = poly(c3, c2, c1, c0, mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> cubic_roots_unit_interval(double c3, double c2, double c1, double c0) {
    const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
    std::vector<double> roots;
    if (scale == 0.0) return roots;  // identically zero handled by the caller's proximity test
    c3 /= scale;
    c2 /= scale;
    c1 /= scale;
    c0 /= scale;

    // split [0,1] at the extrema of the cubic
    std::vector<double> knots = {0.0, 1.0};
    const double qa = 3.0 * c3, qb = 2.0 * c2, qc = c1;
    if (std::abs(qa) > 1e-300) {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            for (double r : {(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)})
                if (r > 0.0 && r < 1.0) knots.push_back(r);
        }
    } else if (std::abs(qb) > 1e-300) {
        const double r = -qc / qb;
        if (r > 0.0 && r < 1.0) knots.push_back(r);
    }
    std::sort(knots.begin(), knots.end());

    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = knots[i], hi = knots[i + 1];
        const double flo = poly(c3, c2, c1, c0, lo), fhi = poly(c3, c2, c1, c0, hi);
        if (flo == 0.0) {
            if (roots.empty() || std::abs(roots.back() - lo) > 1e-12) roots.push_back(lo);
        } else if ((flo < 0.0) != (fhi < 0.0)) {
            roots.push_back(refine_root(c3, c2, c1, c0, lo, hi));
        } else if (fhi == 0.0 && i + 2 == knots.size()) {
            roots.push_back(hi);
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

namespace {

Vec3 at(const VecX& p, int v) { return p.segment<3>(3 * v); }

struct SweptGrid {
    double cell = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets;

    static std::uint64_t key(int i, int j, int k) {
        const auto h = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)); };
        return (h(i) * 73856093ull) ^ (h(j) * 19349663ull) ^ (h(k) * 83492791ull);
    }
    void insert(int id, Vec3 lo, Vec3 hi) {
        for (int k = static_cast<int>(std::floor(lo[2] / cell));
             k <= static_cast<int>(std::floor(hi[2] / cell)); ++k)
            for (int j = static_cast<int>(std::floor(lo[1] / cell));
                 j <= static_cast<int>(std::floor(hi[1] / cell)); ++j)
                for (int i = static_cast<int>(std::floor(lo[0] / cell));
                     i <= static_cast<int>(std::floor(hi[0] / cell)); ++i)
                    buckets[key(i, j, k)].push_back(id);
    }
    template <typename F>
    void query(Vec3 lo, Vec3 hi, F&& visit) const {
        for (int k = static_cast<int>(std::floor(lo[2] / cell));
             k <= static_cast<int>(std::floor(hi[2] / cell)); ++k)
            for (int j = static_cast<int>(std::floor(lo[1] / cell));
                 j <= static_cast<int>(std::floor(hi[1] / cell)); ++j)
                for (int i = static_cast<int>(std::floor(lo[0] / cell));
                     i <= static_cast<int>(std::floor(hi[0] / cell)); ++i) {
                    auto it = buckets.find(key(i, j, k));
                    if (it == buckets.end()) continue;
                    for (int id : it->second) visit(id);
                }
    }
};

// coplanarity polynomial coefficients for dot(w(t), cross(u(t), v(t))) with
// linear u, v, w
void coplanarity_cubic(const Vec3& u0, const Vec3& du, const Vec3& v0, const Vec3& dv,
                       const Vec3& w0, const Vec3& dw, double out[4]) {
    // cross(u, v)(t) = c0 + c1 t + c2 t^2
    const Vec3 c0 = u0.cross(v0);
    const Vec3 c1 = u0.cross(dv) + du.cross(v0);
    const Vec3 c2 = du.cross(dv);
    out[0] = w0.dot(c0);
    out[1] = w0.dot(c1) + dw.dot(c0);
    out[2] = w0.dot(c2) + dw.dot(c1);
    out[3] = dw.dot(c2);
}

double vt_distance_at(const VecX& p0, const VecX& p1, int v, const std::array<int, 3>& tri,
                      double t) {
    auto lerp = [&](int i) { return Vec3((1.0 - t) * at(p0, i) + t * at(p1, i)); };
    return vertex_triangle_distance(lerp(v), lerp(tri[0]), lerp(tri[1]), lerp(tri[2])).d;
}

double ee_distance_at(const VecX& p0, const VecX& p1, const std::array<int, 2>& ea,
                      const std::array<int, 2>& eb, double t) {
    auto lerp = [&](int i) { return Vec3((1.0 - t) * at(p0, i) + t * at(p1, i)); };
    return edge_edge_distance(lerp(ea[0]), lerp(ea[1]), lerp(eb[0]), lerp(eb[1])).d;
}

}  // namespace

double ccd_max_step(const ContactProxy& proxy, const VecX& p_start, const VecX& p_end) {
    FS_CHECK(p_start.size() == 3 * proxy.vertex_count() && p_end.size() == p_start.size(),
             "ccd position size mismatch");
    double diag = 1e-12;
    for (int v = 0; v < proxy.vertex_count(); ++v)
        for (int w = v + 1; w < proxy.vertex_count(); ++w)
            diag = std::max(diag, (at(p_start, v) - at(p_start, w)).squaredNorm());
    diag = std::sqrt(diag);
    const double prox_tol = 1e-9 * diag;
    double edge_len = 0.0;
    for (const auto& e : proxy.edges)
        edge_len += (at(p_start, e[0]) - at(p_start, e[1])).norm() +
                    (at(p_end, e[0]) - at(p_start, e[0])).norm();
    if (!proxy.edges.empty()) edge_len /= static_cast<double>(proxy.edges.size());
    const double cell = std::max({1e-12, 0.05 * diag, edge_len});

    double toi = std::numeric_limits<double>::infinity();
    auto consider = [&](double t) { toi = std::min(toi, t); };

    // vertex-triangle
    SweptGrid tri_grid;
    tri_grid.cell = cell;
    for (std::size_t t = 0; t < proxy.triangles.size(); ++t) {
        if (!proxy.tri_mask[t]) continue;
        Vec3 lo = at(p_start, proxy.triangles[t][0]), hi = lo;
        for (int v : proxy.triangles[t]) {
            lo = lo.cwiseMin(at(p_start, v)).cwiseMin(at(p_end, v));
            hi = hi.cwiseMax(at(p_start, v)).cwiseMax(at(p_end, v));
        }
        tri_grid.insert(static_cast<int>(t), lo, hi);
    }
    for (int v = 0; v < proxy.vertex_count(); ++v) {
        if (!proxy.vert_mask[v]) continue;
        const Vec3 lo = at(p_start, v).cwiseMin(at(p_end, v));
        const Vec3 hi = at(p_start, v).cwiseMax(at(p_end, v));
        std::unordered_set<int> seen;
        tri_grid.query(Vec3(lo.array() - prox_tol), Vec3(hi.array() + prox_tol), [&](int ti) {
            if (!seen.insert(ti).second) return;
            const auto& tri = proxy.triangles[ti];
            if (tri[0] == v || tri[1] == v || tri[2] == v) return;
            const Vec3 u0 = at(p_start, tri[1]) - at(p_start, tri[0]);
            const Vec3 du = (at(p_end, tri[1]) - at(p_end, tri[0])) - u0;
            const Vec3 v0 = at(p_start, tri[2]) - at(p_start, tri[0]);
            const Vec3 dv = (at(p_end, tri[2]) - at(p_end, tri[0])) - v0;
            const Vec3 w0 = at(p_start, v) - at(p_start, tri[0]);
            const Vec3 dw = (at(p_end, v) - at(p_end, tri[0])) - w0;
            double c[4];
            coplanarity_cubic(u0, du, v0, dv, w0, dw, c);
            for (double root : cubic_roots_unit_interval(c[3], c[2], c[1], c[0])) {
                if (root >= toi) break;
                if (vt_distance_at(p_start, p_end, v, tri, root) < prox_tol) {
                    FS_CHECK(root > 1e-12, "ccd: start state already intersecting");
                    consider(root);
                    break;
                }
            }
        });
    }

    // edge-edge
    SweptGrid edge_grid;
    edge_grid.cell = cell;
    for (std::size_t e = 0; e < proxy.edges.size(); ++e) {
        if (!proxy.edge_mask[e]) continue;
        const auto& ed = proxy.edges[e];
        Vec3 lo = at(p_start, ed[0]), hi = lo;
        for (int v : ed) {
            lo = lo.cwiseMin(at(p_start, v)).cwiseMin(at(p_end, v));
            hi = hi.cwiseMax(at(p_start, v)).cwiseMax(at(p_end, v));
        }
        edge_grid.insert(static_cast<int>(e), lo, hi);
    }
    for (std::size_t e = 0; e < proxy.edges.size(); ++e) {
        if (!proxy.edge_mask[e]) continue;
        const auto& ea = proxy.edges[e];
        Vec3 lo = at(p_start, ea[0]), hi = lo;
        for (int v : ea) {
            lo = lo.cwiseMin(at(p_start, v)).cwiseMin(at(p_end, v));
            hi = hi.cwiseMax(at(p_start, v)).cwiseMax(at(p_end, v));
        }
        std::unordered_set<int> seen;
        edge_grid.query(Vec3(lo.array() - prox_tol), Vec3(hi.array() + prox_tol), [&](int f) {
            if (f <= static_cast<int>(e)) return;
            if (!seen.insert(f).second) return;
            const auto& eb = proxy.edges[f];
            if (ea[0] == eb[0] || ea[0] == eb[1] || ea[1] == eb[0] || ea[1] == eb[1]) return;
            const Vec3 u0 = at(p_start, ea[1]) - at(p_start, ea[0]);
            const Vec3 du = (at(p_end, ea[1]) - at(p_end, ea[0])) - u0;
            const Vec3 v0 = at(p_start, eb[1]) - at(p_start, eb[0]);
            const Vec3 dv = (at(p_end, eb[1]) - at(p_end, eb[0])) - v0;
            const Vec3 w0 = at(p_start, eb[0]) - at(p_start, ea[0]);
            const Vec3 dw = (at(p_end, eb[0]) - at(p_end, ea[0])) - w0;
            double c[4];
            coplanarity_cubic(u0, du, v0, dv, w0, dw, c);
            for (double root : cubic_roots_unit_interval(c[3], c[2], c[1], c[0])) {
                if (root >= toi) break;
                if (ee_distance_at(p_start, p_end, ea, eb, root) < prox_tol) {
                    FS_CHECK(root > 1e-12, "ccd: start state already intersecting");
                    consider(root);
                    break;
                }
            }
        });
    }

    double alpha = std::isfinite(toi) ? std::min(1.0, 0.9 * toi) : 1.0;

    // bisection fallback: never accept a step that ends in contact
    auto end_state_clear = [&](double a) {
        const VecX pa = (1.0 - a) * p_start + a * p_end;
        const double dmin = min_pair_distance(proxy, pa, prox_tol * 2.0);
        return dmin > prox_tol;
    };
    FS_CHECK(end_state_clear(0.0), "ccd: start state already intersecting");
    while (!end_state_clear(alpha)) {
        alpha *= 0.5;
        FS_CHECK(alpha > 1e-12, "ccd: no admissible step from a near-touching start");
    }
    return alpha;
}

}  // namespace facesim::contact
