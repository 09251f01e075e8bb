#include "facesim/contact/barrier.hpp"

#include <unordered_map>
#include <unordered_set>

namespace facesim::contact {

Barrier1D barrier_1d(double d, double dhat) {
    FS_CHECK(d > 0.0, "barrier evaluated at nonpositive distance (penetration)");
    FS_CHECK(dhat > 0.0, "barrier threshold must be positive");
    Barrier1D out;
    if (d >= dhat) return out;
    const double gap = d - dhat;
    const double lg = std::log(d / dhat);
    out.value = -gap * gap * lg;
    out.d1 = -2.0 * gap * lg - gap * gap / d;
    out.d2 = -2.0 * lg - 4.0 * gap / d + gap * gap / (d * d);
    return out;
}

void ContactProxy::set_triangle_mask(const std::vector<char>& mask) {
    FS_CHECK(mask.size() == triangles.size(), "triangle mask size mismatch");
    tri_mask = mask;
    vert_mask.assign(vertex_count(), 0);
    for (std::size_t t = 0; t < triangles.size(); ++t)
        if (tri_mask[t])
            for (int v : triangles[t]) vert_mask[v] = 1;
    edge_mask.assign(edges.size(), 0);
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (vert_mask[edges[e][0]] && vert_mask[edges[e][1]]) edge_mask[e] = 1;
}

ContactProxy ContactProxy::build(const std::vector<std::array<int, 3>>& triangles,
                                 const geom::Embedding& embedding) {
    ContactProxy proxy;
    proxy.triangles = triangles;
    proxy.embedding = embedding;
    geom::TriSurface topo;
    topo.triangles = triangles;
    proxy.edges = topo.unique_edges();
    for (const auto& t : triangles)
        for (int v : t)
            FS_CHECK(v >= 0 && v < proxy.vertex_count(), "proxy triangle vertex out of range");
    proxy.set_triangle_mask(std::vector<char>(triangles.size(), 1));
    return proxy;
}

namespace {

struct HashGrid {
    double cell = 1.0;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets;

    static std::uint64_t key(int i, int j, int k) {
        const auto h = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)); };
        return (h(i) * 73856093ull) ^ (h(j) * 19349663ull) ^ (h(k) * 83492791ull);
    }
    void insert(int id, const Vec3& lo, const Vec3& hi) {
        for (int k = static_cast<int>(std::floor(lo[2] / cell));
             k <= static_cast<int>(std::floor(hi[2] / cell)); ++k)
            for (int j = static_cast<int>(std::floor(lo[1] / cell));
                 j <= static_cast<int>(std::floor(hi[1] / cell)); ++j)
                for (int i = static_cast<int>(std::floor(lo[0] / cell));
                     i <= static_cast<int>(std::floor(hi[0] / cell)); ++i)
                    buckets[key(i, j, k)].push_back(id);
    }
    template <typename F>
    void query(const Vec3& lo, const Vec3& hi, F&& visit) const {
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

Vec3 at(const VecX& p, int v) { return p.segment<3>(3 * v); }

bool shares_vertex(const std::array<int, 3>& tri, int v) {
    return tri[0] == v || tri[1] == v || tri[2] == v;
}

bool shares_vertex(const std::array<int, 2>& ea, const std::array<int, 2>& eb) {
    return ea[0] == eb[0] || ea[0] == eb[1] || ea[1] == eb[0] || ea[1] == eb[1];
}

DistanceResult pair_distance(const ContactProxy& proxy, const VecX& p, const ContactPair& pair) {
    if (pair.kind == PairKind::VertexTriangle) {
        const auto& t = proxy.triangles[pair.b];
        return vertex_triangle_distance(at(p, pair.a), at(p, t[0]), at(p, t[1]), at(p, t[2]));
    }
    const auto& ea = proxy.edges[pair.a];
    const auto& eb = proxy.edges[pair.b];
    return edge_edge_distance(at(p, ea[0]), at(p, ea[1]), at(p, eb[0]), at(p, eb[1]));
}

std::array<int, 4> pair_vertices(const ContactProxy& proxy, const ContactPair& pair) {
    if (pair.kind == PairKind::VertexTriangle) {
        const auto& t = proxy.triangles[pair.b];
        return {pair.a, t[0], t[1], t[2]};
    }
    const auto& ea = proxy.edges[pair.a];
    const auto& eb = proxy.edges[pair.b];
    return {ea[0], ea[1], eb[0], eb[1]};
}

ContactSet collect_pairs_impl(const ContactProxy& proxy, const VecX& p, double dhat, double keep) {
    FS_CHECK(p.size() == 3 * proxy.vertex_count(), "proxy position size mismatch");
    ContactSet set;
    // cell size >= dhat, and at least the mean edge extent so primitives
    // cover O(1) cells each
    double edge_len = 0.0;
    for (const auto& e : proxy.edges) edge_len += (at(p, e[0]) - at(p, e[1])).norm();
    if (!proxy.edges.empty()) edge_len /= static_cast<double>(proxy.edges.size());
    const double cell = std::max({dhat, edge_len, 1e-12});

    HashGrid tri_grid;
    tri_grid.cell = cell;
    for (std::size_t t = 0; t < proxy.triangles.size(); ++t) {
        if (!proxy.tri_mask[t]) continue;
        Vec3 lo = at(p, proxy.triangles[t][0]), hi = lo;
        for (int v : proxy.triangles[t]) {
            lo = lo.cwiseMin(at(p, v));
            hi = hi.cwiseMax(at(p, v));
        }
        tri_grid.insert(static_cast<int>(t), lo, hi);
    }
    for (int v = 0; v < proxy.vertex_count(); ++v) {
        if (!proxy.vert_mask[v]) continue;
        const Vec3 q = at(p, v);
        std::unordered_set<int> seen;
        tri_grid.query(Vec3(q.array() - dhat), Vec3(q.array() + dhat), [&](int t) {
            if (!seen.insert(t).second) return;
            if (shares_vertex(proxy.triangles[t], v)) return;
            const auto& tri = proxy.triangles[t];
            const auto res =
                vertex_triangle_distance(q, at(p, tri[0]), at(p, tri[1]), at(p, tri[2]));
            set.min_distance = std::min(set.min_distance, res.d);
            if (res.d < keep)
                set.pairs.push_back({PairKind::VertexTriangle, v, t, res.d, res.subcase});
        });
    }

    HashGrid edge_grid;
    edge_grid.cell = cell;
    for (std::size_t e = 0; e < proxy.edges.size(); ++e) {
        if (!proxy.edge_mask[e]) continue;
        const Vec3 p0 = at(p, proxy.edges[e][0]), p1 = at(p, proxy.edges[e][1]);
        edge_grid.insert(static_cast<int>(e), p0.cwiseMin(p1), p1.cwiseMax(p0));
    }
    for (std::size_t e = 0; e < proxy.edges.size(); ++e) {
        if (!proxy.edge_mask[e]) continue;
        const Vec3 p0 = at(p, proxy.edges[e][0]), p1 = at(p, proxy.edges[e][1]);
        const Vec3 lo = Vec3(p0.cwiseMin(p1).array() - dhat);
        const Vec3 hi = Vec3(p0.cwiseMax(p1).array() + dhat);
        std::unordered_set<int> seen;
        edge_grid.query(lo, hi, [&](int f) {
            if (f <= static_cast<int>(e)) return;
            if (!seen.insert(f).second) return;
            if (shares_vertex(proxy.edges[e], proxy.edges[f])) return;
            const auto& ef = proxy.edges[f];
            const auto res = edge_edge_distance(p0, p1, at(p, ef[0]), at(p, ef[1]));
            set.min_distance = std::min(set.min_distance, res.d);
            if (res.d < keep)
                set.pairs.push_back({PairKind::EdgeEdge, static_cast<int>(e),
                                     static_cast<int>(f), res.d, res.subcase});
        });
    }
    return set;
}

}  // namespace

ContactSet collect_pairs(const ContactProxy& proxy, const VecX& p, double dhat) {
    return collect_pairs_impl(proxy, p, dhat, dhat);
}

double min_pair_distance(const ContactProxy& proxy, const VecX& p, double pad) {
    return collect_pairs_impl(proxy, p, pad, 0.0).min_distance;
}

double barrier_total(const ContactProxy& proxy, const VecX& p, double dhat) {
    const ContactSet set = collect_pairs(proxy, p, dhat);
    double total = 0.0;
    for (const auto& pair : set.pairs) total += barrier_1d(pair.d, dhat).value;
    return total;
}

BarrierAssembly assemble_barrier(const ContactSet& set, const ContactProxy& proxy, const VecX& p,
                                 double dhat, int sim_vertex_count, bool psd_project) {
    BarrierAssembly out;
    out.grad = VecX::Zero(3 * sim_vertex_count);
    out.hess.resize(3 * sim_vertex_count, 3 * sim_vertex_count);
    out.pair_count = static_cast<int>(set.pairs.size());
    std::vector<Triplet> trips;
    for (const auto& pair : set.pairs) {
        const auto dist = pair_distance(proxy, p, pair);
        const auto bar = barrier_1d(dist.d, dhat);
        if (bar.value == 0.0 && bar.d1 == 0.0 && bar.d2 == 0.0) continue;
        out.value += bar.value;
        const Eigen::Matrix<double, 12, 1> g = bar.d1 * dist.grad;
        Eigen::Matrix<double, 12, 12> H =
            bar.d1 * dist.hess + bar.d2 * dist.grad * dist.grad.transpose();
        if (psd_project) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 12, 12>> eig(H);
            const auto clamped = eig.eigenvalues().cwiseMax(0.0);
            H = eig.eigenvectors() * clamped.asDiagonal() * eig.eigenvectors().transpose();
        }
        // pull back through the embedding rows of the involved proxy vertices
        const auto verts = pair_vertices(proxy, pair);
        for (int r = 0; r < 4; ++r) {
            const auto& row_r = proxy.embedding.rows[verts[r]];
            for (int cr = 0; cr < 8; ++cr) {
                if (row_r.weights[cr] == 0.0) continue;
                out.grad.segment<3>(3 * row_r.nodes[cr]) +=
                    row_r.weights[cr] * g.segment<3>(3 * r);
                for (int c = 0; c < 4; ++c) {
                    const auto& row_c = proxy.embedding.rows[verts[c]];
                    const Mat3 block = H.block<3, 3>(3 * r, 3 * c);
                    for (int cc = 0; cc < 8; ++cc) {
                        const double w = row_r.weights[cr] * row_c.weights[cc];
                        if (w == 0.0) continue;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                trips.emplace_back(3 * row_r.nodes[cr] + a,
                                                   3 * row_c.nodes[cc] + b, w * block(a, b));
                    }
                }
            }
        }
    }
    out.hess.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace facesim::contact
