#include "facesim/geom/embedding.hpp"

namespace facesim::geom {

VecX Embedding::apply(const VecX& u) const {
    FS_CHECK(u.size() == 3 * sim_vertex_count, "embedding: simulation vector size mismatch");
    VecX p(3 * rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        Vec3 acc = Vec3::Zero();
        for (int c = 0; c < 8; ++c) acc += rows[r].weights[c] * u.segment<3>(3 * rows[r].nodes[c]);
        p.segment<3>(3 * r) = acc;
    }
    return p;
}

VecX Embedding::apply_transpose(const VecX& g) const {
    FS_CHECK(g.size() == 3 * static_cast<int>(rows.size()),
             "embedding: embedded vector size mismatch");
    VecX out = VecX::Zero(3 * sim_vertex_count);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < 8; ++c)
            out.segment<3>(3 * rows[r].nodes[c]) += rows[r].weights[c] * g.segment<3>(3 * r);
    return out;
}

namespace {

bool try_cell(const HexMesh& mesh, const Vec3& p, int i, int j, int k, double tol,
              EmbeddingRow& row) {
    if (!mesh.cell_occupied(i, j, k)) return false;
    const Vec3 lo = mesh.origin + mesh.h * Vec3(i, j, k);
    Vec3 t = (p - lo) / mesh.h;
    for (int a = 0; a < 3; ++a) {
        if (t[a] < -tol || t[a] > 1.0 + tol) return false;
        t[a] = std::clamp(t[a], 0.0, 1.0);
    }
    const int e = mesh.element_at(i, j, k);
    row.element = e;
    row.nodes = mesh.elements[e];
    for (int c = 0; c < 8; ++c) {
        double w = 1.0;
        for (int a = 0; a < 3; ++a) w *= ((c >> a) & 1) ? t[a] : 1.0 - t[a];
        row.weights[c] = w;
    }
    return true;
}

}  // namespace

Embedding embed_points(const HexMesh& mesh, const std::vector<Vec3>& points) {
    Embedding emb;
    emb.sim_vertex_count = static_cast<int>(mesh.vertices.size());
    emb.rows.resize(points.size());
    const double tol = 1e-9;  // in units of h
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
        const Vec3& p = points[idx];
        const Vec3 t = (p - mesh.origin) / mesh.h;
        bool found = false;
        // candidate cells: floor cell plus neighbors when sitting on a face
        for (int dk = 0; dk >= -1 && !found; --dk)
            for (int dj = 0; dj >= -1 && !found; --dj)
                for (int di = 0; di >= -1 && !found; --di) {
                    const int i = static_cast<int>(std::floor(t[0] + tol)) + di;
                    const int j = static_cast<int>(std::floor(t[1] + tol)) + dj;
                    const int k = static_cast<int>(std::floor(t[2] + tol)) + dk;
                    found = try_cell(mesh, p, i, j, k, tol, emb.rows[idx]);
                }
        FS_CHECK(found, "point " + std::to_string(idx) + " outside all elements");
    }
    return emb;
}

}  // namespace facesim::geom
