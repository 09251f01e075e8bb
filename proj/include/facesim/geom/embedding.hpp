#pragma once

#include "facesim/common.hpp"
#include "facesim/geom/hex_mesh.hpp"

namespace facesim::geom {

struct EmbeddingRow {
    int element = -1;
    std::array<int, 8> nodes{};
    std::array<double, 8> weights{};
};

/// Sparse trilinear interpolation W with p = W u. Rows are per embedded
/// point; weights are nonnegative and sum to one.
struct Embedding {
    int sim_vertex_count = 0;
    std::vector<EmbeddingRow> rows;

    int point_count() const { return static_cast<int>(rows.size()); }

    VecX apply(const VecX& u) const;
    // scatters a gradient w.r.t. embedded points back to simulation vertices
    VecX apply_transpose(const VecX& g) const;
};

/// Points within 1e-9*h outside an element are snapped in.
Embedding embed_points(const HexMesh& mesh, const std::vector<Vec3>& points);

}  // namespace facesim::geom
