#pragma once

#include "facesim/common.hpp"

namespace facesim::geom {

struct TriSurface {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    std::vector<std::array<int, 2>> unique_edges() const;
    VecX positions() const;
};

/// Area-weighted vertex normals: normalize(sum of incident face cross
/// products). positions is the flattened vertex vector (3V).
std::vector<Vec3> vertex_normals(const VecX& positions,
                                 const std::vector<std::array<int, 3>>& triangles);

/// Pullback of dL/d(normals) to dL/d(positions) through the normal
/// computation above.
VecX vertex_normals_backward(const VecX& positions,
                             const std::vector<std::array<int, 3>>& triangles,
                             const std::vector<Vec3>& dL_dnormals);

void save_obj(const std::string& path, const VecX& positions,
              const std::vector<std::array<int, 3>>& triangles);
TriSurface load_obj(const std::string& path);

}  // namespace facesim::geom
