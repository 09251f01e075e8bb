#pragma once

#include "facesim/common.hpp"

namespace facesim::geom {

/// Regular hexahedral lattice. Element corner c sits at the cell corner with
/// offsets (c&1, c>>1&1, c>>2&1) in units of h, so trilinear weights are
/// simple per-axis products.
struct HexMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 8>> elements;
    double h = 0.0;

    // lattice bookkeeping, used for point location and serialization
    Vec3 origin = Vec3::Zero();
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<std::uint8_t> occupancy;   // dims[0]*dims[1]*dims[2], x fastest
    std::vector<int> cell_to_element;      // -1 for empty cells

    int cell_index(int i, int j, int k) const {
        return (k * dims[1] + j) * dims[0] + i;
    }
    bool cell_occupied(int i, int j, int k) const {
        if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return false;
        return occupancy[cell_index(i, j, k)] != 0;
    }
    int element_at(int i, int j, int k) const { return cell_to_element[cell_index(i, j, k)]; }

    double element_volume() const { return h * h * h; }
    VecX rest_positions() const;
};

HexMesh build_hex_lattice(const Vec3& box_min, const Vec3& box_max, double h);
HexMesh build_hex_lattice(const Vec3& origin, const std::array<int, 3>& dims,
                          const std::vector<std::uint8_t>& occupancy, double h);

/// 9x24 map from an element's stacked corner positions [v0 v1 ... v7] (xyz
/// interleaved) to the column-major flattened deformation gradient, using
/// trilinear shape-function gradients at the element center.
Eigen::Matrix<double, 9, 24> deformation_gradient_operator(const HexMesh& mesh);

/// Projector onto the 12-dimensional affine deformation subspace of one
/// element's corner positions. I - P spans the hourglass modes a single
/// center quadrature point cannot see.
Eigen::Matrix<double, 24, 24> affine_projector(const HexMesh& mesh);

Eigen::Matrix<double, 24, 1> gather_element(const VecX& u, const std::array<int, 8>& elem);
void scatter_add_element(VecX& out, const std::array<int, 8>& elem,
                         const Eigen::Matrix<double, 24, 1>& local);

Mat3 element_deformation_gradient(const Eigen::Matrix<double, 9, 24>& G, const VecX& u,
                                  const std::array<int, 8>& elem);

std::vector<Vec3> element_centers(const HexMesh& mesh);

void save_lattice(const HexMesh& mesh, const std::string& path);
HexMesh load_lattice(const std::string& path);

}  // namespace facesim::geom
