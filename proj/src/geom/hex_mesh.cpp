#include "facesim/geom/hex_mesh.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace facesim::geom {

VecX HexMesh::rest_positions() const {
    VecX u(3 * vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) u.segment<3>(3 * i) = vertices[i];
    return u;
}

HexMesh build_hex_lattice(const Vec3& box_min, const Vec3& box_max, double h) {
    FS_CHECK(h > 0.0, "lattice spacing must be positive");
    std::array<int, 3> dims;
    for (int a = 0; a < 3; ++a) {
        const double extent = box_max[a] - box_min[a];
        FS_CHECK(extent > 0.0, "empty domain");
        dims[a] = std::max(1, static_cast<int>(std::ceil(extent / h - 1e-9)));
    }
    std::vector<std::uint8_t> occ(dims[0] * dims[1] * dims[2], 1);
    return build_hex_lattice(box_min, dims, occ, h);
}

HexMesh build_hex_lattice(const Vec3& origin, const std::array<int, 3>& dims,
                          const std::vector<std::uint8_t>& occupancy, double h) {
    FS_CHECK(h > 0.0, "lattice spacing must be positive");
    FS_CHECK(static_cast<int>(occupancy.size()) == dims[0] * dims[1] * dims[2],
             "occupancy size mismatch");
    bool any = false;
    for (auto o : occupancy) any = any || (o != 0);
    FS_CHECK(any, "empty domain");

    HexMesh mesh;
    mesh.h = h;
    mesh.origin = origin;
    mesh.dims = dims;
    mesh.occupancy = occupancy;
    mesh.cell_to_element.assign(occupancy.size(), -1);

    // compact node ids over occupied cells only
    const int nx = dims[0] + 1, ny = dims[1] + 1;
    std::unordered_map<long long, int> node_id;
    auto node_key = [&](int i, int j, int k) -> long long {
        return (static_cast<long long>(k) * ny + j) * nx + i;
    };
    auto get_node = [&](int i, int j, int k) -> int {
        const long long key = node_key(i, j, k);
        auto it = node_id.find(key);
        if (it != node_id.end()) return it->second;
        const int id = static_cast<int>(mesh.vertices.size());
        node_id.emplace(key, id);
        mesh.vertices.push_back(origin + h * Vec3(i, j, k));
        return id;
    };

    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) {
                if (!occupancy[mesh.cell_index(i, j, k)]) continue;
                std::array<int, 8> elem;
                for (int c = 0; c < 8; ++c)
                    elem[c] = get_node(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                mesh.cell_to_element[mesh.cell_index(i, j, k)] =
                    static_cast<int>(mesh.elements.size());
                mesh.elements.push_back(elem);
            }
    return mesh;
}

Eigen::Matrix<double, 9, 24> deformation_gradient_operator(const HexMesh& mesh) {
    FS_CHECK(mesh.h > 0.0 && mesh.element_volume() > 0.0, "degenerate element");
    // dN_c/dx_a at the center: sign(corner bit a) * 0.25 / h
    Eigen::Matrix<double, 9, 24> G = Eigen::Matrix<double, 9, 24>::Zero();
    for (int c = 0; c < 8; ++c) {
        Vec3 g;
        for (int a = 0; a < 3; ++a) g[a] = (((c >> a) & 1) ? 0.25 : -0.25) / mesh.h;
        // F(r, col) = sum_c x_c[r] * g_c[col]; column-major flat index 3*col + r
        for (int col = 0; col < 3; ++col)
            for (int r = 0; r < 3; ++r) G(3 * col + r, 3 * c + r) = g[col];
    }
    return G;
}

Eigen::Matrix<double, 24, 24> affine_projector(const HexMesh& mesh) {
    Eigen::Matrix<double, 24, 12> X = Eigen::Matrix<double, 24, 12>::Zero();
    for (int c = 0; c < 8; ++c) {
        const Vec3 p = mesh.h * Vec3(c & 1, (c >> 1) & 1, (c >> 2) & 1);
        for (int a = 0; a < 3; ++a) {
            X(3 * c + a, 4 * a + 0) = 1.0;
            X(3 * c + a, 4 * a + 1) = p[0];
            X(3 * c + a, 4 * a + 2) = p[1];
            X(3 * c + a, 4 * a + 3) = p[2];
        }
    }
    const Eigen::Matrix<double, 12, 12> XtX = X.transpose() * X;
    return X * XtX.ldlt().solve(X.transpose());
}

Eigen::Matrix<double, 24, 1> gather_element(const VecX& u, const std::array<int, 8>& elem) {
    Eigen::Matrix<double, 24, 1> local;
    for (int c = 0; c < 8; ++c) local.segment<3>(3 * c) = u.segment<3>(3 * elem[c]);
    return local;
}

void scatter_add_element(VecX& out, const std::array<int, 8>& elem,
                         const Eigen::Matrix<double, 24, 1>& local) {
    for (int c = 0; c < 8; ++c) out.segment<3>(3 * elem[c]) += local.segment<3>(3 * c);
}

Mat3 element_deformation_gradient(const Eigen::Matrix<double, 9, 24>& G, const VecX& u,
                                  const std::array<int, 8>& elem) {
    const Eigen::Matrix<double, 9, 1> f = G * gather_element(u, elem);
    return Eigen::Map<const Mat3>(f.data());
}

std::vector<Vec3> element_centers(const HexMesh& mesh) {
    std::vector<Vec3> centers;
    centers.reserve(mesh.elements.size());
    for (const auto& e : mesh.elements) {
        Vec3 c = Vec3::Zero();
        for (int i = 0; i < 8; ++i) c += mesh.vertices[e[i]];
        centers.push_back(c / 8.0);
    }
    return centers;
}

void save_lattice(const HexMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    FS_CHECK(out.good(), "cannot open lattice file for writing: " + path);
    char buf[96];
    out << "FACESIM_LATTICE 1\n";
    std::snprintf(buf, sizeof(buf), "%.17g", mesh.h);
    out << "h " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", mesh.origin[0], mesh.origin[1],
                  mesh.origin[2]);
    out << "origin " << buf << "\n";
    out << "dims " << mesh.dims[0] << " " << mesh.dims[1] << " " << mesh.dims[2] << "\n";
    out << "occupancy ";
    for (auto o : mesh.occupancy) out << (o ? '1' : '0');
    out << "\n";
    out << "vertices " << mesh.vertices.size() << "\n";
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", v[0], v[1], v[2]);
        out << buf << "\n";
    }
}

HexMesh load_lattice(const std::string& path) {
    std::ifstream in(path);
    FS_CHECK(in.good(), "cannot open lattice file: " + path);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    FS_CHECK(tag == "FACESIM_LATTICE" && version == 1, "bad lattice header in " + path);
    double h = 0.0;
    Vec3 origin;
    std::array<int, 3> dims;
    in >> tag >> h;
    FS_CHECK(tag == "h", "bad lattice field, expected h");
    in >> tag >> origin[0] >> origin[1] >> origin[2];
    FS_CHECK(tag == "origin", "bad lattice field, expected origin");
    in >> tag >> dims[0] >> dims[1] >> dims[2];
    FS_CHECK(tag == "dims", "bad lattice field, expected dims");
    std::string bits;
    in >> tag >> bits;
    FS_CHECK(tag == "occupancy", "bad lattice field, expected occupancy");
    FS_CHECK(static_cast<int>(bits.size()) == dims[0] * dims[1] * dims[2],
             "occupancy bit count mismatch in " + path);
    std::vector<std::uint8_t> occ(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) occ[i] = bits[i] == '1' ? 1 : 0;
    HexMesh mesh = build_hex_lattice(origin, dims, occ, h);
    std::size_t nverts = 0;
    in >> tag >> nverts;
    FS_CHECK(tag == "vertices", "bad lattice field, expected vertices");
    FS_CHECK(nverts == mesh.vertices.size(), "vertex count mismatch in " + path);
    for (std::size_t i = 0; i < nverts; ++i) {
        Vec3 v;
        in >> v[0] >> v[1] >> v[2];
        FS_CHECK((v - mesh.vertices[i]).norm() <= 1e-9 * h, "vertex mismatch in " + path);
        mesh.vertices[i] = v;
    }
    return mesh;
}

}  // namespace facesim::geom
