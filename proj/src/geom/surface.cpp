#include "facesim/geom/surface.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace facesim::geom {

std::vector<std::array<int, 2>> TriSurface::unique_edges() const {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(3 * triangles.size());
    for (const auto& t : triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.push_back({a, b});
        }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

VecX TriSurface::positions() const {
    VecX p(3 * vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) p.segment<3>(3 * i) = vertices[i];
    return p;
}

std::vector<Vec3> vertex_normals(const VecX& positions,
                                 const std::vector<std::array<int, 3>>& triangles) {
    const int n = static_cast<int>(positions.size() / 3);
    std::vector<Vec3> accum(n, Vec3::Zero());
    for (const auto& t : triangles) {
        const Vec3 p0 = positions.segment<3>(3 * t[0]);
        const Vec3 p1 = positions.segment<3>(3 * t[1]);
        const Vec3 p2 = positions.segment<3>(3 * t[2]);
        const Vec3 c = (p1 - p0).cross(p2 - p0);
        accum[t[0]] += c;
        accum[t[1]] += c;
        accum[t[2]] += c;
    }
    for (auto& m : accum) {
        const double len = m.norm();
        FS_CHECK(len > 1e-300, "degenerate vertex normal");
        m /= len;
    }
    return accum;
}

VecX vertex_normals_backward(const VecX& positions,
                             const std::vector<std::array<int, 3>>& triangles,
                             const std::vector<Vec3>& dL_dnormals) {
    const int n = static_cast<int>(positions.size() / 3);
    std::vector<Vec3> accum(n, Vec3::Zero());
    for (const auto& t : triangles) {
        const Vec3 p0 = positions.segment<3>(3 * t[0]);
        const Vec3 p1 = positions.segment<3>(3 * t[1]);
        const Vec3 p2 = positions.segment<3>(3 * t[2]);
        const Vec3 c = (p1 - p0).cross(p2 - p0);
        accum[t[0]] += c;
        accum[t[1]] += c;
        accum[t[2]] += c;
    }
    // dL/d(accum) through normalization
    std::vector<Vec3> g_accum(n);
    for (int v = 0; v < n; ++v) {
        const double len = accum[v].norm();
        const Vec3 nrm = accum[v] / len;
        g_accum[v] = (dL_dnormals[v] - nrm * nrm.dot(dL_dnormals[v])) / len;
    }
    VecX grad = VecX::Zero(positions.size());
    for (const auto& t : triangles) {
        const Vec3 p0 = positions.segment<3>(3 * t[0]);
        const Vec3 p1 = positions.segment<3>(3 * t[1]);
        const Vec3 p2 = positions.segment<3>(3 * t[2]);
        const Vec3 a = p1 - p0, b = p2 - p0;
        const Vec3 g = g_accum[t[0]] + g_accum[t[1]] + g_accum[t[2]];
        const Vec3 ga = b.cross(g);
        const Vec3 gb = g.cross(a);
        grad.segment<3>(3 * t[1]) += ga;
        grad.segment<3>(3 * t[2]) += gb;
        grad.segment<3>(3 * t[0]) -= ga + gb;
    }
    return grad;
}

void save_obj(const std::string& path, const VecX& positions,
              const std::vector<std::array<int, 3>>& triangles) {
    std::ofstream out(path);
    FS_CHECK(out.good(), "cannot open OBJ for writing: " + path);
    char buf[96];
    const int n = static_cast<int>(positions.size() / 3);
    for (int i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", positions[3 * i],
                      positions[3 * i + 1], positions[3 * i + 2]);
        out << buf;
    }
    for (const auto& t : triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

TriSurface load_obj(const std::string& path) {
    std::ifstream in(path);
    FS_CHECK(in.good(), "cannot open OBJ: " + path);
    TriSurface surf;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            Vec3 p;
            ss >> p[0] >> p[1] >> p[2];
            surf.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                // accept v, v/vt, v/vt/vn
                idx.push_back(std::stoi(tok.substr(0, tok.find('/'))) - 1);
            }
            FS_CHECK(idx.size() >= 3, "bad face in OBJ: " + path);
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                surf.triangles.push_back({idx[0], idx[static_cast<int>(i)], idx[i + 1]});
        }
    }
    return surf;
}

}  // namespace facesim::geom
