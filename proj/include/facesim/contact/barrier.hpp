#pragma once

#include "facesim/common.hpp"
#include "facesim/contact/distance.hpp"
#include "facesim/geom/embedding.hpp"
#include "facesim/geom/surface.hpp"

namespace facesim::contact {

struct Barrier1D {
    double value = 0.0;
    double d1 = 0.0;  // d/dd
    double d2 = 0.0;  // d^2/dd^2
};

/// Smoothly clamped log barrier: -(d - dhat)^2 ln(d / dhat) for 0 < d < dhat,
/// identically zero (with zero derivatives) for d >= dhat. The state must be
/// penetration-free: d <= 0 is an error.
Barrier1D barrier_1d(double d, double dhat);

/// Collision proxy p = W u: a triangulated region of the embedded surface
/// marked collision-prone. Pair generation only considers masked primitives.
struct ContactProxy {
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;  // unique edges of the triangles
    geom::Embedding embedding;              // one row per proxy vertex

    std::vector<char> tri_mask, edge_mask, vert_mask;

    int vertex_count() const { return embedding.point_count(); }
    void set_triangle_mask(const std::vector<char>& mask);  // derives edge/vertex masks
    static ContactProxy build(const std::vector<std::array<int, 3>>& triangles,
                              const geom::Embedding& embedding);
};

struct ContactPair {
    PairKind kind;
    int a = -1;  // vertex id or first edge id
    int b = -1;  // triangle id or second edge id
    double d = 0.0;
    DistanceSubcase subcase = DistanceSubcase::PointPoint;
};

struct ContactSet {
    std::vector<ContactPair> pairs;
    double min_distance = std::numeric_limits<double>::infinity();
};

/// All masked vertex-triangle and edge-edge pairs closer than dhat, found via
/// spatial hashing; pairs sharing a vertex are excluded.
ContactSet collect_pairs(const ContactProxy& proxy, const VecX& p, double dhat);

/// Minimum distance over all masked pairs (no dhat cutoff on the broad phase
/// padding given); used by penetration audits.
double min_pair_distance(const ContactProxy& proxy, const VecX& p, double pad);

struct BarrierAssembly {
    double value = 0.0;
    VecX grad;     // simulation coordinates (3n)
    SpMat hess;    // simulation coordinates
    int pair_count = 0;
};

/// Chain rule of barrier_1d through the pair distances, pulled back through
/// the embedding: grad = W^T grad_p, hess = W^T hess_p W. Per-pair Hessian
/// blocks are projected onto the PSD cone by eigenvalue clamping when
/// psd_project is set (the forward solve); the adjoint uses the exact blocks.
BarrierAssembly assemble_barrier(const ContactSet& set, const ContactProxy& proxy, const VecX& p,
                                 double dhat, int sim_vertex_count, bool psd_project = true);

/// Total barrier value at p (fresh pair collection, no derivatives).
double barrier_total(const ContactProxy& proxy, const VecX& p, double dhat);

}  // namespace facesim::contact
