#pragma once

#include "facesim/common.hpp"

namespace facesim::contact {

enum class PairKind { VertexTriangle, EdgeEdge };

enum class DistanceSubcase { PointPoint, PointEdge, PointInterior, EdgeEdgeInterior };

/// Unsigned distance with exact first and second derivatives w.r.t. the
/// stacked coordinates of the involved points. Vertex-triangle stacks
/// (p, t0, t1, t2); edge-edge stacks (a0, a1, b0, b1).
struct DistanceResult {
    double d = 0.0;
    Eigen::Matrix<double, 12, 1> grad = Eigen::Matrix<double, 12, 1>::Zero();
    Eigen::Matrix<double, 12, 12> hess = Eigen::Matrix<double, 12, 12>::Zero();
    DistanceSubcase subcase = DistanceSubcase::PointPoint;
};

DistanceResult vertex_triangle_distance(const Vec3& p, const Vec3& t0, const Vec3& t1,
                                        const Vec3& t2);
DistanceResult edge_edge_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

/// Barycentric coordinates of the closest point on the (possibly clamped)
/// triangle to p.
Vec3 closest_point_triangle_bary(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2);

/// Clamped closest parameters (s on a, t on b) between two segments.
Vec2 closest_segment_params(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

}  // namespace facesim::contact
