#include "facesim/contact/friction.hpp"

namespace facesim::contact {

namespace {

Vec3 at(const VecX& p, int v) { return p.segment<3>(3 * v); }

Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& n) {
    Vec3 ref = std::abs(n[0]) < 0.8 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t0 = (ref - n * n.dot(ref)).normalized();
    const Vec3 t1 = n.cross(t0);
    Eigen::Matrix<double, 3, 2> B;
    B.col(0) = t0;
    B.col(1) = t1;
    return B;
}

// smoothed |y|: f0(y) = y^2/eps - y^3/(3 eps^2) below eps, y - eps/3 beyond
double f0(double y, double eps) {
    return y < eps ? y * y / eps - y * y * y / (3.0 * eps * eps) : y - eps / 3.0;
}
double f1(double y, double eps) {  // f0'
    return y < eps ? 2.0 * y / eps - y * y / (eps * eps) : 1.0;
}
double f1_prime(double y, double eps) {
    return y < eps ? 2.0 / eps - 2.0 * y / (eps * eps) : 0.0;
}
double f1_over_y(double y, double eps) {
    return y < eps ? 2.0 / eps - y / (eps * eps) : 1.0 / y;
}

}  // namespace

FrictionState friction_precompute(const ContactSet& prev_set, const ContactProxy& proxy,
                                  const VecX& p_prev, double dhat, double mu, double eps_v) {
    FS_CHECK(mu >= 0.0, "friction coefficient must be nonnegative");
    FS_CHECK(eps_v > 0.0, "friction smoothing threshold must be positive");
    FrictionState state;
    state.mu = mu;
    state.eps_v = eps_v;
    if (mu == 0.0) return state;
    for (const auto& pair : prev_set.pairs) {
        FrictionContact fc;
        Vec3 n;
        double d;
        if (pair.kind == PairKind::VertexTriangle) {
            const auto& tri = proxy.triangles[pair.b];
            const Vec3 p = at(p_prev, pair.a);
            const Vec3 t0 = at(p_prev, tri[0]), t1 = at(p_prev, tri[1]), t2 = at(p_prev, tri[2]);
            const Vec3 bary = closest_point_triangle_bary(p, t0, t1, t2);
            const Vec3 closest = bary[0] * t0 + bary[1] * t1 + bary[2] * t2;
            d = (p - closest).norm();
            n = d > 1e-14 ? Vec3((p - closest) / d)
                          : Vec3((t1 - t0).cross(t2 - t0).normalized());
            fc.verts = {pair.a, tri[0], tri[1], tri[2]};
            fc.weights = Eigen::Vector4d(1.0, -bary[0], -bary[1], -bary[2]);
        } else {
            const auto& ea = proxy.edges[pair.a];
            const auto& eb = proxy.edges[pair.b];
            const Vec3 a0 = at(p_prev, ea[0]), a1 = at(p_prev, ea[1]);
            const Vec3 b0 = at(p_prev, eb[0]), b1 = at(p_prev, eb[1]);
            const Vec2 st = closest_segment_params(a0, a1, b0, b1);
            const Vec3 pa = (1.0 - st[0]) * a0 + st[0] * a1;
            const Vec3 pb = (1.0 - st[1]) * b0 + st[1] * b1;
            d = (pa - pb).norm();
            n = d > 1e-14 ? Vec3((pa - pb) / d) : Vec3((a1 - a0).cross(b1 - b0).normalized());
            fc.verts = {ea[0], ea[1], eb[0], eb[1]};
            fc.weights = Eigen::Vector4d(1.0 - st[0], st[0], -(1.0 - st[1]), -st[1]);
        }
        fc.normal_force = -barrier_1d(std::max(d, 1e-300), dhat).d1;
        if (fc.normal_force <= 0.0) continue;
        fc.basis = tangent_basis(n);
        state.contacts.push_back(fc);
    }
    return state;
}

FrictionAssembly friction_assembly(const FrictionState& state, const ContactProxy& proxy,
                                   const VecX& p, const VecX& p_prev, int sim_vertex_count,
                                   bool /*psd_project*/) {
    FrictionAssembly out;
    out.grad = VecX::Zero(3 * sim_vertex_count);
    out.hess.resize(3 * sim_vertex_count, 3 * sim_vertex_count);
    std::vector<Triplet> trips;
    for (const auto& fc : state.contacts) {
        // relative displacement since the previous frame at the lagged
        // contact point, projected onto the lagged sliding basis
        Vec3 rel = Vec3::Zero();
        for (int k = 0; k < 4; ++k)
            rel += fc.weights[k] * (at(p, fc.verts[k]) - at(p_prev, fc.verts[k]));
        const Vec2 q = fc.basis.transpose() * rel;
        const double y = q.norm();
        const double scale = state.mu * fc.normal_force;
        out.value += scale * f0(y, state.eps_v);

        Vec2 gq;
        Eigen::Matrix2d Hq;
        if (y < 1e-14) {
            gq = (2.0 / state.eps_v) * q;
            Hq = (2.0 / state.eps_v) * Eigen::Matrix2d::Identity();
        } else {
            const Vec2 qh = q / y;
            gq = f1(y, state.eps_v) * qh;
            // eigenvalues f1' along q and f1/y across it, both nonnegative,
            // so the pullback is PSD without projection
            Hq = f1_prime(y, state.eps_v) * qh * qh.transpose() +
                 f1_over_y(y, state.eps_v) * (Eigen::Matrix2d::Identity() - qh * qh.transpose());
        }
        gq *= scale;
        Hq *= scale;

        // chain through q = B^T sum_k w_k p_k and the embedding
        const Eigen::Matrix<double, 3, 2>& B = fc.basis;
        const Vec3 g3 = B * gq;
        const Mat3 H3 = B * Hq * B.transpose();
        for (int r = 0; r < 4; ++r) {
            const auto& row_r = proxy.embedding.rows[fc.verts[r]];
            for (int cr = 0; cr < 8; ++cr) {
                const double wr = fc.weights[r] * row_r.weights[cr];
                if (wr == 0.0) continue;
                out.grad.segment<3>(3 * row_r.nodes[cr]) += wr * g3;
                for (int c = 0; c < 4; ++c) {
                    const auto& row_c = proxy.embedding.rows[fc.verts[c]];
                    for (int cc = 0; cc < 8; ++cc) {
                        const double w = wr * fc.weights[c] * row_c.weights[cc];
                        if (w == 0.0) continue;
                        for (int a = 0; a < 3; ++a)
                            for (int b = 0; b < 3; ++b)
                                trips.emplace_back(3 * row_r.nodes[cr] + a,
                                                   3 * row_c.nodes[cc] + b, w * H3(a, b));
                    }
                }
            }
        }
    }
    out.hess.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace facesim::contact
