#include "facesim/pd/solver.hpp"

#include <cstdio>
#include <sstream>

namespace facesim::pd {

VecX ConstraintBlock::target_vec() const {
    if (kind == ConstraintKind::Attachment) return y;
    const Mat3 R = Eigen::Map<const Mat3>(y.data());
    const Mat3 T = R * A;
    VecX out = VecX::Zero(G.rows());
    out.head<9>() = Eigen::Map<const VecX>(T.data(), 9);
    return out;
}

VecX ConstraintBlock::gather(const VecX& u) const {
    VecX local(3 * vertices.size());
    for (std::size_t c = 0; c < vertices.size(); ++c)
        local.segment<3>(3 * c) = u.segment<3>(3 * vertices[c]);
    return local;
}

void ConstraintBlock::scatter_add(VecX& out, const VecX& local) const {
    for (std::size_t c = 0; c < vertices.size(); ++c)
        out.segment<3>(3 * vertices[c]) += local.segment<3>(3 * c);
}

std::vector<ConstraintBlock> build_shape_target_blocks(const geom::HexMesh& mesh,
                                                       const ActuationField& actuation,
                                                       double omega_st) {
    FS_CHECK(actuation.tensors.size() == mesh.elements.size(),
             "actuation tensor count does not match element count");
    actuation.validate();
    const Eigen::Matrix<double, 9, 24> Gf = geom::deformation_gradient_operator(mesh);
    // A single center quadrature point leaves the 12 hourglass modes of each
    // hex energy-free; penalize non-affine corner motion to keep K positive
    // definite. Zero for any affine (hence rigid or rest) configuration.
    const double kappa = ConstraintBlock::kHourglassStiffness;
    const Eigen::Matrix<double, 24, 24> H =
        (std::sqrt(kappa) / mesh.h) *
        (Eigen::Matrix<double, 24, 24>::Identity() - geom::affine_projector(mesh));
    MatX G(33, 24);
    G.topRows<9>() = Gf;
    G.bottomRows<24>() = H;
    std::vector<ConstraintBlock> blocks;
    blocks.reserve(mesh.elements.size());
    for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        ConstraintBlock b;
        b.kind = ConstraintKind::ShapeTarget;
        b.weight = omega_st;
        b.vertices.assign(mesh.elements[e].begin(), mesh.elements[e].end());
        b.G = G;
        b.A = actuation.tensors[e];
        b.y = Eigen::Map<const VecX>(Mat3::Identity().eval().data(), 9);
        b.element = static_cast<int>(e);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

std::vector<ConstraintBlock> build_bone_blocks(const geom::Embedding& bone_embedding,
                                               const std::vector<Vec3>& rest_points,
                                               const std::vector<char>& is_jaw,
                                               const RigidTransform& jaw_frame,
                                               const RigidTransform& jaw_transform,
                                               double omega_bone) {
    FS_CHECK(bone_embedding.rows.size() == rest_points.size(), "bone point count mismatch");
    FS_CHECK(is_jaw.size() == rest_points.size(), "bone flag count mismatch");
    FS_CHECK(jaw_transform.is_rigid(1e-8), "jaw transform is not rigid");
    std::vector<ConstraintBlock> blocks;
    blocks.reserve(rest_points.size());
    for (std::size_t i = 0; i < rest_points.size(); ++i) {
        const auto& row = bone_embedding.rows[i];
        ConstraintBlock b;
        b.kind = ConstraintKind::Attachment;
        b.weight = omega_bone;
        b.vertices.assign(row.nodes.begin(), row.nodes.end());
        b.G = MatX::Zero(3, 24);
        for (int c = 0; c < 8; ++c)
            b.G.block<3, 3>(0, 3 * c) = row.weights[c] * Mat3::Identity();
        b.is_jaw = is_jaw[i] != 0;
        b.rest_point = rest_points[i];
        b.y = rest_points[i];
        blocks.push_back(std::move(b));
    }
    set_bone_targets(blocks, jaw_frame, jaw_transform);
    return blocks;
}

void set_bone_targets(std::vector<ConstraintBlock>& blocks, const RigidTransform& jaw_frame,
                      const RigidTransform& jaw_transform) {
    FS_CHECK(jaw_transform.is_rigid(1e-8), "jaw transform is not rigid");
    // conjugate the canonical-jaw-frame transform into material coordinates
    const RigidTransform world = jaw_frame.compose(jaw_transform.compose(jaw_frame.inverse()));
    for (auto& b : blocks) {
        if (b.kind != ConstraintKind::Attachment) continue;
        b.y = b.is_jaw ? world.apply(b.rest_point) : Vec3(b.rest_point);
    }
}

void set_actuation(std::vector<ConstraintBlock>& blocks, const ActuationField& actuation) {
    actuation.validate();
    for (auto& b : blocks) {
        if (b.kind != ConstraintKind::ShapeTarget) continue;
        FS_CHECK(b.element >= 0 && b.element < static_cast<int>(actuation.tensors.size()),
                 "actuation tensor count does not match element count");
        b.A = actuation.tensors[b.element];
    }
}

GlobalOperator GlobalOperator::assemble(int vertex_count,
                                        const std::vector<ConstraintBlock>& blocks) {
    GlobalOperator op;
    std::vector<Triplet> trips;
    double wsum = 0.0;
    for (const auto& b : blocks) {
        const MatX local = b.weight * (b.G.transpose() * b.G);
        wsum += b.weight;
        const int nv = static_cast<int>(b.vertices.size());
        for (int r = 0; r < nv; ++r)
            for (int c = 0; c < nv; ++c)
                for (int a = 0; a < 3; ++a)
                    for (int d = 0; d < 3; ++d) {
                        const double v = local(3 * r + a, 3 * c + d);
                        if (v != 0.0)
                            trips.emplace_back(3 * b.vertices[r] + a, 3 * b.vertices[c] + d, v);
                    }
    }
    op.K_.resize(3 * vertex_count, 3 * vertex_count);
    op.K_.setFromTriplets(trips.begin(), trips.end());
    op.mean_weight_ = blocks.empty() ? 0.0 : wsum / static_cast<double>(blocks.size());
    op.ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
    op.ldlt_->compute(op.K_);
    bool ok = op.ldlt_->info() == Eigen::Success;
    if (ok) {
        const VecX D = op.ldlt_->vectorD();
        ok = D.minCoeff() > 1e-12 * D.maxCoeff() && D.maxCoeff() > 0.0;
    }
    FS_CHECK(ok, "K not positive definite — check attachments");
    return op;
}

VecX GlobalOperator::solve(const VecX& rhs) const { return ldlt_->solve(rhs); }

double total_energy(const VecX& u, const std::vector<ConstraintBlock>& blocks) {
    double E = 0.0;
    for (const auto& b : blocks)
        E += 0.5 * b.weight * (b.G * b.gather(u) - b.target_vec()).squaredNorm();
    return E;
}

VecX energy_gradient(const VecX& u, const std::vector<ConstraintBlock>& blocks) {
    VecX grad = VecX::Zero(u.size());
    for (const auto& b : blocks) {
        const VecX local = b.weight * (b.G.transpose() * (b.G * b.gather(u) - b.target_vec()));
        b.scatter_add(grad, local);
    }
    return grad;
}

VecX assemble_rhs(int vertex_count, const std::vector<ConstraintBlock>& blocks) {
    VecX rhs = VecX::Zero(3 * vertex_count);
    for (const auto& b : blocks) {
        const VecX local = b.weight * (b.G.transpose() * b.target_vec());
        b.scatter_add(rhs, local);
    }
    return rhs;
}

void local_step(const VecX& u, std::vector<ConstraintBlock>& blocks) {
    for (auto& b : blocks) {
        if (b.kind != ConstraintKind::ShapeTarget) continue;
        const VecX f = b.G.topRows<9>() * b.gather(u);
        const Mat3 F = Eigen::Map<const Mat3>(f.data());
        const ShapeTargetProjection proj = shape_target_project(F, b.A);
        b.y = Eigen::Map<const VecX>(proj.rotation.data(), 9);
    }
}

VecX global_step(const GlobalOperator& K, const std::vector<ConstraintBlock>& blocks) {
    return K.solve(assemble_rhs(K.vertex_count(), blocks));
}

std::string SolveStats::log_lines() const {
    std::ostringstream out;
    char buf[96];
    for (std::size_t i = 0; i < energy_trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, energy_trace[i], grad_trace[i]);
        out << buf;
    }
    return out.str();
}

SimState solve_quasistatic(const VecX& u0, std::vector<ConstraintBlock>& blocks,
                           const GlobalOperator& K, double h, const SolveOptions& opts,
                           SolveStats* stats) {
    FS_CHECK(u0.allFinite(), "initial state not finite");
    SimState state;
    state.u = u0;
    const double grad_scale = opts.tol * h * K.mean_weight();
    double prev_energy = total_energy(state.u, blocks);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        local_step(state.u, blocks);
        const double e_local = total_energy(state.u, blocks);
        FS_CHECK(std::isfinite(e_local), "NaN energy at iteration " + std::to_string(iter));
        FS_CHECK(e_local <= prev_energy + 1e-12 * std::max(1.0, prev_energy),
                 "local step increased energy at iteration " + std::to_string(iter));

        const VecX grad = energy_gradient(state.u, blocks);
        state.grad_norm = grad.cwiseAbs().maxCoeff();
        if (stats) {
            stats->energy_trace.push_back(e_local);
            stats->grad_trace.push_back(state.grad_norm);
            stats->sweeps = iter + 1;
        }
        if (state.grad_norm < grad_scale) {
            state.converged = true;
            return state;
        }

        state.u = global_step(K, blocks);
        const double e_global = total_energy(state.u, blocks);
        FS_CHECK(std::isfinite(e_global), "NaN energy at iteration " + std::to_string(iter));
        FS_CHECK(e_global <= e_local + 1e-12 * std::max(1.0, e_local),
                 "global step increased energy at iteration " + std::to_string(iter));
        prev_energy = e_global;
    }
    state.grad_norm = energy_gradient(state.u, blocks).cwiseAbs().maxCoeff();
    state.converged = state.grad_norm < grad_scale;
    return state;
}

}  // namespace facesim::pd
