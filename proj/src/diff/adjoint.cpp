#include "facesim/diff/adjoint.hpp"

#include "facesim/contact/ccd.hpp"

namespace facesim::diff {

namespace {

struct ElementContext {
    const pd::ConstraintBlock* block;
    Mat3 F;
    Mat3 R;
    pd::PolarDecomposition polar;  // of M = F A
};

std::vector<ElementContext> build_context(const VecX& u,
                                          const std::vector<pd::ConstraintBlock>& blocks) {
    std::vector<ElementContext> ctx;
    for (const auto& b : blocks) {
        if (b.kind != pd::ConstraintKind::ShapeTarget) continue;
        ElementContext c;
        c.block = &b;
        const VecX f = b.G.topRows<9>() * b.gather(u);
        c.F = Eigen::Map<const Mat3>(f.data());
        c.polar = pd::polar_decompose(c.F * b.A);
        c.R = c.polar.R;
        ctx.push_back(c);
    }
    return ctx;
}

// H v = K v - sum_e w S^T G_f^T vec(dR_e A_e), the exact energy Hessian
VecX hessian_apply(const std::vector<ElementContext>& ctx, const pd::GlobalOperator& K,
                   const VecX& v) {
    VecX out = K.matrix() * v;
    for (const auto& c : ctx) {
        const auto& b = *c.block;
        const VecX dv = b.gather(v);
        const VecX df_flat = b.G.topRows<9>() * dv;
        const Mat3 dF = Eigen::Map<const Mat3>(df_flat.data());
        const Mat3 dR = pd::polar_rotation_differential(c.polar, dF * b.A);
        const Mat3 dP = dR * b.A;
        const VecX dp_flat = Eigen::Map<const VecX>(dP.data(), 9);
        const VecX local = -b.weight * (b.G.topRows<9>().transpose() * dp_flat);
        b.scatter_add(out, local);
    }
    return out;
}

}  // namespace

VecX energy_hessian_apply(const VecX& u, const std::vector<pd::ConstraintBlock>& blocks,
                          const pd::GlobalOperator& K, const VecX& v, bool gauss_newton) {
    if (gauss_newton) return K.matrix() * v;
    const auto ctx = build_context(u, blocks);
    return hessian_apply(ctx, K, v);
}

VecX adjoint_solve(const pd::SimState& state, const std::vector<pd::ConstraintBlock>& blocks,
                   const pd::GlobalOperator& K, const VecX& dL_du, const AdjointOptions& opts,
                   const contact::ContactProxy* proxy, double dhat) {
    FS_CHECK(state.converged, "adjoint solve requires a converged state");
    FS_CHECK(dL_du.size() == state.u.size(), "adjoint right-hand side size mismatch");

    std::vector<ElementContext> ctx;
    if (!opts.gauss_newton) ctx = build_context(state.u, blocks);

    SpMat HB;
    bool with_contact = false;
    if (opts.include_contact && proxy != nullptr) {
        FS_CHECK(dhat > 0.0, "contact adjoint requires a distance threshold");
        const VecX p = proxy->embedding.apply(state.u);
        const auto set = contact::collect_pairs(*proxy, p, dhat);
        HB = contact::assemble_barrier(set, *proxy, p, dhat, K.vertex_count(), false).hess;
        with_contact = true;
    }

    auto apply = [&](const VecX& v) -> VecX {
        VecX out = opts.gauss_newton ? VecX(K.matrix() * v) : hessian_apply(ctx, K, v);
        if (with_contact) out += HB * v;
        return out;
    };

    const double bnorm = dL_du.norm();
    VecX x = VecX::Zero(dL_du.size());
    if (bnorm == 0.0) return x;
    VecX r = dL_du;
    VecX z = K.solve(r);
    VecX p = z;
    double rz = r.dot(z);
    double residual = 1.0;
    for (int it = 0; it < opts.cg_max_iters; ++it) {
        const VecX Ap = apply(p);
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        residual = r.norm() / bnorm;
        if (residual < opts.cg_tol) return x;
        z = K.solve(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    fail("adjoint solve: PCG did not converge, residual " + std::to_string(residual));
}

pd::SimState polish_quasistatic(const pd::SimState& state,
                                std::vector<pd::ConstraintBlock>& blocks,
                                const pd::GlobalOperator& K, double grad_tol_abs, int max_iters) {
    pd::SimState out = state;
    auto envelope_energy = [&](const VecX& u) {
        pd::local_step(u, blocks);
        return pd::total_energy(u, blocks);
    };
    for (int it = 0; it < max_iters; ++it) {
        pd::local_step(out.u, blocks);
        const VecX g = pd::energy_gradient(out.u, blocks);
        out.grad_norm = g.cwiseAbs().maxCoeff();
        if (out.grad_norm < grad_tol_abs) {
            out.converged = true;
            return out;
        }
        const auto ctx = build_context(out.u, blocks);
        // PCG on H delta = -g with the K preconditioner
        VecX x = VecX::Zero(g.size());
        VecX r = -g;
        const double bnorm = r.norm();
        VecX z = K.solve(r);
        VecX p = z;
        double rz = r.dot(z);
        for (int cg = 0; cg < 1000; ++cg) {
            const VecX Ap = hessian_apply(ctx, K, p);
            const double pAp = p.dot(Ap);
            if (pAp <= 0.0) break;  // fall back to the step so far
            const double alpha = rz / pAp;
            x += alpha * p;
            r -= alpha * Ap;
            if (r.norm() < 1e-12 * bnorm) break;
            z = K.solve(r);
            const double rz_new = r.dot(z);
            p = z + (rz_new / rz) * p;
            rz = rz_new;
        }
        const double e0 = envelope_energy(out.u);
        double step = 1.0;
        VecX u_try = out.u + x;
        int ls = 0;
        while (envelope_energy(u_try) > e0 + 1e-14 * std::max(1.0, e0) && ls++ < 40) {
            step *= 0.5;
            u_try = out.u + step * x;
        }
        if (ls >= 40) break;
        out.u = u_try;
    }
    pd::local_step(out.u, blocks);
    out.grad_norm = pd::energy_gradient(out.u, blocks).cwiseAbs().maxCoeff();
    out.converged = out.grad_norm < grad_tol_abs;
    return out;
}

pd::SimState polish_quasistatic_contact(const pd::SimState& state,
                                        std::vector<pd::ConstraintBlock>& blocks,
                                        const pd::GlobalOperator& K,
                                        const contact::ContactProxy& proxy, double dhat,
                                        double grad_tol_abs, int max_iters) {
    pd::SimState out = state;
    auto objective = [&](const VecX& u) {
        pd::local_step(u, blocks);
        return pd::total_energy(u, blocks) +
               contact::barrier_total(proxy, proxy.embedding.apply(u), dhat);
    };
    for (int it = 0; it < max_iters; ++it) {
        pd::local_step(out.u, blocks);
        const VecX p = proxy.embedding.apply(out.u);
        const auto set = contact::collect_pairs(proxy, p, dhat);
        // exact barrier hessian: projection would bias the Newton direction
        const auto bar = contact::assemble_barrier(set, proxy, p, dhat, K.vertex_count(), false);
        const VecX g = pd::energy_gradient(out.u, blocks) + bar.grad;
        out.grad_norm = g.cwiseAbs().maxCoeff();
        if (out.grad_norm < grad_tol_abs) {
            out.converged = true;
            return out;
        }
        const auto ctx = build_context(out.u, blocks);
        VecX x = VecX::Zero(g.size());
        VecX r = -g;
        const double bnorm = r.norm();
        VecX z = K.solve(r);
        VecX pc = z;
        double rz = r.dot(z);
        for (int cg = 0; cg < 1000; ++cg) {
            const VecX Ap = hessian_apply(ctx, K, pc) + bar.hess * pc;
            const double pAp = pc.dot(Ap);
            if (pAp <= 0.0) break;
            const double alpha = rz / pAp;
            x += alpha * pc;
            r -= alpha * Ap;
            if (r.norm() < 1e-12 * bnorm) break;
            z = K.solve(r);
            const double rz_new = r.dot(z);
            pc = z + (rz_new / rz) * pc;
            rz = rz_new;
        }
        double alpha = contact::ccd_max_step(proxy, p, proxy.embedding.apply(out.u + x));
        const double e0 = objective(out.u);
        VecX u_try = out.u + alpha * x;
        int ls = 0;
        while (objective(u_try) > e0 + 1e-14 * std::max(1.0, e0) && ls++ < 50) {
            alpha *= 0.5;
            u_try = out.u + alpha * x;
        }
        if (ls >= 50) break;
        out.u = u_try;
    }
    pd::local_step(out.u, blocks);
    const VecX p = proxy.embedding.apply(out.u);
    const auto set = contact::collect_pairs(proxy, p, dhat);
    const auto bar = contact::assemble_barrier(set, proxy, p, dhat, K.vertex_count(), false);
    out.grad_norm = (pd::energy_gradient(out.u, blocks) + bar.grad).cwiseAbs().maxCoeff();
    out.converged = out.grad_norm < grad_tol_abs;
    return out;
}

std::vector<Mat3> grad_wrt_actuation(const VecX& lambda, const pd::SimState& state,
                                     const std::vector<pd::ConstraintBlock>& blocks) {
    int max_element = -1;
    for (const auto& b : blocks)
        if (b.kind == pd::ConstraintKind::ShapeTarget) max_element = std::max(max_element, b.element);
    std::vector<Mat3> grads(max_element + 1, Mat3::Zero());

    for (const auto& b : blocks) {
        if (b.kind != pd::ConstraintKind::ShapeTarget) continue;
        const VecX f = b.G.topRows<9>() * b.gather(state.u);
        const Mat3 F = Eigen::Map<const Mat3>(f.data());
        const auto polar = pd::polar_decompose(F * b.A);
        const VecX gl = b.G.topRows<9>() * b.gather(lambda);
        const Mat3 L = Eigen::Map<const Mat3>(gl.data());

        // dL/dA[dA] = w <L, dR A + R dA> with dR the projection differential
        Mat3 g;
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 3; ++c) {
                Mat3 dA = Mat3::Zero();
                dA(a, c) = 1.0;
                const Mat3 dR = pd::polar_rotation_differential(polar, F * dA);
                g(a, c) = b.weight * (L.cwiseProduct(dR * b.A + polar.R * dA)).sum();
            }
        grads[b.element] += 0.5 * (g + g.transpose());
    }
    return grads;
}

std::vector<Vec3> grad_wrt_bone_targets(const VecX& lambda,
                                        const std::vector<pd::ConstraintBlock>& blocks) {
    std::vector<Vec3> grads;
    for (const auto& b : blocks) {
        if (b.kind != pd::ConstraintKind::Attachment) continue;
        grads.emplace_back(b.weight * (b.G * b.gather(lambda)));
    }
    return grads;
}

}  // namespace facesim::diff
