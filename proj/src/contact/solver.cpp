#include "facesim/contact/solver.hpp"

#include <cstdio>
#include <sstream>

namespace facesim::contact {

ContactGlobalResult solve_contact_global(const pd::GlobalOperator& K,
                                         const std::vector<pd::ConstraintBlock>& blocks,
                                         const BarrierAssembly& barrier, const VecX& u_hat,
                                         const FrictionAssembly* friction, double cg_tol,
                                         int cg_max_iters) {
    const VecX rhs_pd = pd::assemble_rhs(K.vertex_count(), blocks);
    VecX b = rhs_pd + barrier.hess * u_hat - barrier.grad;
    if (friction) b += friction->hess * u_hat - friction->grad;

    auto apply = [&](const VecX& x) -> VecX {
        VecX y = K.matrix() * x + barrier.hess * x;
        if (friction) y += friction->hess * x;
        return y;
    };

    ContactGlobalResult out;
    const double bnorm = b.norm();
    VecX x = VecX::Zero(b.size());
    if (bnorm == 0.0) {
        out.u = x;
        return out;
    }
    VecX r = b;
    VecX z = K.solve(r);
    VecX p = z;
    double rz = r.dot(z);
    for (int it = 0; it < cg_max_iters; ++it) {
        const VecX Ap = apply(p);
        const double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        out.cg_iterations = it + 1;
        out.residual = r.norm() / bnorm;
        if (out.residual < cg_tol) {
            out.u = x;
            return out;
        }
        z = K.solve(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    fail("contact global solve: PCG did not converge, residual " + std::to_string(out.residual));
}

std::string ContactSolveStats::log_lines() const {
    std::ostringstream out;
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%.17g,%.17g,%.17g\n", r.sweep,
                      r.min_distance, r.pair_count, r.alpha, r.energy, r.barrier);
        out << buf;
    }
    return out.str();
}

pd::SimState solve_quasistatic_contact(const VecX& u0, std::vector<pd::ConstraintBlock>& blocks,
                                       const pd::GlobalOperator& K, const ContactProxy& proxy,
                                       double h, const ContactSolveOptions& opts,
                                       ContactSolveStats* stats) {
    FS_CHECK(opts.dhat > 0.0, "contact solve requires a positive distance threshold");
    FS_CHECK(u0.allFinite(), "initial state not finite");

    pd::SimState state;
    state.u = u0;
    const double grad_scale = opts.tol * h * K.mean_weight();

    const VecX p0 = proxy.embedding.apply(u0);
    FS_CHECK(min_pair_distance(proxy, p0, opts.dhat) > 0.0,
             "contact solve requires a penetration-free start");

    const bool with_friction = opts.mu > 0.0 && opts.u_prev != nullptr;
    FrictionState fstate;
    VecX p_prev;
    if (with_friction) {
        p_prev = proxy.embedding.apply(*opts.u_prev);
        const ContactSet prev_set = collect_pairs(proxy, p_prev, opts.dhat);
        fstate = friction_precompute(prev_set, proxy, p_prev, opts.dhat, opts.mu, opts.eps_v);
    }

    auto objective = [&](const VecX& u, const std::vector<pd::ConstraintBlock>& bl) {
        const VecX p = proxy.embedding.apply(u);
        double obj = pd::total_energy(u, bl) + barrier_total(proxy, p, opts.dhat);
        if (with_friction)
            obj += friction_assembly(fstate, proxy, p, p_prev, K.vertex_count()).value;
        return obj;
    };

    for (int sweep = 0; sweep < opts.max_iters; ++sweep) {
        pd::local_step(state.u, blocks);
        const VecX p = proxy.embedding.apply(state.u);
        const ContactSet set = collect_pairs(proxy, p, opts.dhat);
        const BarrierAssembly bar =
            assemble_barrier(set, proxy, p, opts.dhat, K.vertex_count(), true);
        FrictionAssembly fric;
        if (with_friction)
            fric = friction_assembly(fstate, proxy, p, p_prev, K.vertex_count());

        VecX grad = pd::energy_gradient(state.u, blocks) + bar.grad;
        if (with_friction) grad += fric.grad;
        state.grad_norm = grad.cwiseAbs().maxCoeff();
        if (state.grad_norm < grad_scale) {
            state.converged = true;
            return state;
        }

        const auto global = solve_contact_global(K, blocks, bar, state.u,
                                                 with_friction ? &fric : nullptr);
        if (stats) stats->total_cg_iterations += global.cg_iterations;
        const VecX delta = global.u - state.u;

        double alpha = ccd_max_step(proxy, p, proxy.embedding.apply(global.u));
        const double obj0 = pd::total_energy(state.u, blocks) + bar.value +
                            (with_friction ? fric.value : 0.0);
        const double slack = 1e-12 * std::max(1.0, std::abs(obj0));
        VecX u_try = state.u + alpha * delta;
        double obj_try = objective(u_try, blocks);
        while (!(obj_try <= obj0 + slack)) {
            alpha *= 0.5;
            FS_CHECK(alpha >= 1e-8, "line search failure");
            u_try = state.u + alpha * delta;
            obj_try = objective(u_try, blocks);
        }
        state.u = u_try;
        FS_CHECK(std::isfinite(obj_try), "NaN energy at iteration " + std::to_string(sweep));

        if (stats) {
            const VecX p_new = proxy.embedding.apply(state.u);
            const ContactSet set_new = collect_pairs(proxy, p_new, opts.dhat);
            ContactAuditRow row;
            row.sweep = sweep;
            row.min_distance = min_pair_distance(proxy, p_new, opts.dhat);
            row.pair_count = static_cast<int>(set_new.pairs.size());
            row.alpha = alpha;
            row.energy = pd::total_energy(state.u, blocks);
            row.barrier = barrier_total(proxy, p_new, opts.dhat);
            stats->rows.push_back(row);
        }
    }
    pd::local_step(state.u, blocks);
    const VecX p = proxy.embedding.apply(state.u);
    const ContactSet set = collect_pairs(proxy, p, opts.dhat);
    const BarrierAssembly bar = assemble_barrier(set, proxy, p, opts.dhat, K.vertex_count(), true);
    VecX grad = pd::energy_gradient(state.u, blocks) + bar.grad;
    if (with_friction)
        grad += friction_assembly(fstate, proxy, p, p_prev, K.vertex_count()).grad;
    state.grad_norm = grad.cwiseAbs().maxCoeff();
    state.converged = state.grad_norm < grad_scale;
    return state;
}

}  // namespace facesim::contact
