#pragma once

#include "facesim/common.hpp"
#include "facesim/contact/barrier.hpp"
#include "facesim/pd/solver.hpp"

namespace facesim::diff {

struct AdjointOptions {
    bool include_contact = false;
    /// Drop the rotation-derivative terms and use K as the system matrix.
    /// The exact Hessian (default) is what passes the finite-difference bars;
    /// the Gauss-Newton variant is kept for comparison runs.
    bool gauss_newton = false;
    double cg_tol = 1e-10;
    int cg_max_iters = 4000;
};

/// Solves (∇²E [+ ∇²B]) λ = dL/du at a converged state by conjugate
/// gradients preconditioned with the prefactorized K. The energy Hessian is
/// K minus the exact rotation-derivative terms of the shape-target
/// projections; the contact Hessian is the exact (unprojected) barrier
/// Hessian at the converged state.
VecX adjoint_solve(const pd::SimState& state, const std::vector<pd::ConstraintBlock>& blocks,
                   const pd::GlobalOperator& K, const VecX& dL_du, const AdjointOptions& opts = {},
                   const contact::ContactProxy* proxy = nullptr, double dhat = 0.0);

/// dL/dA_i = -λᵀ ∂(∇_u E)/∂A_i, symmetrized; one 3x3 per shape-target block,
/// indexed by element.
std::vector<Mat3> grad_wrt_actuation(const VecX& lambda, const pd::SimState& state,
                                     const std::vector<pd::ConstraintBlock>& blocks);

/// dL/dy for every attachment block, in block order.
std::vector<Vec3> grad_wrt_bone_targets(const VecX& lambda,
                                        const std::vector<pd::ConstraintBlock>& blocks);

/// Hessian-vector product of the PD energy at u (exact, including the
/// projection differential). Exposed for tests.
VecX energy_hessian_apply(const VecX& u, const std::vector<pd::ConstraintBlock>& blocks,
                          const pd::GlobalOperator& K, const VecX& v, bool gauss_newton);

/// Newton refinement of a PD solution: a few exact-Hessian steps drive the
/// gradient to near machine precision. Used where local-global linear
/// convergence is too slow, e.g. ahead of finite-difference checks.
pd::SimState polish_quasistatic(const pd::SimState& state,
                                std::vector<pd::ConstraintBlock>& blocks,
                                const pd::GlobalOperator& K, double grad_tol_abs,
                                int max_iters = 30);

/// Contact-aware Newton refinement: exact elastic Hessian plus the projected
/// barrier Hessian, with the CCD step cap and a backtracking line search on
/// E + B. Iterates stay penetration-free.
pd::SimState polish_quasistatic_contact(const pd::SimState& state,
                                        std::vector<pd::ConstraintBlock>& blocks,
                                        const pd::GlobalOperator& K,
                                        const contact::ContactProxy& proxy, double dhat,
                                        double grad_tol_abs, int max_iters = 60);

}  // namespace facesim::diff
