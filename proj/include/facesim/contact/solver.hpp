#pragma once

#include "facesim/common.hpp"
#include "facesim/contact/barrier.hpp"
#include "facesim/contact/ccd.hpp"
#include "facesim/contact/friction.hpp"
#include "facesim/pd/solver.hpp"

namespace facesim::contact {

/// Solves (H_B + K) u = H_B u_hat - g_B + rhs_pd by conjugate gradients
/// preconditioned with the prefactorized K. With an empty contact set this
/// reproduces the plain global step exactly (the first preconditioner
/// application is the solution).
struct ContactGlobalResult {
    VecX u;
    int cg_iterations = 0;
    double residual = 0.0;
};

ContactGlobalResult solve_contact_global(const pd::GlobalOperator& K,
                                         const std::vector<pd::ConstraintBlock>& blocks,
                                         const BarrierAssembly& barrier, const VecX& u_hat,
                                         const FrictionAssembly* friction = nullptr,
                                         double cg_tol = 1e-8, int cg_max_iters = 2000);

struct ContactSolveOptions {
    double dhat = 0.0;  // required
    double tol = 1e-4;
    int max_iters = 200;
    double mu = 0.0;          // friction coefficient, 0 disables friction
    double eps_v = 0.0;       // friction smoothing (displacement per frame)
    const VecX* u_prev = nullptr;  // previous frame state for friction lag
};

struct ContactAuditRow {
    int sweep = 0;
    double min_distance = 0.0;
    int pair_count = 0;
    double alpha = 0.0;
    double energy = 0.0;
    double barrier = 0.0;
};

struct ContactSolveStats {
    std::vector<ContactAuditRow> rows;
    int total_cg_iterations = 0;

    std::string log_lines() const;  // "sweep,min_distance,pair_count,alpha,E,B"
};

/// Quasistatic solve of E(u) + B(u) (+ lagged friction): per sweep a local
/// step, a fresh barrier Taylor model at the iterate, the preconditioned
/// contact global solve, a CCD step cap and a backtracking line search on the
/// true objective. Every accepted iterate is penetration-free.
pd::SimState solve_quasistatic_contact(const VecX& u0, std::vector<pd::ConstraintBlock>& blocks,
                                       const pd::GlobalOperator& K, const ContactProxy& proxy,
                                       double h, const ContactSolveOptions& opts,
                                       ContactSolveStats* stats = nullptr);

}  // namespace facesim::contact
