#include <doctest.h>

#include "facesim/contact/solver.hpp"
#include "facesim/diff/adjoint.hpp"
#include "facesim/geom/embedding.hpp"

#include "scenes.hpp"

using namespace facesim;
using namespace facesim::geom;
using namespace facesim::testing;

namespace {

struct GradScene {
    HexMesh mesh;
    std::vector<pd::ConstraintBlock> blocks;
    pd::GlobalOperator K;
    Embedding probe;  // single embedded surface point carrying the loss
    Vec3 target;
    int n = 0;

    // contact variant
    bool with_contact = false;
    contact::ContactProxy proxy;
    double dhat = 0.0;
};

// beam of two elements clamped at x = 0, loss on a point near the free end
GradScene make_beam_scene() {
    GradScene s;
    s.mesh = build_hex_lattice(Vec3(0, 0, 0), Vec3(2, 1, 1), 1.0);
    s.n = static_cast<int>(s.mesh.vertices.size());
    pd::ActuationField act = pd::ActuationField::identity(2);
    Mat3 dA0, dA1;
    dA0 << -0.06, 0.02, 0.01, 0.02, 0.04, -0.03, 0.01, -0.03, 0.02;
    dA1 << 0.05, -0.04, 0.02, -0.04, -0.08, 0.01, 0.02, 0.01, 0.06;
    act.tensors[0] = Mat3::Identity() + dA0;
    act.tensors[1] = Mat3::Identity() + dA1;
    s.blocks = pd::build_shape_target_blocks(s.mesh, act, s.mesh.element_volume());
    const std::vector<Vec3> pins = {Vec3(0, 0.25, 0.25), Vec3(0, 0.75, 0.25),
                                    Vec3(0, 0.25, 0.75), Vec3(0, 0.75, 0.75)};
    auto bones = pd::build_bone_blocks(embed_points(s.mesh, pins), pins,
                                       std::vector<char>(pins.size(), 0), RigidTransform{},
                                       RigidTransform{}, 1e3 * s.mesh.element_volume());
    s.blocks.insert(s.blocks.end(), bones.begin(), bones.end());
    s.K = pd::GlobalOperator::assemble(s.n, s.blocks);
    s.probe = embed_points(s.mesh, {Vec3(1.7, 0.6, 0.4)});
    s.target = Vec3(1.9, 0.4, 0.55);
    return s;
}

// two stacked elements with a gap, the upper one pressed down into contact
GradScene make_contact_scene() {
    GradScene s;
    std::vector<std::uint8_t> occ = {1, 0, 1};
    s.mesh = build_hex_lattice(Vec3(0, 0, 0), {1, 1, 3}, occ, 1.0);
    s.n = static_cast<int>(s.mesh.vertices.size());
    pd::ActuationField act = pd::ActuationField::identity(2);
    Mat3 dA;
    dA << -0.03, 0.01, 0.0, 0.01, 0.02, -0.01, 0.0, -0.01, 0.01;
    act.tensors[0] = Mat3::Identity() + dA;
    act.tensors[1] = Mat3::Identity() - 0.5 * dA;
    s.blocks = pd::build_shape_target_blocks(s.mesh, act, s.mesh.element_volume());

    std::vector<Vec3> bone_pts;
    std::vector<char> is_jaw;
    for (double x : {0.25, 0.75})
        for (double y : {0.25, 0.75}) {
            bone_pts.emplace_back(x, y, 0.02);
            is_jaw.push_back(0);
            bone_pts.emplace_back(x, y, 2.98);
            is_jaw.push_back(1);
        }
    RigidTransform press;
    press.t = Vec3(0, 0, -1.05);  // past the unit rest gap
    auto bones = pd::build_bone_blocks(embed_points(s.mesh, bone_pts), bone_pts, is_jaw,
                                       RigidTransform{}, press, 1e3 * s.mesh.element_volume());
    s.blocks.insert(s.blocks.end(), bones.begin(), bones.end());
    s.K = pd::GlobalOperator::assemble(s.n, s.blocks);

    std::vector<Vec3> pverts;
    std::vector<std::array<int, 3>> ptris;
    append_sheet(pverts, ptris, 0.15, 0.85, 0.15, 0.85, 0.999, 3, 3, false);
    // offset grid so closest points land in smooth interior subcases
    append_sheet(pverts, ptris, 0.22, 0.86, 0.19, 0.83, 2.001, 3, 3, true);
    s.proxy = contact::ContactProxy::build(ptris, embed_points(s.mesh, pverts));
    s.with_contact = true;
    s.dhat = 0.02;

    s.probe = embed_points(s.mesh, {Vec3(0.6, 0.4, 0.9)});
    s.target = Vec3(0.8, 0.3, 1.1);
    return s;
}

pd::SimState solve_scene(GradScene& s, std::vector<pd::ConstraintBlock>& blocks,
                         const VecX* u0 = nullptr) {
    const VecX start = u0 ? *u0 : s.mesh.rest_positions();
    if (s.with_contact) {
        contact::ContactSolveOptions opts;
        opts.dhat = s.dhat;
        opts.tol = 1e-4;
        opts.max_iters = 400;
        auto state =
            contact::solve_quasistatic_contact(start, blocks, s.K, s.proxy, s.mesh.h, opts);
        return diff::polish_quasistatic_contact(state, blocks, s.K, s.proxy, s.dhat, 1e-11);
    }
    pd::SolveOptions opts;
    opts.tol = 1e-6;
    opts.max_iters = 3000;
    auto state = pd::solve_quasistatic(start, blocks, s.K, s.mesh.h, opts);
    return diff::polish_quasistatic(state, blocks, s.K, 1e-12);
}

double loss_of(const GradScene& s, const VecX& u) {
    const VecX p = s.probe.apply(u);
    return (Vec3(p) - s.target).squaredNorm();
}

VecX loss_grad_u(const GradScene& s, const VecX& u) {
    const VecX p = s.probe.apply(u);
    VecX gp(3);
    gp = 2.0 * (Vec3(p) - s.target);
    return s.probe.apply_transpose(gp);
}

double run_loss(GradScene& s, const pd::ActuationField& act, const VecX* warm = nullptr) {
    auto blocks = s.blocks;
    pd::set_actuation(blocks, act);
    const auto state = solve_scene(s, blocks, warm);
    REQUIRE(state.converged);
    return loss_of(s, state.u);
}

pd::ActuationField current_actuation(const GradScene& s, int n_elem) {
    pd::ActuationField act = pd::ActuationField::identity(n_elem);
    for (const auto& b : s.blocks)
        if (b.kind == pd::ConstraintKind::ShapeTarget) act.tensors[b.element] = b.A;
    return act;
}

}  // namespace

TEST_CASE("adjoint basics") {
    GradScene s = make_beam_scene();
    auto blocks = s.blocks;
    const auto state = solve_scene(s, blocks);
    REQUIRE(state.converged);

    SUBCASE("zero rhs gives zero adjoint") {
        const VecX lam = diff::adjoint_solve(state, blocks, s.K, VecX::Zero(3 * s.n));
        CHECK(lam.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("non-converged state is rejected") {
        pd::SimState bad = state;
        bad.converged = false;
        CHECK_THROWS(diff::adjoint_solve(bad, blocks, s.K, VecX::Zero(3 * s.n)));
    }
    SUBCASE("residual of the adjoint system") {
        const VecX b = loss_grad_u(s, state.u);
        const VecX lam = diff::adjoint_solve(state, blocks, s.K, b);
        const VecX res = diff::energy_hessian_apply(state.u, blocks, s.K, lam, false) - b;
        CHECK(res.norm() < 1e-8 * b.norm());
    }
    SUBCASE("adjoint gradient is linear in the loss") {
        const VecX b1 = loss_grad_u(s, state.u);
        VecX b2 = VecX::Zero(3 * s.n);
        b2[5] = 1.0;
        b2[17] = -0.3;
        const double a = 0.7, c = -1.9;
        const VecX mix = diff::adjoint_solve(state, blocks, s.K, a * b1 + c * b2);
        const VecX l1 = diff::adjoint_solve(state, blocks, s.K, b1);
        const VecX l2 = diff::adjoint_solve(state, blocks, s.K, b2);
        CHECK((mix - a * l1 - c * l2).cwiseAbs().maxCoeff() <
              1e-7 * mix.cwiseAbs().maxCoeff());
        const auto gm = diff::grad_wrt_actuation(mix, state, blocks);
        const auto g1 = diff::grad_wrt_actuation(l1, state, blocks);
        const auto g2 = diff::grad_wrt_actuation(l2, state, blocks);
        for (std::size_t e = 0; e < gm.size(); ++e)
            CHECK((gm[e] - a * g1[e] - c * g2[e]).cwiseAbs().maxCoeff() <
                  1e-6 * std::max(1.0, gm[e].cwiseAbs().maxCoeff()));
    }
    SUBCASE("actuation gradient is symmetric by contract") {
        const VecX lam = diff::adjoint_solve(state, blocks, s.K, loss_grad_u(s, state.u));
        for (const auto& g : diff::grad_wrt_actuation(lam, state, blocks))
            CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("actuation and bone gradients match finite differences (contact off)") {
    GradScene s = make_beam_scene();
    auto blocks = s.blocks;
    const auto state = solve_scene(s, blocks);
    REQUIRE(state.converged);
    const VecX lam = diff::adjoint_solve(state, blocks, s.K, loss_grad_u(s, state.u));
    const auto grads = diff::grad_wrt_actuation(lam, state, blocks);
    const pd::ActuationField base = current_actuation(s, 2);

    const double step = 1e-5;
    double max_rel = 0.0;
    double max_fd = 0.0;
    std::vector<std::array<double, 2>> checks;  // analytic, fd
    for (int e = 0; e < 2; ++e)
        for (int a = 0; a < 3; ++a)
            for (int c = a; c < 3; ++c) {
                Mat3 dA = Mat3::Zero();
                dA(a, c) += 1.0;
                dA(c, a) += 1.0;  // symmetric perturbation, doubled on the diagonal
                pd::ActuationField ap = base, am = base;
                ap.tensors[e] += step * dA;
                am.tensors[e] -= step * dA;
                const double fd = (run_loss(s, ap) - run_loss(s, am)) / (2 * step);
                const double analytic = (grads[e].cwiseProduct(dA)).sum();
                checks.push_back({analytic, fd});
                max_fd = std::max(max_fd, std::abs(fd));
            }
    for (const auto& c : checks) {
        const double rel = std::abs(c[0] - c[1]) / std::max(1e-10 * max_fd, std::abs(c[1]));
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);

    // bone targets
    const auto bone_grads = diff::grad_wrt_bone_targets(lam, blocks);
    int bone_idx = 0;
    double max_rel_bone = 0.0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        if (blocks[bi].kind != pd::ConstraintKind::Attachment) continue;
        for (int c = 0; c < 3; ++c) {
            auto bp = s.blocks, bm = s.blocks;
            bp[bi].y[c] += step;
            bm[bi].y[c] -= step;
            const auto sp = solve_scene(s, bp);
            const auto sm = solve_scene(s, bm);
            const double fd = (loss_of(s, sp.u) - loss_of(s, sm.u)) / (2 * step);
            const double rel =
                std::abs(bone_grads[bone_idx][c] - fd) / std::max(1e-8, std::abs(fd));
            max_rel_bone = std::max(max_rel_bone, rel);
        }
        ++bone_idx;
    }
    CHECK(max_rel_bone < 1e-4);

    // rigid consistency: the summed bone gradient matches a common translation
    for (int c = 0; c < 3; ++c) {
        auto bp = s.blocks, bm = s.blocks;
        for (auto& b : bp)
            if (b.kind == pd::ConstraintKind::Attachment) b.y[c] += step;
        for (auto& b : bm)
            if (b.kind == pd::ConstraintKind::Attachment) b.y[c] -= step;
        const auto sp = solve_scene(s, bp);
        const auto sm = solve_scene(s, bm);
        const double fd = (loss_of(s, sp.u) - loss_of(s, sm.u)) / (2 * step);
        double sum = 0.0;
        for (const auto& g : bone_grads) sum += g[c];
        CHECK(sum == doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("pinned-vertex loss is insensitive to actuation") {
    GradScene s = make_beam_scene();
    auto blocks = s.blocks;
    const auto state = solve_scene(s, blocks);
    REQUIRE(state.converged);

    // loss anchored at a strongly pinned bone point barely feels actuation
    GradScene pinned = make_beam_scene();
    pinned.probe = embed_points(pinned.mesh, {Vec3(0, 0.25, 0.25)});
    pinned.target = Vec3(0.3, 0.3, 0.3);

    const VecX lam_free = diff::adjoint_solve(state, blocks, s.K, loss_grad_u(s, state.u));
    const VecX lam_pin = diff::adjoint_solve(state, blocks, s.K, loss_grad_u(pinned, state.u));
    const auto g_free = diff::grad_wrt_actuation(lam_free, state, blocks);
    const auto g_pin = diff::grad_wrt_actuation(lam_pin, state, blocks);
    double nf = 0.0, np = 0.0;
    for (int e = 0; e < 2; ++e) {
        nf = std::max(nf, g_free[e].cwiseAbs().maxCoeff());
        np = std::max(np, g_pin[e].cwiseAbs().maxCoeff());
    }
    CHECK(np < 1e-2 * nf);
}

TEST_CASE("gradients with smooth active contact") {
    GradScene s = make_contact_scene();
    auto blocks = s.blocks;
    const auto state = solve_scene(s, blocks);
    REQUIRE(state.converged);

    // contact really is active at the converged state
    const VecX p = s.proxy.embedding.apply(state.u);
    const auto set = contact::collect_pairs(s.proxy, p, s.dhat);
    REQUIRE(!set.pairs.empty());
    REQUIRE(contact::min_pair_distance(s.proxy, p, s.dhat) > 0.0);

    const VecX b = loss_grad_u(s, state.u);
    diff::AdjointOptions opts;
    opts.include_contact = true;
    const VecX lam = diff::adjoint_solve(state, blocks, s.K, b, opts, &s.proxy, s.dhat);

    SUBCASE("contact changes the adjoint and the residual closes") {
        const VecX lam_plain = diff::adjoint_solve(state, blocks, s.K, b);
        CHECK((lam - lam_plain).cwiseAbs().maxCoeff() > 1e-12);
        const auto bar = contact::assemble_barrier(set, s.proxy, p, s.dhat, s.n, false);
        const VecX res =
            diff::energy_hessian_apply(state.u, blocks, s.K, lam, false) + bar.hess * lam - b;
        CHECK(res.norm() < 1e-8 * b.norm());
    }
    SUBCASE("finite differences through the contact solve") {
        const auto grads = diff::grad_wrt_actuation(lam, state, blocks);
        const pd::ActuationField base = current_actuation(s, 2);
        const double step = 1e-5;
        double max_rel = 0.0, max_fd = 0.0;
        std::vector<std::array<double, 2>> checks;
        for (int e = 0; e < 2; ++e)
            for (int a = 0; a < 3; ++a)
                for (int c = a; c < 3; ++c) {
                    Mat3 dA = Mat3::Zero();
                    dA(a, c) += 1.0;
                    dA(c, a) += 1.0;
                    pd::ActuationField ap = base, am = base;
                    ap.tensors[e] += step * dA;
                    am.tensors[e] -= step * dA;
                    const double fd =
                        (run_loss(s, ap, &state.u) - run_loss(s, am, &state.u)) / (2 * step);
                    const double analytic = (grads[e].cwiseProduct(dA)).sum();
                    checks.push_back({analytic, fd});
                    max_fd = std::max(max_fd, std::abs(fd));
                }
        for (const auto& c : checks) {
            const double rel = std::abs(c[0] - c[1]) / std::max(1e-8 * max_fd, std::abs(c[1]));
            max_rel = std::max(max_rel, rel);
        }
        CHECK(max_rel < 1e-3);

        const auto bone_grads = diff::grad_wrt_bone_targets(lam, blocks);
        int bone_idx = 0;
        double max_rel_bone = 0.0;
        for (std::size_t bi = 0; bi < blocks.size() && bone_idx < 2; ++bi) {
            if (blocks[bi].kind != pd::ConstraintKind::Attachment) continue;
            for (int c = 0; c < 3; ++c) {
                auto bp = s.blocks, bm = s.blocks;
                bp[bi].y[c] += step;
                bm[bi].y[c] -= step;
                auto solve_with = [&](std::vector<pd::ConstraintBlock>& bl) {
                    const auto st = solve_scene(s, bl, &state.u);
                    REQUIRE(st.converged);
                    return loss_of(s, st.u);
                };
                const double fd = (solve_with(bp) - solve_with(bm)) / (2 * step);
                const double rel =
                    std::abs(bone_grads[bone_idx][c] - fd) / std::max(1e-8, std::abs(fd));
                max_rel_bone = std::max(max_rel_bone, rel);
            }
            ++bone_idx;
        }
        CHECK(max_rel_bone < 1e-3);
    }
}
