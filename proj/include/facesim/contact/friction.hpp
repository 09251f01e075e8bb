#pragma once

#include "facesim/common.hpp"
#include "facesim/contact/barrier.hpp"

namespace facesim::contact {

/// One lagged friction contact: the normal force, sliding basis and closest
/// point weights are frozen from the previous frame's contact set.
struct FrictionContact {
    std::array<int, 4> verts{};
    Eigen::Vector4d weights = Eigen::Vector4d::Zero();  // signed closest-point weights
    Eigen::Matrix<double, 3, 2> basis = Eigen::Matrix<double, 3, 2>::Zero();
    double normal_force = 0.0;  // mu-free magnitude, -b'(d_prev)
};

struct FrictionState {
    std::vector<FrictionContact> contacts;
    double mu = 0.0;
    double eps_v = 0.0;  // displacement smoothing threshold per frame step
};

/// Build the lagged sliding bases and normal forces from the previous frame.
FrictionState friction_precompute(const ContactSet& prev_set, const ContactProxy& proxy,
                                  const VecX& p_prev, double dhat, double mu, double eps_v);

struct FrictionAssembly {
    double value = 0.0;
    VecX grad;   // simulation coordinates
    SpMat hess;  // simulation coordinates
};

/// Smoothed static friction energy of the relative tangential displacement
/// since the previous frame, with gradient and (optionally PSD-projected)
/// Hessian pulled back through the embedding.
FrictionAssembly friction_assembly(const FrictionState& state, const ContactProxy& proxy,
                                   const VecX& p, const VecX& p_prev, int sim_vertex_count,
                                   bool psd_project = true);

}  // namespace facesim::contact
