#pragma once

#include "facesim/common.hpp"

namespace facesim::pd {

struct PolarDecomposition {
    Mat3 R;  // rotation, det = +1
    Mat3 S;  // symmetric factor, M = R S
};

/// Polar decomposition via SVD with a sign fix on the smallest singular
/// direction, robust for inverted or rank-deficient input.
PolarDecomposition polar_decompose(const Mat3& M);

/// Directional derivative of the rotation factor: dR for a perturbation dM
/// of M. Requires the two smallest singular values of M to not sum to zero.
Mat3 polar_rotation_differential(const PolarDecomposition& pd, const Mat3& dM);

struct ShapeTargetProjection {
    Mat3 rotation;  // argmin_R ||F - R A||_F^2 over SO(3)
    double energy;  // ||F - R A||_F^2 at the minimizer
};

/// A must be symmetric. The minimizing rotation is the polar rotation of
/// F * A.
ShapeTargetProjection shape_target_project(const Mat3& F, const Mat3& A);

}  // namespace facesim::pd
