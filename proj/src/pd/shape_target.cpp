#include "facesim/pd/shape_target.hpp"

#include <Eigen/SVD>

namespace facesim::pd {

PolarDecomposition polar_decompose(const Mat3& M) {
    FS_CHECK(M.allFinite(), "polar decomposition of non-finite matrix");
    Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU();
    Mat3 V = svd.matrixV();
    Vec3 sigma = svd.singularValues();
    if ((U * V.transpose()).determinant() < 0.0) {
        U.col(2) *= -1.0;
        sigma(2) *= -1.0;
    }
    PolarDecomposition out;
    out.R = U * V.transpose();
    out.S = V * sigma.asDiagonal() * V.transpose();
    return out;
}

Mat3 polar_rotation_differential(const PolarDecomposition& pd, const Mat3& dM) {
    // With W = R^T dR skew, R^T dM - dM^T R = W S + S W = [(tr(S) I - S) w]_x.
    const Mat3 C = pd.R.transpose() * dM - dM.transpose() * pd.R;
    const Vec3 c(C(2, 1), C(0, 2), C(1, 0));
    const Mat3 L = pd.S.trace() * Mat3::Identity() - pd.S;
    FS_CHECK(std::abs(L.determinant()) > 1e-14, "polar differential undefined: rank-deficient factor");
    const Vec3 w = L.inverse() * c;
    Mat3 W;
    W << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
    return pd.R * W;
}

ShapeTargetProjection shape_target_project(const Mat3& F, const Mat3& A) {
    FS_CHECK(F.allFinite() && A.allFinite(), "shape target projection of non-finite input");
    FS_CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12,
             "shape target tensor must be symmetric");
    ShapeTargetProjection out;
    out.rotation = polar_decompose(F * A).R;
    out.energy = (F - out.rotation * A).squaredNorm();
    return out;
}

}  // namespace facesim::pd
