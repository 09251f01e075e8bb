#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace facesim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

[[noreturn]] inline void fail(const std::string& msg) {
    throw std::runtime_error(msg);
}

#define FS_CHECK(cond, msg)              \
    do {                                 \
        if (!(cond)) ::facesim::fail(msg); \
    } while (0)

/// Deterministic RNG. Wraps mt19937_64 but derives all variates from raw
/// 64-bit draws so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // inclusive range
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(raw() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    Vec3 unit_vector() {
        Vec3 v(normal(), normal(), normal());
        while (v.norm() < 1e-12) v = Vec3(normal(), normal(), normal());
        return v.normalized();
    }

    // uniform over SO(3) via normalized quaternion
    Mat3 rotation() {
        Eigen::Vector4d q(normal(), normal(), normal(), normal());
        while (q.norm() < 1e-12) q = Eigen::Vector4d(normal(), normal(), normal(), normal());
        q.normalize();
        return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct RigidTransform {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return R * p + t; }
    RigidTransform inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
    RigidTransform compose(const RigidTransform& inner) const {
        return {R * inner.R, R * inner.t + t};
    }
    bool is_rigid(double tol = 1e-8) const {
        return (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
               R.determinant() > 0.0;
    }
};

// FNV-1a, used for input manifests and reproducibility checks.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 14695981039346656037ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace facesim
