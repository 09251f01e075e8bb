#pragma once

#include "facesim/common.hpp"
#include "facesim/geom/embedding.hpp"
#include "facesim/geom/hex_mesh.hpp"
#include "facesim/pd/shape_target.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace facesim::pd {

/// Per-element symmetric 3x3 actuation tensors. A = I means no actuation.
struct ActuationField {
    std::vector<Mat3> tensors;

    static ActuationField identity(std::size_t element_count) {
        ActuationField f;
        f.tensors.assign(element_count, Mat3::Identity());
        return f;
    }
    void validate() const {
        for (const auto& A : tensors) {
            FS_CHECK(A.allFinite(), "actuation tensor not finite");
            FS_CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12,
                     "actuation tensor not symmetric");
        }
    }
};

enum class ConstraintKind { ShapeTarget, Attachment };

/// One local constraint E_i(u) = (w_i/2) ||G_i S_i u - B_i y_i||^2.
/// Shape targets: G maps the 24 element coordinates to vec(F), B y = vec(R A)
/// with y the projected rotation. Attachments: G is the trilinear row of the
/// attached point, B = I, y the target position.
struct ConstraintBlock {
    static constexpr double kHourglassStiffness = 0.1;

    ConstraintKind kind;
    double weight = 0.0;
    std::vector<int> vertices;  // selection S_i
    MatX G;                     // shape targets: [gradient op; hourglass rows], 33 x 24
    Mat3 A = Mat3::Identity();  // shape targets only
    VecX y;                     // vec(R*) (9) or target position (3)

    int element = -1;  // shape targets: source element id
    bool is_jaw = false;  // attachments: jaw vs skull
    Vec3 rest_point = Vec3::Zero();  // attachments: rest position of the attached point

    VecX target_vec() const;  // B_i y_i
    VecX gather(const VecX& u) const;
    void scatter_add(VecX& out, const VecX& local) const;
};

std::vector<ConstraintBlock> build_shape_target_blocks(const geom::HexMesh& mesh,
                                                       const ActuationField& actuation,
                                                       double omega_st);

/// Skull points keep their rest position as target; jaw points get the jaw
/// transform applied in the identity's jaw frame. The transform must be rigid
/// (R^T R = I to 1e-8).
std::vector<ConstraintBlock> build_bone_blocks(const geom::Embedding& bone_embedding,
                                               const std::vector<Vec3>& rest_points,
                                               const std::vector<char>& is_jaw,
                                               const RigidTransform& jaw_frame,
                                               const RigidTransform& jaw_transform,
                                               double omega_bone);

/// Refresh attachment targets for a new jaw pose without touching structure.
void set_bone_targets(std::vector<ConstraintBlock>& blocks, const RigidTransform& jaw_frame,
                      const RigidTransform& jaw_transform);

/// Write new actuation tensors into existing shape-target blocks.
void set_actuation(std::vector<ConstraintBlock>& blocks, const ActuationField& actuation);

/// K = sum_i w_i S_i^T G_i^T G_i S_i with a reusable Cholesky factorization.
class GlobalOperator {
public:
    static GlobalOperator assemble(int vertex_count, const std::vector<ConstraintBlock>& blocks);

    const SpMat& matrix() const { return K_; }
    VecX solve(const VecX& rhs) const;
    double mean_weight() const { return mean_weight_; }
    int vertex_count() const { return static_cast<int>(K_.rows() / 3); }

private:
    SpMat K_;
    std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;  // immutable once built
    double mean_weight_ = 0.0;
};

double total_energy(const VecX& u, const std::vector<ConstraintBlock>& blocks);
VecX energy_gradient(const VecX& u, const std::vector<ConstraintBlock>& blocks);
VecX assemble_rhs(int vertex_count, const std::vector<ConstraintBlock>& blocks);

/// Local step: project each shape-target block onto its best rotation at the
/// current state. Attachment targets are left untouched.
void local_step(const VecX& u, std::vector<ConstraintBlock>& blocks);

VecX global_step(const GlobalOperator& K, const std::vector<ConstraintBlock>& blocks);

struct SimState {
    VecX u;
    bool converged = false;
    double grad_norm = 0.0;
};

struct SolveStats {
    int sweeps = 0;
    std::vector<double> energy_trace;
    std::vector<double> grad_trace;

    std::string log_lines() const;  // "iter,E,grad_norm" rows
};

struct SolveOptions {
    double tol = 1e-4;  // scaled by h * mean(weight)
    int max_iters = 200;
};

SimState solve_quasistatic(const VecX& u0, std::vector<ConstraintBlock>& blocks,
                           const GlobalOperator& K, double h, const SolveOptions& opts = {},
                           SolveStats* stats = nullptr);

}  // namespace facesim::pd
