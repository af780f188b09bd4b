#pragma once

#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "lwg/common.hpp"

namespace lwg {

// Sizes of the standard SMPL release consumed by HMR-style estimators.
inline constexpr int kSmplVertices = 6890;
inline constexpr int kSmplFaces = 13776;
inline constexpr int kSmplJoints = 24;
inline constexpr int kSmplShapeCoeffs = 10;

/** Parametric articulated body: rest mesh, shape blendshapes, kinematic tree
 *  and linear-blend-skinning weights. Read-only after construction. */
template <typename Scalar>
struct BodyModelT {
    // Rest-pose vertices, (N_v, 3)
    Points3<Scalar> template_vertices;
    // Triangles, (N_f, 3)
    FaceIndices faces;
    // Shape blendshapes, (3 * N_v, n_beta); row 3 * v + axis holds the
    // displacement of vertex v along axis per unit coefficient.
    RowMatrix<Scalar> shape_dirs;
    // Joint regressor, (n_J, N_v)
    RowMatrix<Scalar> joint_regressor;
    // parents[0] == -1, parents[k] < k for k > 0
    std::vector<int> parents;
    // LBS weights, (N_v, n_J)
    RowMatrix<Scalar> skin_weights;
    // Faces belonging to the head; used to split head and body for
    // appearance transfer. May be empty.
    std::vector<int> head_faces;

    int n_vertices() const { return static_cast<int>(template_vertices.rows()); }
    int n_faces() const { return static_cast<int>(faces.rows()); }
    int n_joints() const { return static_cast<int>(parents.size()); }
    int n_shape() const { return static_cast<int>(shape_dirs.cols()); }
    bool is_smpl_sized() const { return n_vertices() == kSmplVertices; }
};

using BodyModel = BodyModelT<double>;

// Axis-angle rotation per joint, (n_J, 3), radians.
template <typename Scalar>
struct PoseParamsT {
    Points3<Scalar> theta;
};
using PoseParams = PoseParamsT<double>;

template <typename Scalar>
struct ShapeParamsT {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta;
};
using ShapeParams = ShapeParamsT<double>;

// Weak-perspective camera: x = s * (X + tx), y = s * (Y + ty).
template <typename Scalar>
struct CameraWPT {
    Scalar scale = 1;
    Scalar tx = 0;
    Scalar ty = 0;
};
using CameraWP = CameraWPT<double>;

template <typename Scalar>
using MeshVertices = Points3<Scalar>;

template <typename Scalar>
using Rotation3 = Eigen::Matrix<Scalar, 3, 3>;

// Throws InvariantError naming the first violated invariant.
template <typename Scalar>
void validate(const BodyModelT<Scalar>& model)
{
    const int nv = model.n_vertices();
    const int nj = model.n_joints();
    if (nv == 0 || model.n_faces() == 0) {
        throw InvariantError("body model: empty mesh");
    }
    if (!model.template_vertices.allFinite()) {
        throw InvariantError("body model: non-finite template vertex");
    }
    if (model.faces.minCoeff() < 0 || model.faces.maxCoeff() >= nv) {
        throw InvariantError("body model: face index out of range [0, " + std::to_string(nv) + ")");
    }
    if (model.shape_dirs.rows() != 3 * nv) {
        throw InvariantError("body model: shape_dirs has " + std::to_string(model.shape_dirs.rows())
                             + " rows, expected 3 * N_v = " + std::to_string(3 * nv));
    }
    if (nj == 0 || model.parents[0] != -1) {
        throw InvariantError("body model: parents[0] must be -1 (root)");
    }
    for (int k = 1; k < nj; ++k) {
        if (model.parents[k] < 0 || model.parents[k] >= k) {
            throw InvariantError("body model: parents[" + std::to_string(k) + "] = "
                                 + std::to_string(model.parents[k])
                                 + " is not an earlier joint; joints must be topologically ordered");
        }
    }
    if (model.joint_regressor.rows() != nj || model.joint_regressor.cols() != nv) {
        throw InvariantError("body model: joint_regressor must be n_J x N_v");
    }
    if (model.skin_weights.rows() != nv || model.skin_weights.cols() != nj) {
        throw InvariantError("body model: skin_weights must be N_v x n_J");
    }
    for (int v = 0; v < nv; ++v) {
        const auto row = model.skin_weights.row(v);
        if ((row.array() < Scalar(0)).any()) {
            throw InvariantError("body model: negative skin weight at vertex " + std::to_string(v));
        }
        const double sum = static_cast<double>(row.sum());
        if (std::abs(sum - 1.0) > 1e-5) {
            throw InvariantError("body model: skin weight row sum " + std::to_string(sum)
                                 + " != 1 at vertex " + std::to_string(v));
        }
    }
    for (int f : model.head_faces) {
        if (f < 0 || f >= model.n_faces()) {
            throw InvariantError("body model: head face index " + std::to_string(f) + " out of range");
        }
    }
    if (model.is_smpl_sized()
        && (model.n_faces() != kSmplFaces || nj != kSmplJoints || model.n_shape() != kSmplShapeCoeffs)) {
        throw InvariantError("body model: a 6890-vertex SMPL model must have 13776 faces, 24 joints and 10 shape "
                             "coefficients");
    }
}

/// Rodrigues' formula; rotations below 1e-8 rad return the identity.
template <typename Derived>
Rotation3<typename Derived::Scalar> rodrigues(const Eigen::MatrixBase<Derived>& axis_angle)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, 3, 1> r = axis_angle;
    const Scalar angle = r.norm();
    if (angle < Scalar(1e-8)) {
        return Rotation3<Scalar>::Identity();
    }
    const Eigen::Matrix<Scalar, 3, 1> k = r / angle;
    Rotation3<Scalar> K;
    K << 0, -k.z(), k.y(),
         k.z(), 0, -k.x(),
         -k.y(), k.x(), 0;
    return Rotation3<Scalar>::Identity() + std::sin(angle) * K + (1 - std::cos(angle)) * K * K;
}

// Rest vertices with shape blendshapes applied.
template <typename Scalar>
MeshVertices<Scalar> shaped_vertices(const BodyModelT<Scalar>& model, const ShapeParamsT<Scalar>& shape)
{
    if (shape.beta.size() != model.n_shape()) {
        throw ShapeError("skin: beta has " + std::to_string(shape.beta.size()) + " coefficients, model expects "
                         + std::to_string(model.n_shape()));
    }
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> offsets = model.shape_dirs * shape.beta;
    MeshVertices<Scalar> out = model.template_vertices;
    out += Eigen::Map<const Points3<Scalar>>(offsets.data(), model.n_vertices(), 3);
    return out;
}

// Joint locations regressed from (shaped) rest vertices, (n_J, 3).
template <typename Scalar>
Points3<Scalar> regress_joints(const BodyModelT<Scalar>& model, const MeshVertices<Scalar>& rest)
{
    return model.joint_regressor * rest;
}

/** Posed mesh M(theta, beta): shape blendshapes, forward kinematics from
 *  axis-angle joint rotations, then linear blend skinning. Pose-dependent
 *  corrective blendshapes are not applied. */
template <typename Scalar>
MeshVertices<Scalar> skin(const BodyModelT<Scalar>& model, const PoseParamsT<Scalar>& pose,
                          const ShapeParamsT<Scalar>& shape)
{
    const int nj = model.n_joints();
    if (pose.theta.rows() != nj) {
        throw ShapeError("skin: theta has " + std::to_string(pose.theta.rows() * 3) + " values, model expects "
                         + std::to_string(nj * 3));
    }
    const MeshVertices<Scalar> rest = shaped_vertices(model, shape);
    const Points3<Scalar> joints = regress_joints(model, rest);

    // Global rotation and translation per joint, with the rest-pose joint
    // location removed so that they act on rest-space vertices.
    std::vector<Rotation3<Scalar>> rot(nj);
    std::vector<Eigen::Matrix<Scalar, 3, 1>> trans(nj);
    for (int k = 0; k < nj; ++k) {
        const Rotation3<Scalar> local = rodrigues(pose.theta.row(k).transpose());
        const Eigen::Matrix<Scalar, 3, 1> jk = joints.row(k).transpose();
        if (k == 0) {
            rot[k] = local;
            trans[k] = jk;
        } else {
            const int p = model.parents[k];
            const Eigen::Matrix<Scalar, 3, 1> offset = jk - joints.row(p).transpose();
            rot[k] = rot[p] * local;
            trans[k] = rot[p] * offset + trans[p];
        }
    }
    for (int k = 0; k < nj; ++k) {
        trans[k] -= rot[k] * joints.row(k).transpose();
    }

    MeshVertices<Scalar> out(model.n_vertices(), 3);
    for (int v = 0; v < model.n_vertices(); ++v) {
        Rotation3<Scalar> blend_r = Rotation3<Scalar>::Zero();
        Eigen::Matrix<Scalar, 3, 1> blend_t = Eigen::Matrix<Scalar, 3, 1>::Zero();
        for (int k = 0; k < nj; ++k) {
            const Scalar w = model.skin_weights(v, k);
            if (w == Scalar(0)) {
                continue;
            }
            blend_r += w * rot[k];
            blend_t += w * trans[k];
        }
        out.row(v) = (blend_r * rest.row(v).transpose() + blend_t).transpose();
    }
    return out;
}

/// Weak-perspective projection: columns (x, y, depth) with x = s(X + tx),
/// y = s(Y + ty) in y-down normalized image coordinates and depth = Z.
template <typename Derived>
Points3<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& vertices,
                                          const CameraWPT<typename Derived::Scalar>& cam)
{
    Points3<typename Derived::Scalar> out(vertices.rows(), 3);
    out.col(0) = cam.scale * (vertices.col(0).array() + cam.tx);
    out.col(1) = cam.scale * (vertices.col(1).array() + cam.ty);
    out.col(2) = vertices.col(2);
    return out;
}

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& r, double tol = 1e-6)
{
    using Scalar = typename Derived::Scalar;
    if (r.rows() != 3 || r.cols() != 3 || !r.allFinite()) {
        return false;
    }
    const Rotation3<Scalar> rr = r;
    const double ortho = ((rr.transpose() * rr) - Rotation3<Scalar>::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(static_cast<double>(rr.determinant()) - 1.0) <= tol;
}

/// Rigid motion in row-vector convention: V' = V R + t.
template <typename Scalar>
MeshVertices<Scalar> rigid_transform(const MeshVertices<Scalar>& vertices, const std::type_identity_t<Rotation3<Scalar>>& r,
                                     const std::type_identity_t<Eigen::Matrix<Scalar, 3, 1>>& t)
{
    if (!is_rotation(r)) {
        throw InvariantError("rigid_transform: R is not a proper rotation (orthonormal, det = +1)");
    }
    MeshVertices<Scalar> out = vertices * r;
    out.rowwise() += t.transpose();
    return out;
}

}  // namespace lwg
