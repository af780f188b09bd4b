#pragma once

#include <filesystem>
#include <string>

#include "lwg/body_model.hpp"

namespace lwg {

/** Reads a body model from JSON. Keys: "vertices" (3 N_v), "faces" (3 N_f),
 *  "shape_dirs" (3 N_v n_beta, vertex-major then axis then coefficient),
 *  "joint_regressor" (n_J N_v), "parents" (n_J, -1 for root),
 *  "skin_weights" (N_v n_J). Optional: "head_faces", and "pose_dirs" which is
 *  accepted and ignored. Throws ParseError or InvariantError. */
BodyModel load_model(const std::filesystem::path& path);
BodyModel parse_model(const std::string& json_text);

void save_model(const BodyModel& model, const std::filesystem::path& path);
std::string dump_model(const BodyModel& model);

/// Two-joint capsule figure along +Y. The rest mesh has 8 * (2 n + 1) + 2
/// vertices; joint 1 sits on the middle ring. The single shape direction
/// scales Y. The top cap is tagged as the head.
BodyModel synth_model(int n_segments);

/// Camera that frames synth_model at rest inside [-1, 1]^2.
CameraWP synth_default_camera();

// Per-image body estimate: {"theta": [...], "beta": [...], "camera": [s, tx, ty]}.
struct BodyParams {
    PoseParams pose;
    ShapeParams shape;
    CameraWP camera;
};

BodyParams rest_params(const BodyModel& model, const CameraWP& camera);
BodyParams load_params(const std::filesystem::path& path, const BodyModel& model);
BodyParams parse_params(const std::string& json_text, const BodyModel& model);
void save_params(const BodyParams& params, const std::filesystem::path& path);

}  // namespace lwg
