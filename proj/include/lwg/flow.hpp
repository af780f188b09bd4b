#pragma once

#include <span>
#include <vector>

#include "lwg/body_model.hpp"
#include "lwg/feature_map.hpp"
#include "lwg/model_io.hpp"
#include "lwg/rasterizer.hpp"

namespace lwg {

/** Per target pixel, the normalized source-image coordinate to sample.
 *  Entries are exactly zero where valid is false. */
struct TransformFlow {
    Plane<float> x;
    Plane<float> y;
    Mask valid;

    int height() const { return static_cast<int>(valid.rows()); }
    int width() const { return static_cast<int>(valid.cols()); }
    Eigen::Index valid_count() const { return valid.count(); }
};

// Pixel-center grid, valid everywhere.
TransformFlow identity_flow(int height, int width);

// Pixel-center grid restricted to mask.
TransformFlow masked_grid(const Mask& mask);

/** Maps each target pixel to the source-image position of the same surface
 *  point: the target rasterization's barycentric weights are applied to the
 *  source projection of the same face. Valid where the target face is also
 *  visible in the source render. */
TransformFlow compose_flow(const RenderMaps& src_maps, const FaceTris& src_tris, const RenderMaps& tgt_maps);

/// Same with an explicit source visibility per face.
TransformFlow compose_flow(const FaceMask& src_visible, const FaceTris& src_tris, const RenderMaps& tgt_maps);

// Renders and flows for one or more sources warped to a common target.
struct FlowBundle {
    std::vector<RenderMaps> src_maps;
    std::vector<FaceTris> src_tris;
    RenderMaps tgt_maps;
    FaceTris tgt_tris;
    std::vector<TransformFlow> flows;
};

// Projected triangles of a posed body under its own camera.
FaceTris body_tris(const BodyModel& model, const BodyParams& params);

/// Motion imitation. The target mesh takes the reference pose with the first
/// source's shape and is rendered under the first source's camera.
FlowBundle imitation_flow(const BodyModel& model, std::span<const BodyParams> sources, const PoseParams& ref_pose,
                          int height, int width);
FlowBundle imitation_flow(const BodyModel& model, const BodyParams& source, const PoseParams& ref_pose, int height,
                          int width);

/// Novel view. The target mesh is the first source mesh moved by V R + t and
/// rendered under the first source's camera.
FlowBundle novelview_flow(const BodyModel& model, std::span<const BodyParams> sources, const Rotation3<double>& r,
                          const Eigen::Vector3d& t, int height, int width);
FlowBundle novelview_flow(const BodyModel& model, const BodyParams& source, const Rotation3<double>& r,
                          const Eigen::Vector3d& t, int height, int width);

struct SwapFlows {
    // Identity grid on the source head silhouette; samples the source image.
    TransformFlow head;
    // Source body pixels mapped into the reference image.
    TransformFlow body;
    RenderMaps src_head_maps;
    RenderMaps src_body_maps;
    RenderMaps ref_body_maps;
};

/// Appearance transfer: keep the source head, take the body appearance from
/// the reference.
SwapFlows swap_flows(const BodyModel& model, const BodyParams& source, const BodyParams& reference,
                     std::span<const int> head_faces, int height, int width);

struct Decomposition {
    Image foreground;
    Image background;
    Mask mask;
};

// Square dilation with radius px (a (2 px + 1)^2 structuring element).
Mask dilate(const Mask& mask, int px);

/// Splits an image into the body foreground and the masked background using
/// the silhouette dilated by dilate_px.
Decomposition mask_decompose(const Image& image, const RenderMaps& src_maps, int dilate_px);

}  // namespace lwg
