#include "lwg/flow.hpp"

#include <algorithm>

namespace lwg {

TransformFlow identity_flow(int height, int width) { return masked_grid(Mask::Constant(height, width, true)); }

TransformFlow masked_grid(const Mask& mask)
{
    const int height = static_cast<int>(mask.rows());
    const int width = static_cast<int>(mask.cols());
    TransformFlow out;
    out.x = Plane<float>::Zero(height, width);
    out.y = Plane<float>::Zero(height, width);
    out.valid = mask;
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            if (mask(i, j)) {
                out.x(i, j) = static_cast<float>(pixel_center_x(j, width));
                out.y(i, j) = static_cast<float>(pixel_center_y(i, height));
            }
        }
    }
    return out;
}

TransformFlow compose_flow(const RenderMaps& src_maps, const FaceTris& src_tris, const RenderMaps& tgt_maps)
{
    if (src_maps.height() != tgt_maps.height() || src_maps.width() != tgt_maps.width()) {
        throw ShapeError("compose_flow: source and target renders differ in size");
    }
    return compose_flow(visibility(src_maps.corr, src_tris.size()), src_tris, tgt_maps);
}

TransformFlow compose_flow(const FaceMask& src_visible, const FaceTris& src_tris, const RenderMaps& tgt_maps)
{
    const int n_faces = src_tris.size();
    if (src_visible.size() != n_faces) {
        throw ShapeError("compose_flow: visibility size does not match face count");
    }
    if (tgt_maps.corr.size() > 0 && tgt_maps.corr.maxCoeff() >= n_faces) {
        throw ShapeError("compose_flow: target face index beyond source face count");
    }
    const int height = tgt_maps.height();
    const int width = tgt_maps.width();
    TransformFlow out;
    out.x = Plane<float>::Zero(height, width);
    out.y = Plane<float>::Zero(height, width);
    out.valid = Mask::Constant(height, width, false);

    parallel_for(height, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            for (int j = 0; j < width; ++j) {
                const int32_t f = tgt_maps.corr(i, j);
                if (f < 0 || !src_visible(f)) {
                    continue;
                }
                double x = 0.0;
                double y = 0.0;
                for (int k = 0; k < 3; ++k) {
                    const double w = tgt_maps.bary[k](i, j);
                    x += w * src_tris.xy(f, 2 * k);
                    y += w * src_tris.xy(f, 2 * k + 1);
                }
                out.x(i, j) = static_cast<float>(x);
                out.y(i, j) = static_cast<float>(y);
                out.valid(i, j) = true;
            }
        }
    });
    return out;
}

FaceTris body_tris(const BodyModel& model, const BodyParams& params)
{
    const auto mesh = skin(model, params.pose, params.shape);
    return face_tris(project(mesh, params.camera), model.faces);
}

namespace {

void require_sources(std::span<const BodyParams> sources, const char* what)
{
    if (sources.empty()) {
        throw ShapeError(std::string(what) + ": at least one source is required");
    }
}

FlowBundle flows_to_target(const BodyModel& model, std::span<const BodyParams> sources, FaceTris tgt_tris,
                           int height, int width)
{
    FlowBundle bundle;
    bundle.tgt_tris = std::move(tgt_tris);
    bundle.tgt_maps = rasterize(bundle.tgt_tris, height, width);
    for (const auto& src : sources) {
        bundle.src_tris.push_back(body_tris(model, src));
        bundle.src_maps.push_back(rasterize(bundle.src_tris.back(), height, width));
        bundle.flows.push_back(compose_flow(bundle.src_maps.back(), bundle.src_tris.back(), bundle.tgt_maps));
    }
    return bundle;
}

}  // namespace

FlowBundle imitation_flow(const BodyModel& model, std::span<const BodyParams> sources, const PoseParams& ref_pose,
                          int height, int width)
{
    require_sources(sources, "imitation_flow");
    const auto& first = sources.front();
    const auto target_mesh = skin(model, ref_pose, first.shape);
    return flows_to_target(model, sources, face_tris(project(target_mesh, first.camera), model.faces), height,
                           width);
}

FlowBundle imitation_flow(const BodyModel& model, const BodyParams& source, const PoseParams& ref_pose, int height,
                          int width)
{
    return imitation_flow(model, std::span<const BodyParams>(&source, 1), ref_pose, height, width);
}

FlowBundle novelview_flow(const BodyModel& model, std::span<const BodyParams> sources, const Rotation3<double>& r,
                          const Eigen::Vector3d& t, int height, int width)
{
    require_sources(sources, "novelview_flow");
    const auto& first = sources.front();
    const auto source_mesh = skin(model, first.pose, first.shape);
    const auto target_mesh = rigid_transform(source_mesh, r, t);
    return flows_to_target(model, sources, face_tris(project(target_mesh, first.camera), model.faces), height,
                           width);
}

FlowBundle novelview_flow(const BodyModel& model, const BodyParams& source, const Rotation3<double>& r,
                          const Eigen::Vector3d& t, int height, int width)
{
    return novelview_flow(model, std::span<const BodyParams>(&source, 1), r, t, height, width);
}

SwapFlows swap_flows(const BodyModel& model, const BodyParams& source, const BodyParams& reference,
                     std::span<const int> head_faces, int height, int width)
{
    if (head_faces.empty()) {
        throw InvariantError("swap_flows: head face set is empty");
    }
    FaceMask head = FaceMask::Constant(model.n_faces(), false);
    for (int f : head_faces) {
        if (f < 0 || f >= model.n_faces()) {
            throw ShapeError("swap_flows: head face index " + std::to_string(f) + " out of range");
        }
        head(f) = true;
    }
    const FaceMask body = !head;

    const FaceTris src_tris = body_tris(model, source);
    const FaceTris ref_tris = body_tris(model, reference);

    SwapFlows out;
    out.src_head_maps = rasterize(src_tris, height, width, head);
    out.src_body_maps = rasterize(src_tris, height, width, body);
    out.ref_body_maps = rasterize(ref_tris, height, width, body);
    out.head = masked_grid(out.src_head_maps.silhouette);
    out.body = compose_flow(out.ref_body_maps, ref_tris, out.src_body_maps);
    return out;
}

Mask dilate(const Mask& mask, int px)
{
    if (px < 0) {
        throw InvariantError("dilate: radius must be non-negative");
    }
    if (px == 0) {
        return mask;
    }
    const int height = static_cast<int>(mask.rows());
    const int width = static_cast<int>(mask.cols());
    // Separable: a square element is a row pass followed by a column pass.
    Mask rows = Mask::Constant(height, width, false);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            if (!mask(i, j)) {
                continue;
            }
            for (int jj = std::max(0, j - px); jj <= std::min(width - 1, j + px); ++jj) {
                rows(i, jj) = true;
            }
        }
    }
    Mask out = Mask::Constant(height, width, false);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            if (!rows(i, j)) {
                continue;
            }
            for (int ii = std::max(0, i - px); ii <= std::min(height - 1, i + px); ++ii) {
                out(ii, j) = true;
            }
        }
    }
    return out;
}

Decomposition mask_decompose(const Image& image, const RenderMaps& src_maps, int dilate_px)
{
    if (image.height != src_maps.height() || image.width != src_maps.width()) {
        throw ShapeError("mask_decompose: image and render sizes differ");
    }
    Decomposition out;
    out.mask = dilate(src_maps.silhouette, dilate_px);
    const Eigen::Map<const Eigen::Array<bool, 1, Eigen::Dynamic>> flat(out.mask.data(), out.mask.size());
    const Eigen::Array<float, 1, Eigen::Dynamic> keep = flat.cast<float>();
    out.foreground = image;
    out.background = image;
    out.foreground.data.array().rowwise() *= keep;
    out.background.data.array().rowwise() *= (1.0f - keep);
    return out;
}

}  // namespace lwg
