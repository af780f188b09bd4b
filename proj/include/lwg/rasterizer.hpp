#pragma once

#include <array>

#include "lwg/common.hpp"

namespace lwg {

// Projected triangles gathered per face.
struct FaceTris {
    // (N_f, 6): x0 y0 x1 y1 x2 y2 in normalized image coordinates
    RowMatrix<double> xy;
    // (N_f, 3): camera depth of each corner
    Points3<double> depth;

    int size() const { return static_cast<int>(xy.rows()); }
    Eigen::Vector2d corner(int face, int k) const { return {xy(face, 2 * k), xy(face, 2 * k + 1)}; }
};

// Per-pixel output of the rasterizer.
struct RenderMaps {
    // Face index covering each pixel, -1 for background
    Plane<int32_t> corr;
    // Barycentric weight of each face corner, 0 at background
    std::array<Plane<float>, 3> bary;
    Mask silhouette;
    // Interpolated depth, +inf at background
    Plane<float> depth;

    int height() const { return static_cast<int>(corr.rows()); }
    int width() const { return static_cast<int>(corr.cols()); }
};

using FaceMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Gathers projected (x, y, depth) rows by face. Throws ShapeError on a bad
/// face index.
FaceTris face_tris(const Points3<double>& projected, const FaceIndices& faces);

/** Z-buffered rasterization sampled at pixel centers.
 *
 *  A pixel belongs to a face when its center is strictly inside the projected
 *  triangle or lies on a top or left edge. Among covering faces the smallest
 *  interpolated depth wins; equal depths go to the smaller face index.
 *  Zero-area triangles are skipped and there is no back-face culling.
 *  Barycentric weights are screen-space. */
RenderMaps rasterize(const FaceTris& tris, int height, int width);

/// Same, restricted to faces with include[f] set. Face indices stay global.
RenderMaps rasterize(const FaceTris& tris, int height, int width, const FaceMask& include);

/// vis[f] is true iff face f appears in corr.
FaceMask visibility(const Plane<int32_t>& corr, int n_faces);

}  // namespace lwg
