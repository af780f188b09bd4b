#include "lwg/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lwg {

namespace {

double edge(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double px, double py)
{
    return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

// For a triangle with positive edge-function area in y-down coordinates, an
// edge is "top" when horizontal with dx > 0 and "left" when dy < 0.
bool is_top_left(const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

int clamped_index(double v, int size)
{
    return static_cast<int>(std::clamp(v, -2.0, static_cast<double>(size) + 1.0));
}

bool covers(double w, bool top_left) { return w > 0.0 || (w == 0.0 && top_left); }

void rasterize_rows(const FaceTris& tris, const FaceMask* include, int row_begin, int row_end, RenderMaps& maps,
                    Plane<double>& zbuf)
{
    const int height = maps.height();
    const int width = maps.width();
    for (int f = 0; f < tris.size(); ++f) {
        if (include != nullptr && !(*include)(f)) {
            continue;
        }
        // Corner order is swapped to (0, 2, 1) when needed so the area is positive.
        std::array<int, 3> order = {0, 1, 2};
        std::array<Eigen::Vector2d, 3> v = {tris.corner(f, 0), tris.corner(f, 1), tris.corner(f, 2)};
        double area = edge(v[0], v[1], v[2].x(), v[2].y());
        if (!std::isfinite(area) || area == 0.0) {
            continue;
        }
        if (area < 0.0) {
            std::swap(v[1], v[2]);
            std::swap(order[1], order[2]);
            area = -area;
        }
        const bool tl0 = is_top_left(v[1], v[2]);
        const bool tl1 = is_top_left(v[2], v[0]);
        const bool tl2 = is_top_left(v[0], v[1]);

        const double xmin = std::min({v[0].x(), v[1].x(), v[2].x()});
        const double xmax = std::max({v[0].x(), v[1].x(), v[2].x()});
        const double ymin = std::min({v[0].y(), v[1].y(), v[2].y()});
        const double ymax = std::max({v[0].y(), v[1].y(), v[2].y()});
        // One pixel of slack; the edge test is authoritative.
        const int j0 = std::max(0, clamped_index(std::floor(to_pixel_x(xmin, width)), width) - 1);
        const int j1 = std::min(width - 1, clamped_index(std::ceil(to_pixel_x(xmax, width)), width) + 1);
        const int i0 = std::max(row_begin, clamped_index(std::floor(to_pixel_y(ymin, height)), height) - 1);
        const int i1 = std::min(row_end - 1, clamped_index(std::ceil(to_pixel_y(ymax, height)), height) + 1);

        for (int i = i0; i <= i1; ++i) {
            const double py = pixel_center_y(i, height);
            for (int j = j0; j <= j1; ++j) {
                const double px = pixel_center_x(j, width);
                const double w0 = edge(v[1], v[2], px, py);
                const double w1 = edge(v[2], v[0], px, py);
                const double w2 = edge(v[0], v[1], px, py);
                if (!covers(w0, tl0) || !covers(w1, tl1) || !covers(w2, tl2)) {
                    continue;
                }
                std::array<double, 3> b{};
                b[order[0]] = w0 / area;
                b[order[1]] = w1 / area;
                b[order[2]] = w2 / area;
                const double z = b[0] * tris.depth(f, 0) + b[1] * tris.depth(f, 1) + b[2] * tris.depth(f, 2);
                // Strict comparison: faces are visited in index order, so ties keep the smaller index.
                if (z < zbuf(i, j)) {
                    zbuf(i, j) = z;
                    maps.corr(i, j) = f;
                    for (int k = 0; k < 3; ++k) {
                        maps.bary[k](i, j) = static_cast<float>(b[k]);
                    }
                }
            }
        }
    }
}

RenderMaps rasterize_impl(const FaceTris& tris, int height, int width, const FaceMask* include)
{
    if (height < 1 || width < 1) {
        throw ShapeError("rasterize: image size must be at least 1x1");
    }
    if (include != nullptr && include->size() != tris.size()) {
        throw ShapeError("rasterize: face mask size does not match face count");
    }
    RenderMaps maps;
    maps.corr = Plane<int32_t>::Constant(height, width, -1);
    for (auto& b : maps.bary) {
        b = Plane<float>::Zero(height, width);
    }
    Plane<double> zbuf = Plane<double>::Constant(height, width, std::numeric_limits<double>::infinity());

    parallel_for(height, [&](int begin, int end) { rasterize_rows(tris, include, begin, end, maps, zbuf); });

    maps.silhouette = maps.corr >= 0;
    maps.depth = zbuf.cast<float>();
    return maps;
}

}  // namespace

FaceTris face_tris(const Points3<double>& projected, const FaceIndices& faces)
{
    const auto nv = projected.rows();
    if (faces.size() > 0 && (faces.minCoeff() < 0 || faces.maxCoeff() >= nv)) {
        throw ShapeError("face_tris: face index out of range [0, " + std::to_string(nv) + ")");
    }
    FaceTris out;
    out.xy.resize(faces.rows(), 6);
    out.depth.resize(faces.rows(), 3);
    for (Eigen::Index f = 0; f < faces.rows(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const auto v = faces(f, k);
            out.xy(f, 2 * k) = projected(v, 0);
            out.xy(f, 2 * k + 1) = projected(v, 1);
            out.depth(f, k) = projected(v, 2);
        }
    }
    return out;
}

RenderMaps rasterize(const FaceTris& tris, int height, int width)
{
    return rasterize_impl(tris, height, width, nullptr);
}

RenderMaps rasterize(const FaceTris& tris, int height, int width, const FaceMask& include)
{
    return rasterize_impl(tris, height, width, &include);
}

FaceMask visibility(const Plane<int32_t>& corr, int n_faces)
{
    FaceMask vis = FaceMask::Constant(n_faces, false);
    for (Eigen::Index i = 0; i < corr.size(); ++i) {
        const int32_t f = corr.data()[i];
        if (f >= 0 && f < n_faces) {
            vis(f) = true;
        }
    }
    return vis;
}

}  // namespace lwg
