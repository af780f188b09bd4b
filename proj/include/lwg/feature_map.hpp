#pragma once

#include <string>

#include "lwg/common.hpp"

namespace lwg {

/** Dense C x H x W array. Stored as a (C, H * W) row-major matrix so that a
 *  channel is a contiguous row and a pixel p = i * W + j is a column. */
template <typename Scalar>
struct FeatureMapT {
    int height = 0;
    int width = 0;
    RowMatrix<Scalar> data;

    FeatureMapT() = default;
    FeatureMapT(int channels, int h, int w)
        : height(h), width(w), data(RowMatrix<Scalar>::Zero(channels, static_cast<Eigen::Index>(h) * w))
    {
    }

    int channels() const { return static_cast<int>(data.rows()); }
    Eigen::Index pixels() const { return data.cols(); }

    Scalar& operator()(int c, int i, int j) { return data(c, static_cast<Eigen::Index>(i) * width + j); }
    Scalar operator()(int c, int i, int j) const { return data(c, static_cast<Eigen::Index>(i) * width + j); }

    bool same_shape(const FeatureMapT& other) const
    {
        return height == other.height && width == other.width && channels() == other.channels();
    }

    template <typename Other>
    FeatureMapT<Other> cast() const
    {
        FeatureMapT<Other> out;
        out.height = height;
        out.width = width;
        out.data = data.template cast<Other>();
        return out;
    }
};

using FeatureMap = FeatureMapT<float>;

// Images are 3-channel feature maps with values in [0, 1].
using Image = FeatureMap;

template <typename Scalar>
void require_same_shape(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b, const char* what)
{
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape mismatch (" + std::to_string(a.channels()) + "x"
                         + std::to_string(a.height) + "x" + std::to_string(a.width) + " vs "
                         + std::to_string(b.channels()) + "x" + std::to_string(b.height) + "x"
                         + std::to_string(b.width) + ")");
    }
}

}  // namespace lwg
