#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lwg/feature_map.hpp"

namespace lwg {

// Relative weights of the perceptual, face-identity and attention terms.
struct LossWeights {
    double lambda_p = 10.0;
    double lambda_f = 5.0;
    double lambda_a = 2.5;
};

template <typename Scalar>
using AttentionMapT = Plane<Scalar>;
using AttentionMap = AttentionMapT<float>;

/// P * A + bg * (1 - A) per channel. A must lie in [0, 1].
template <typename Scalar>
FeatureMapT<Scalar> compose_output(const FeatureMapT<Scalar>& color, const AttentionMapT<Scalar>& attention,
                                   const FeatureMapT<Scalar>& background)
{
    require_same_shape(color, background, "compose_output");
    if (attention.rows() != color.height || attention.cols() != color.width) {
        throw ShapeError("compose_output: attention map size differs from the images");
    }
    if (!((attention >= Scalar(0)) && (attention <= Scalar(1))).all()) {
        throw InvariantError("compose_output: attention values must lie in [0, 1]");
    }
    const Eigen::Map<const Eigen::Array<Scalar, 1, Eigen::Dynamic>> a(attention.data(), attention.size());
    FeatureMapT<Scalar> out = color;
    out.data = (color.data.array().rowwise() * a + background.data.array().rowwise() * (Scalar(1) - a)).matrix();
    return out;
}

/// Total variation: sum of squared vertical and horizontal neighbor
/// differences divided by the number of difference terms,
/// (H - 1) W + H (W - 1).
template <typename Scalar>
double tv(const AttentionMapT<Scalar>& a)
{
    const auto h = a.rows();
    const auto w = a.cols();
    if (h < 2 || w < 2) {
        throw ShapeError("tv: map must be at least 2x2");
    }
    const auto am = a.template cast<double>();
    const double vertical = (am.bottomRows(h - 1) - am.topRows(h - 1)).square().sum();
    const double horizontal = (am.rightCols(w - 1) - am.leftCols(w - 1)).square().sum();
    const auto terms = static_cast<double>((h - 1) * w + h * (w - 1));
    return (vertical + horizontal) / terms;
}

/// Sum over pairs of mean((A - S)^2) + tv(A).
template <typename Scalar>
double attention_reg(std::span<const AttentionMapT<Scalar>> attention, std::span<const Mask> silhouettes)
{
    if (attention.size() != silhouettes.size()) {
        throw ShapeError("attention_reg: attention and silhouette counts differ");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < attention.size(); ++k) {
        const auto& a = attention[k];
        const auto& s = silhouettes[k];
        if (a.rows() != s.rows() || a.cols() != s.cols()) {
            throw ShapeError("attention_reg: attention and silhouette sizes differ");
        }
        const double mse = (a.template cast<double>() - s.template cast<double>()).square().mean();
        total += mse + tv(a);
    }
    return total;
}

template <typename Scalar>
double pixel_l1(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b)
{
    require_same_shape(a, b, "pixel_l1");
    return (a.data.template cast<double>() - b.data.template cast<double>()).cwiseAbs().mean();
}

template <typename Scalar>
double mse(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b)
{
    require_same_shape(a, b, "mse");
    return (a.data.template cast<double>() - b.data.template cast<double>()).array().square().mean();
}

/// Peak signal-to-noise ratio in dB with peak 1; +inf for identical images.
template <typename Scalar>
double psnr(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b)
{
    const double err = mse(a, b);
    if (err == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / err);
}

/// Luma 0.299 R + 0.587 G + 0.114 B for 3-channel input; single-channel maps
/// pass through.
template <typename Scalar>
Plane<double> to_gray(const FeatureMapT<Scalar>& img)
{
    Eigen::Array<double, 1, Eigen::Dynamic> g;
    if (img.channels() == 1) {
        g = img.data.row(0).template cast<double>().array();
    } else if (img.channels() == 3) {
        g = 0.299 * img.data.row(0).template cast<double>().array()
            + 0.587 * img.data.row(1).template cast<double>().array()
            + 0.114 * img.data.row(2).template cast<double>().array();
    } else {
        throw ShapeError("ssim: expected a 1- or 3-channel image");
    }
    return Eigen::Map<const Plane<double>>(g.data(), img.height, img.width);
}

/** Single-scale SSIM on luma: 11x11 Gaussian window (sigma 1.5),
 *  K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over windows that fit
 *  entirely inside the image. */
template <typename Scalar>
double ssim(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b)
{
    require_same_shape(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    if (a.height < kWin || a.width < kWin) {
        throw ShapeError("ssim: image must be at least 11x11");
    }
    const Plane<double> x = to_gray(a);
    const Plane<double> y = to_gray(b);

    Eigen::Array<double, kWin, 1> g;
    for (int k = 0; k < kWin; ++k) {
        const double d = k - kWin / 2;
        g(k) = std::exp(-d * d / (2.0 * kSigma * kSigma));
    }
    g /= g.sum();

    // Separable valid-mode filtering.
    auto filter = [&](const Plane<double>& img) {
        const auto h = img.rows();
        const auto w = img.cols();
        Plane<double> rows = Plane<double>::Zero(h, w - kWin + 1);
        for (int k = 0; k < kWin; ++k) {
            rows += g(k) * img.middleCols(k, w - kWin + 1);
        }
        Plane<double> out = Plane<double>::Zero(h - kWin + 1, w - kWin + 1);
        for (int k = 0; k < kWin; ++k) {
            out += g(k) * rows.middleRows(k, h - kWin + 1);
        }
        return out;
    };
    const Plane<double> mx = filter(x);
    const Plane<double> my = filter(y);
    const Plane<double> sxx = filter(x * x) - mx * mx;
    const Plane<double> syy = filter(y * y) - my * my;
    const Plane<double> sxy = filter(x * y) - mx * my;
    const Plane<double> map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
                              / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    return map.mean();
}

}  // namespace lwg
