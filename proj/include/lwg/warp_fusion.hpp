#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lwg/feature_map.hpp"
#include "lwg/flow.hpp"

namespace lwg {

// ---------------------------------------------------------------------------
// Bilinear sampling

namespace detail {

// Grid coordinates produced in f32 land within this distance of an integer
// pixel index are snapped onto it, so identity flows reproduce their input.
inline constexpr double kGridSnap = 1.0 / 4096.0;

inline double snap(double u)
{
    const double r = std::round(u);
    return std::abs(u - r) < kGridSnap ? r : u;
}

}  // namespace detail

/** Samples src at every flow coordinate with bilinear interpolation. Taps
 *  outside the source image read as zero; invalid flow pixels produce zero.
 *  The output has the flow's spatial size and src's channel count. */
template <typename Scalar>
FeatureMapT<Scalar> bilinear_sample(const FeatureMapT<Scalar>& src, const TransformFlow& tf)
{
    const int height = tf.height();
    const int width = tf.width();
    const int channels = src.channels();
    FeatureMapT<Scalar> out(channels, height, width);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            if (!tf.valid(i, j)) {
                continue;
            }
            const double u = detail::snap(to_pixel_x(tf.x(i, j), src.width));
            const double v = detail::snap(to_pixel_y(tf.y(i, j), src.height));
            const double fx = std::floor(u);
            const double fy = std::floor(v);
            if (!std::isfinite(fx) || !std::isfinite(fy) || fx < -1.0 || fy < -1.0 || fx > src.width
                || fy > src.height) {
                continue;
            }
            const int x0 = static_cast<int>(fx);
            const int y0 = static_cast<int>(fy);
            const double ax = u - fx;
            const double ay = v - fy;
            const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
            const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
            const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
            const Eigen::Index p = static_cast<Eigen::Index>(i) * width + j;
            for (int c = 0; c < channels; ++c) {
                double acc = 0.0;
                for (int t = 0; t < 4; ++t) {
                    if (w[t] == 0.0 || xs[t] < 0 || ys[t] < 0 || xs[t] >= src.width || ys[t] >= src.height) {
                        continue;
                    }
                    acc += w[t] * static_cast<double>(src(c, ys[t], xs[t]));
                }
                out.data(c, p) = static_cast<Scalar>(acc);
            }
        }
    }
    return out;
}

template <typename Scalar>
struct SyntheticImageT {
    FeatureMapT<Scalar> image;
    // Number of sources with a valid flow at each pixel.
    Plane<int32_t> count;
};

/// Warps every source and averages, per pixel, over the sources whose flow is
/// valid there. Pixels with no valid source are zero.
template <typename Scalar>
SyntheticImageT<Scalar> compose_syn(std::span<const FeatureMapT<Scalar>> sources, std::span<const TransformFlow> flows)
{
    if (sources.empty()) {
        throw ShapeError("compose_syn: empty source list");
    }
    if (sources.size() != flows.size()) {
        throw ShapeError("compose_syn: source and flow counts differ");
    }
    const int height = flows[0].height();
    const int width = flows[0].width();
    SyntheticImageT<Scalar> out;
    out.image = FeatureMapT<Scalar>(sources[0].channels(), height, width);
    out.count = Plane<int32_t>::Zero(height, width);
    for (std::size_t s = 0; s < sources.size(); ++s) {
        if (flows[s].height() != height || flows[s].width() != width
            || sources[s].channels() != sources[0].channels()) {
            throw ShapeError("compose_syn: sources or flows differ in shape");
        }
        out.image.data += bilinear_sample(sources[s], flows[s]).data;
        out.count += flows[s].valid.template cast<int32_t>();
    }
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            const int32_t n = out.count(i, j);
            if (n > 1) {
                out.image.data.col(static_cast<Eigen::Index>(i) * width + j) /= static_cast<Scalar>(n);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convolution and parameters

/// 3x3 convolution, stride 1, zero padding 1. weight is (out, in * 9) laid out
/// as [out][in][ky][kx].
template <typename Scalar>
struct Conv3x3T {
    RowMatrix<Scalar> weight;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> bias;

    int in_channels() const { return static_cast<int>(weight.cols() / 9); }
    int out_channels() const { return static_cast<int>(weight.rows()); }
};

template <typename Scalar>
FeatureMapT<Scalar> conv3x3(const Conv3x3T<Scalar>& conv, const FeatureMapT<Scalar>& x)
{
    if (conv.weight.cols() != 9 * x.channels() || conv.bias.size() != conv.out_channels()) {
        throw ShapeError("conv3x3: kernel expects " + std::to_string(conv.in_channels()) + " input channels, got "
                         + std::to_string(x.channels()));
    }
    const int cin = x.channels();
    const int height = x.height;
    const int width = x.width;
    FeatureMapT<Scalar> out(conv.out_channels(), height, width);
    out.data.colwise() = conv.bias;
    RowMatrix<Scalar> shifted(cin, x.pixels());
    RowMatrix<Scalar> tap(conv.out_channels(), cin);
    for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
            shifted.setZero();
            const int dy = ky - 1;
            const int dx = kx - 1;
            for (int c = 0; c < cin; ++c) {
                for (int i = std::max(0, -dy); i < std::min(height, height - dy); ++i) {
                    const Eigen::Index dst = static_cast<Eigen::Index>(i) * width;
                    const Eigen::Index src = static_cast<Eigen::Index>(i + dy) * width;
                    for (int j = std::max(0, -dx); j < std::min(width, width - dx); ++j) {
                        shifted(c, dst + j) = x.data(c, src + j + dx);
                    }
                }
                tap.col(c) = conv.weight.col(c * 9 + ky * 3 + kx);
            }
            out.data.noalias() += tap * shifted;
        }
    }
    return out;
}

/** Weights of the fusion blocks.
 *  wq, wk: (d_k, C) per-pixel query/key embeddings; wv: (C_v, C) values.
 *  gate1, gate2: C -> C convolutions of the soft gate.
 *  spade_shared: C_v -> h; spade_gamma, spade_beta: h -> C. */
template <typename Scalar>
struct FusionParamsT {
    RowMatrix<Scalar> wq;
    RowMatrix<Scalar> wk;
    RowMatrix<Scalar> wv;
    Conv3x3T<Scalar> gate1;
    Conv3x3T<Scalar> gate2;
    Conv3x3T<Scalar> spade_shared;
    Conv3x3T<Scalar> spade_gamma;
    Conv3x3T<Scalar> spade_beta;
    Scalar eps = Scalar(1e-5);
};

using FusionParams = FusionParamsT<float>;
using Conv3x3 = Conv3x3T<float>;

/// Throws ShapeError unless the parameters fit feature maps with C channels.
template <typename Scalar>
void validate(const FusionParamsT<Scalar>& p, int channels)
{
    auto fail = [](const std::string& what) { throw ShapeError("fusion params: " + what); };
    if (p.wq.cols() != channels || p.wk.cols() != channels || p.wv.cols() != channels) {
        fail("embeddings must take " + std::to_string(channels) + " input channels");
    }
    if (p.wq.rows() != p.wk.rows() || p.wq.rows() == 0) {
        fail("query and key embeddings must share a non-zero width");
    }
    auto check_conv = [&](const Conv3x3T<Scalar>& c, Eigen::Index in, Eigen::Index out, const char* name) {
        if (c.weight.cols() != 9 * in || c.weight.rows() != out || c.bias.size() != out) {
            fail(std::string(name) + " has the wrong shape");
        }
    };
    check_conv(p.gate1, channels, channels, "gate1");
    check_conv(p.gate2, channels, channels, "gate2");
    const Eigen::Index hidden = p.spade_shared.out_channels();
    check_conv(p.spade_shared, p.wv.rows(), hidden, "spade_shared");
    check_conv(p.spade_gamma, hidden, channels, "spade_gamma");
    check_conv(p.spade_beta, hidden, channels, "spade_beta");
    if (!(p.eps > Scalar(0))) {
        fail("eps must be positive");
    }
}

/** Deterministic initializer: every weight and bias is drawn from
 *  uniform(-1/sqrt(C), 1/sqrt(C)) using mt19937 seeded with seed. d_k, the
 *  value width and the SPADE hidden width all equal C. */
template <typename Scalar = float>
FusionParamsT<Scalar> init_fusion_params(int channels, uint32_t seed)
{
    if (channels < 1) {
        throw ShapeError("init_fusion_params: channels must be >= 1");
    }
    std::mt19937 gen(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
    // 24 high bits of each draw; mt19937 output is fixed by the standard.
    auto draw = [&] { return static_cast<Scalar>((2.0 * (gen() >> 8) / 16777216.0 - 1.0) * bound); };
    auto fill = [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                m(r, c) = draw();
            }
        }
    };
    auto conv = [&](int in, int out) {
        Conv3x3T<Scalar> c;
        c.weight.resize(out, 9 * in);
        c.bias.resize(out);
        fill(c.weight);
        fill(c.bias);
        return c;
    };
    FusionParamsT<Scalar> p;
    p.wq.resize(channels, channels);
    p.wk.resize(channels, channels);
    p.wv.resize(channels, channels);
    fill(p.wq);
    fill(p.wk);
    fill(p.wv);
    p.gate1 = conv(channels, channels);
    p.gate2 = conv(channels, channels);
    p.spade_shared = conv(channels, channels);
    p.spade_gamma = conv(channels, channels);
    p.spade_beta = conv(channels, channels);
    return p;
}

// ---------------------------------------------------------------------------
// Aggregation blocks

namespace detail {

template <typename Scalar>
void require_sources(std::span<const FeatureMapT<Scalar>> xs, const FeatureMapT<Scalar>& xt, const char* what)
{
    if (xs.empty()) {
        throw ShapeError(std::string(what) + ": at least one source feature map is required");
    }
    for (const auto& x : xs) {
        require_same_shape(x, xt, what);
    }
}

template <typename Scalar>
RowMatrix<Scalar> sum_sources(std::span<const FeatureMapT<Scalar>> xs)
{
    RowMatrix<Scalar> acc = xs[0].data;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        acc += xs[i].data;
    }
    return acc;
}

}  // namespace detail

/// Sum of the warped sources plus the target stream.
template <typename Scalar>
FeatureMapT<Scalar> add_lwb(std::span<const FeatureMapT<Scalar>> xs_warped, const FeatureMapT<Scalar>& xt)
{
    detail::require_sources(xs_warped, xt, "add_lwb");
    FeatureMapT<Scalar> out = xt;
    out.data += detail::sum_sources(xs_warped);
    return out;
}

/// Mean of the warped sources plus the target stream.
template <typename Scalar>
FeatureMapT<Scalar> mean_agg(std::span<const FeatureMapT<Scalar>> xs_warped, const FeatureMapT<Scalar>& xt)
{
    detail::require_sources(xs_warped, xt, "mean_agg");
    FeatureMapT<Scalar> out = xt;
    out.data += detail::sum_sources(xs_warped) / static_cast<Scalar>(xs_warped.size());
    return out;
}

/// g(x) = sigmoid(conv2(relu(conv1(x)))), elementwise in (0, 1).
template <typename Scalar>
FeatureMapT<Scalar> gate(const FusionParamsT<Scalar>& params, const FeatureMapT<Scalar>& xt)
{
    FeatureMapT<Scalar> h = conv3x3(params.gate1, xt);
    h.data = h.data.cwiseMax(Scalar(0));
    FeatureMapT<Scalar> g = conv3x3(params.gate2, h);
    // Clamped to the representable interior so the gate never fully opens or closes.
    const Scalar lo = std::numeric_limits<Scalar>::min();
    const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
    g.data = (Scalar(1) / (Scalar(1) + (-g.data.array()).exp())).max(lo).min(hi).matrix();
    return g;
}

enum class GateVariant { Add, Mean };

/// g(xt) * agg(xs) + xt with agg = sum (Add) or mean (Mean).
template <typename Scalar>
FeatureMapT<Scalar> soft_gate(GateVariant variant, const FusionParamsT<Scalar>& params,
                              std::span<const FeatureMapT<Scalar>> xs_warped, const FeatureMapT<Scalar>& xt)
{
    detail::require_sources(xs_warped, xt, "soft_gate");
    RowMatrix<Scalar> agg = detail::sum_sources(xs_warped);
    if (variant == GateVariant::Mean) {
        agg /= static_cast<Scalar>(xs_warped.size());
    }
    const FeatureMapT<Scalar> g = gate(params, xt);
    FeatureMapT<Scalar> out = xt;
    out.data += g.data.cwiseProduct(agg);
    return out;
}

/// Per-channel instance normalization over the spatial dimensions (biased
/// variance).
template <typename Scalar>
FeatureMapT<Scalar> instance_norm(const FeatureMapT<Scalar>& x, Scalar eps)
{
    FeatureMapT<Scalar> out = x;
    const auto n = static_cast<double>(x.pixels());
    for (int c = 0; c < x.channels(); ++c) {
        const auto row = x.data.row(c).template cast<double>();
        const double mean = row.sum() / n;
        const double var = (row.array() - mean).square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
        out.data.row(c) = ((row.array() - mean) * inv).template cast<Scalar>().matrix();
    }
    return out;
}

/** Spatially-adaptive denormalization of xt conditioned on cond:
 *  h = relu(shared(cond)), out = norm(xt) * (1 + gamma(h)) + beta(h). */
template <typename Scalar>
FeatureMapT<Scalar> spade(const FusionParamsT<Scalar>& params, const FeatureMapT<Scalar>& xt,
                          const FeatureMapT<Scalar>& cond)
{
    if (cond.height != xt.height || cond.width != xt.width) {
        throw ShapeError("spade: condition and feature map differ in spatial size");
    }
    FeatureMapT<Scalar> h = conv3x3(params.spade_shared, cond);
    h.data = h.data.cwiseMax(Scalar(0));
    const FeatureMapT<Scalar> gamma = conv3x3(params.spade_gamma, h);
    const FeatureMapT<Scalar> beta = conv3x3(params.spade_beta, h);
    if (gamma.channels() != xt.channels()) {
        throw ShapeError("spade: modulation heads produce the wrong channel count");
    }
    FeatureMapT<Scalar> out = instance_norm(xt, params.eps);
    out.data = out.data.cwiseProduct((gamma.data.array() + Scalar(1)).matrix()) + beta.data;
    return out;
}

/// Softmax weights over sources at every pixel, (n, H * W).
template <typename Scalar>
RowMatrix<Scalar> attention_weights(const FusionParamsT<Scalar>& params,
                                    std::span<const FeatureMapT<Scalar>> xs_warped, const FeatureMapT<Scalar>& xt)
{
    detail::require_sources(xs_warped, xt, "att_lwb");
    validate(params, xt.channels());
    const auto n = static_cast<Eigen::Index>(xs_warped.size());
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(params.wk.rows()));
    const RowMatrix<Scalar> q = params.wq * xt.data;
    RowMatrix<Scalar> scores(n, xt.pixels());
    for (Eigen::Index s = 0; s < n; ++s) {
        const RowMatrix<Scalar> k = params.wk * xs_warped[s].data;
        scores.row(s) = q.cwiseProduct(k).colwise().sum() * scale;
    }
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> peak = scores.colwise().maxCoeff();
    scores.rowwise() -= peak;
    scores = scores.array().exp().matrix();
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> total = scores.colwise().sum();
    for (Eigen::Index s = 0; s < n; ++s) {
        scores.row(s) = scores.row(s).cwiseQuotient(total);
    }
    return scores;
}

/// Attention-weighted source values at every pixel, (C_v, H, W).
template <typename Scalar>
FeatureMapT<Scalar> fuse_sources(const FusionParamsT<Scalar>& params, std::span<const FeatureMapT<Scalar>> xs_warped,
                                 const FeatureMapT<Scalar>& xt)
{
    const RowMatrix<Scalar> a = attention_weights(params, xs_warped, xt);
    FeatureMapT<Scalar> fused(static_cast<int>(params.wv.rows()), xt.height, xt.width);
    for (std::size_t s = 0; s < xs_warped.size(); ++s) {
        const RowMatrix<Scalar> v = params.wv * xs_warped[s].data;
        fused.data += (v.array().rowwise() * a.row(static_cast<Eigen::Index>(s)).array()).matrix();
    }
    return fused;
}

/** Attentional block: per-pixel scaled dot-product attention of the target
 *  query against the n warped sources, then SPADE of xt conditioned on the
 *  fused values. */
template <typename Scalar>
FeatureMapT<Scalar> att_lwb(const FusionParamsT<Scalar>& params, std::span<const FeatureMapT<Scalar>> xs_warped,
                            const FeatureMapT<Scalar>& xt)
{
    return spade(params, xt, fuse_sources(params, xs_warped, xt));
}

enum class BlockKind { Add, Mean, GateAdd, GateMean, Attention };

BlockKind parse_block_kind(const std::string& name);
std::string to_string(BlockKind kind);

/// Warps each raw source feature by its flow, then runs the selected block.
template <typename Scalar>
FeatureMapT<Scalar> lwb_apply(BlockKind block, const FusionParamsT<Scalar>& params,
                              std::span<const FeatureMapT<Scalar>> xs_raw, std::span<const TransformFlow> flows,
                              const FeatureMapT<Scalar>& xt)
{
    if (xs_raw.size() != flows.size()) {
        throw ShapeError("lwb_apply: feature and flow counts differ");
    }
    std::vector<FeatureMapT<Scalar>> warped;
    warped.reserve(xs_raw.size());
    for (std::size_t s = 0; s < xs_raw.size(); ++s) {
        warped.push_back(bilinear_sample(xs_raw[s], flows[s]));
    }
    const std::span<const FeatureMapT<Scalar>> view(warped);
    switch (block) {
    case BlockKind::Add:
        return add_lwb(view, xt);
    case BlockKind::Mean:
        return mean_agg(view, xt);
    case BlockKind::GateAdd:
        return soft_gate(GateVariant::Add, params, view, xt);
    case BlockKind::GateMean:
        return soft_gate(GateVariant::Mean, params, view, xt);
    case BlockKind::Attention:
        return att_lwb(params, view, xt);
    }
    throw ShapeError("lwb_apply: unknown block");
}

}  // namespace lwg
