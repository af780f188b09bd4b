#include "lwg/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lwg {

namespace {

constexpr char kMagic[4] = {'L', 'W', 'T', 'F'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v)
{
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
    }
}

uint32_t get_u32(const std::string& in, std::size_t& offset)
{
    if (in.size() < offset + 4) {
        throw ParseError("tensor file truncated in header");
    }
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        v |= static_cast<uint32_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
    }
    offset += 4;
    return v;
}

template <typename T>
void put_values(std::string& out, const std::vector<T>& values)
{
    if constexpr (sizeof(T) == 1) {
        out.append(reinterpret_cast<const char*>(values.data()), values.size());
    } else {
        for (const T& v : values) {
            uint32_t bits = 0;
            std::memcpy(&bits, &v, 4);
            put_u32(out, bits);
        }
    }
}

template <typename T>
std::vector<T> get_values(const std::string& in, std::size_t& offset, std::size_t count)
{
    if ((in.size() - offset) / sizeof(T) < count) {
        throw ParseError("tensor file truncated: payload needs " + std::to_string(count * sizeof(T))
                         + " bytes, " + std::to_string(in.size() - offset) + " available");
    }
    std::vector<T> out(count);
    if constexpr (sizeof(T) == 1) {
        std::memcpy(out.data(), in.data() + offset, count);
        offset += count;
    } else {
        for (auto& v : out) {
            const uint32_t bits = get_u32(in, offset);
            std::memcpy(&v, &bits, 4);
        }
    }
    return out;
}

std::vector<float> to_vector(const Eigen::Ref<const RowMatrix<float>>& m)
{
    std::vector<float> v(static_cast<std::size_t>(m.size()));
    Eigen::Map<RowMatrix<float>>(v.data(), m.rows(), m.cols()) = m;
    return v;
}

uint32_t dim(Eigen::Index n) { return static_cast<uint32_t>(n); }

}  // namespace

std::size_t Tensor::element_count() const
{
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, uint32_t d) { return a * d; });
}

std::string encode_tensor(const Tensor& t)
{
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<uint32_t>(t.dtype()));
    put_u32(out, static_cast<uint32_t>(t.dims.size()));
    for (uint32_t d : t.dims) {
        put_u32(out, d);
    }
    std::visit([&](const auto& v) { put_values(out, v); }, t.values);
    return out;
}

Tensor decode_tensor(const std::string& bytes, std::size_t& offset)
{
    if (bytes.size() < offset + 4 || std::memcmp(bytes.data() + offset, kMagic, 4) != 0) {
        throw ParseError("not a tensor file: bad magic");
    }
    offset += 4;
    const uint32_t version = get_u32(bytes, offset);
    if (version != kVersion) {
        throw ParseError("unsupported tensor version " + std::to_string(version));
    }
    const uint32_t dtype = get_u32(bytes, offset);
    const uint32_t rank = get_u32(bytes, offset);
    Tensor t;
    for (uint32_t r = 0; r < rank; ++r) {
        t.dims.push_back(get_u32(bytes, offset));
    }
    const std::size_t count = t.element_count();
    switch (static_cast<DType>(dtype)) {
    case DType::F32:
        t.values = get_values<float>(bytes, offset, count);
        break;
    case DType::U8:
        t.values = get_values<uint8_t>(bytes, offset, count);
        break;
    case DType::I32:
        t.values = get_values<int32_t>(bytes, offset, count);
        break;
    default:
        throw ParseError("unknown tensor dtype " + std::to_string(dtype));
    }
    return t;
}

void tensor_write(const std::filesystem::path& path, const Tensor& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    const std::string bytes = encode_tensor(t);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Tensor tensor_read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    std::size_t offset = 0;
    Tensor t = decode_tensor(bytes, offset);
    if (offset != bytes.size()) {
        throw ParseError(path.string() + ": trailing bytes after tensor payload");
    }
    return t;
}

Tensor to_tensor(const FeatureMap& f)
{
    return make_tensor({dim(f.channels()), dim(f.height), dim(f.width)}, to_vector(f.data));
}

FeatureMap feature_map_from(const Tensor& t)
{
    const auto& v = t.as<float>();
    if (t.dims.size() != 3 && t.dims.size() != 2) {
        throw ShapeError("feature map tensor must be (C, H, W) or (H, W)");
    }
    const bool planar = t.dims.size() == 2;
    FeatureMap f(planar ? 1 : static_cast<int>(t.dims[0]), static_cast<int>(t.dims[planar ? 0 : 1]),
                 static_cast<int>(t.dims[planar ? 1 : 2]));
    f.data = Eigen::Map<const RowMatrix<float>>(v.data(), f.channels(), f.pixels());
    return f;
}

Tensor to_tensor(const Plane<float>& p)
{
    std::vector<float> v(p.data(), p.data() + p.size());
    return make_tensor({dim(p.rows()), dim(p.cols())}, std::move(v));
}

Plane<float> plane_from(const Tensor& t)
{
    const auto& v = t.as<float>();
    if (t.dims.size() == 3 && t.dims[0] == 1) {
        return Eigen::Map<const Plane<float>>(v.data(), t.dims[1], t.dims[2]);
    }
    if (t.dims.size() != 2) {
        throw ShapeError("expected an (H, W) f32 tensor");
    }
    return Eigen::Map<const Plane<float>>(v.data(), t.dims[0], t.dims[1]);
}

Tensor to_tensor(const Plane<int32_t>& p)
{
    std::vector<int32_t> v(p.data(), p.data() + p.size());
    return make_tensor({dim(p.rows()), dim(p.cols())}, std::move(v));
}

Tensor to_tensor(const Mask& m)
{
    std::vector<uint8_t> v(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        v[static_cast<std::size_t>(i)] = m.data()[i] ? 1 : 0;
    }
    return make_tensor({dim(m.rows()), dim(m.cols())}, std::move(v));
}

Mask mask_from(const Tensor& t)
{
    const auto& v = t.as<uint8_t>();
    if (t.dims.size() != 2) {
        throw ShapeError("expected an (H, W) u8 tensor");
    }
    Mask m(t.dims[0], t.dims[1]);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = v[static_cast<std::size_t>(i)] != 0;
    }
    return m;
}

Tensor flow_tensor(const TransformFlow& f)
{
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(2 * f.valid.size()));
    for (int i = 0; i < f.height(); ++i) {
        for (int j = 0; j < f.width(); ++j) {
            v.push_back(f.x(i, j));
            v.push_back(f.y(i, j));
        }
    }
    return make_tensor({dim(f.height()), dim(f.width()), 2}, std::move(v));
}

TransformFlow flow_from(const Tensor& flow, const Tensor& valid)
{
    const auto& v = flow.as<float>();
    if (flow.dims.size() != 3 || flow.dims[2] != 2) {
        throw ShapeError("flow tensor must be (H, W, 2)");
    }
    TransformFlow f;
    f.valid = mask_from(valid);
    if (f.valid.rows() != flow.dims[0] || f.valid.cols() != flow.dims[1]) {
        throw ShapeError("flow and validity mask sizes differ");
    }
    f.x = Plane<float>::Zero(flow.dims[0], flow.dims[1]);
    f.y = Plane<float>::Zero(flow.dims[0], flow.dims[1]);
    std::size_t k = 0;
    for (int i = 0; i < f.height(); ++i) {
        for (int j = 0; j < f.width(); ++j, k += 2) {
            // Invalid entries are zero by contract, whatever the file holds.
            if (f.valid(i, j)) {
                f.x(i, j) = v[k];
                f.y(i, j) = v[k + 1];
            }
        }
    }
    return f;
}

Tensor bary_tensor(const RenderMaps& m)
{
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(3 * m.corr.size()));
    for (int i = 0; i < m.height(); ++i) {
        for (int j = 0; j < m.width(); ++j) {
            for (int k = 0; k < 3; ++k) {
                v.push_back(m.bary[k](i, j));
            }
        }
    }
    return make_tensor({dim(m.height()), dim(m.width()), 3}, std::move(v));
}

}  // namespace lwg
