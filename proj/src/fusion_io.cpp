#include "lwg/fusion_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace lwg {

namespace {

constexpr char kBundleMagic[4] = {'L', 'W', 'T', 'B'};
constexpr uint32_t kBundleVersion = 1;

void put_u32(std::string& out, uint32_t v)
{
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
    }
}

uint32_t get_u32(const std::string& in, std::size_t& offset)
{
    if (in.size() < offset + 4) {
        throw ParseError("tensor bundle truncated");
    }
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
        v |= static_cast<uint32_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
    }
    offset += 4;
    return v;
}

Tensor matrix_tensor(const RowMatrix<float>& m, std::vector<uint32_t> dims)
{
    std::vector<float> v(m.data(), m.data() + m.size());
    return make_tensor(std::move(dims), std::move(v));
}

const Tensor& section(const TensorBundle& bundle, const std::string& name)
{
    const auto it = bundle.find(name);
    if (it == bundle.end()) {
        throw ParseError("fusion params: missing section \"" + name + "\"");
    }
    return it->second;
}

RowMatrix<float> matrix_from(const Tensor& t, const std::string& name)
{
    const auto& v = t.as<float>();
    if (t.dims.size() != 2) {
        throw ShapeError("fusion params: section \"" + name + "\" must be 2-D");
    }
    return Eigen::Map<const RowMatrix<float>>(v.data(), t.dims[0], t.dims[1]);
}

void put_conv(TensorBundle& b, const std::string& name, const Conv3x3& c)
{
    b[name + ".weight"] = matrix_tensor(
        c.weight, {static_cast<uint32_t>(c.out_channels()), static_cast<uint32_t>(c.in_channels()), 3, 3});
    const auto n = static_cast<uint32_t>(c.bias.size());
    b[name + ".bias"] = make_tensor({n}, std::vector<float>(c.bias.data(), c.bias.data() + n));
}

Conv3x3 get_conv(const TensorBundle& b, const std::string& name)
{
    const Tensor& w = section(b, name + ".weight");
    const Tensor& bias = section(b, name + ".bias");
    if (w.dims.size() != 4 || w.dims[2] != 3 || w.dims[3] != 3 || bias.dims.size() != 1 || bias.dims[0] != w.dims[0]) {
        throw ShapeError("fusion params: \"" + name + "\" must be (out, in, 3, 3) with an (out) bias");
    }
    Conv3x3 c;
    c.weight = Eigen::Map<const RowMatrix<float>>(w.as<float>().data(), w.dims[0], 9 * w.dims[1]);
    c.bias = Eigen::Map<const Eigen::VectorXf>(bias.as<float>().data(), bias.dims[0]);
    return c;
}

}  // namespace

BlockKind parse_block_kind(const std::string& name)
{
    if (name == "add") return BlockKind::Add;
    if (name == "mean") return BlockKind::Mean;
    if (name == "gate_add") return BlockKind::GateAdd;
    if (name == "gate_mean") return BlockKind::GateMean;
    if (name == "attention") return BlockKind::Attention;
    throw ParseError("unknown block \"" + name + "\" (add, mean, gate_add, gate_mean, attention)");
}

std::string to_string(BlockKind kind)
{
    switch (kind) {
    case BlockKind::Add: return "add";
    case BlockKind::Mean: return "mean";
    case BlockKind::GateAdd: return "gate_add";
    case BlockKind::GateMean: return "gate_mean";
    case BlockKind::Attention: return "attention";
    }
    return "unknown";
}

void bundle_write(const std::filesystem::path& path, const TensorBundle& bundle)
{
    std::string out(kBundleMagic, 4);
    put_u32(out, kBundleVersion);
    put_u32(out, static_cast<uint32_t>(bundle.size()));
    for (const auto& [name, tensor] : bundle) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        out += encode_tensor(tensor);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw Error("cannot write " + path.string());
    }
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

TensorBundle bundle_read(const std::filesystem::path& path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << file.rdbuf();
    const std::string bytes = ss.str();
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kBundleMagic, 4) != 0) {
        throw ParseError(path.string() + ": not a tensor bundle (bad magic)");
    }
    std::size_t offset = 4;
    if (get_u32(bytes, offset) != kBundleVersion) {
        throw ParseError(path.string() + ": unsupported bundle version");
    }
    const uint32_t count = get_u32(bytes, offset);
    TensorBundle bundle;
    for (uint32_t k = 0; k < count; ++k) {
        const uint32_t len = get_u32(bytes, offset);
        if (bytes.size() - offset < len) {
            throw ParseError("tensor bundle truncated in section name");
        }
        std::string name = bytes.substr(offset, len);
        offset += len;
        bundle[name] = decode_tensor(bytes, offset);
    }
    if (offset != bytes.size()) {
        throw ParseError(path.string() + ": trailing bytes after last section");
    }
    return bundle;
}

TensorBundle to_bundle(const FusionParams& params)
{
    TensorBundle b;
    b["wq"] = matrix_tensor(params.wq, {static_cast<uint32_t>(params.wq.rows()), static_cast<uint32_t>(params.wq.cols())});
    b["wk"] = matrix_tensor(params.wk, {static_cast<uint32_t>(params.wk.rows()), static_cast<uint32_t>(params.wk.cols())});
    b["wv"] = matrix_tensor(params.wv, {static_cast<uint32_t>(params.wv.rows()), static_cast<uint32_t>(params.wv.cols())});
    put_conv(b, "gate1", params.gate1);
    put_conv(b, "gate2", params.gate2);
    put_conv(b, "spade_shared", params.spade_shared);
    put_conv(b, "spade_gamma", params.spade_gamma);
    put_conv(b, "spade_beta", params.spade_beta);
    b["eps"] = make_tensor<float>({1}, {params.eps});
    return b;
}

FusionParams fusion_params_from(const TensorBundle& bundle)
{
    FusionParams p;
    p.wq = matrix_from(section(bundle, "wq"), "wq");
    p.wk = matrix_from(section(bundle, "wk"), "wk");
    p.wv = matrix_from(section(bundle, "wv"), "wv");
    p.gate1 = get_conv(bundle, "gate1");
    p.gate2 = get_conv(bundle, "gate2");
    p.spade_shared = get_conv(bundle, "spade_shared");
    p.spade_gamma = get_conv(bundle, "spade_gamma");
    p.spade_beta = get_conv(bundle, "spade_beta");
    const auto& eps = section(bundle, "eps").as<float>();
    if (eps.size() != 1) {
        throw ShapeError("fusion params: eps must hold one value");
    }
    p.eps = eps[0];
    return p;
}

}  // namespace lwg
