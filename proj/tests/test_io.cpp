#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"
#include "lwg/fusion_io.hpp"
#include "lwg/image_io.hpp"
#include "lwg/model_io.hpp"
#include "lwg/tensor_io.hpp"
#include "test_support.hpp"

using namespace lwg;
using testkit::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

template <typename Fn>
std::string error_message(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(ModelIo, SynthModelRoundTrip)
{
    TempDir dir("model");
    const BodyModel m = synth_model(2);
    save_model(m, dir / "m.json");
    const BodyModel r = load_model(dir / "m.json");
    EXPECT_EQ(r.n_vertices(), 42);
    EXPECT_EQ(r.template_vertices, m.template_vertices);
    EXPECT_EQ(r.faces, m.faces);
    EXPECT_EQ(r.shape_dirs, m.shape_dirs);
    EXPECT_EQ(r.joint_regressor, m.joint_regressor);
    EXPECT_EQ(r.skin_weights, m.skin_weights);
    EXPECT_EQ(r.parents, m.parents);
    EXPECT_EQ(r.head_faces, m.head_faces);
}

TEST(ModelIo, SkinRowSumReported)
{
    auto j = nlohmann::json::parse(dump_model(synth_model(2)));
    j["skin_weights"][0] = 0.9;
    const std::string msg = error_message([&] { parse_model(j.dump()); });
    EXPECT_NE(msg.find("row sum"), std::string::npos) << msg;
    EXPECT_THROW(parse_model(j.dump()), InvariantError);
}

TEST(ModelIo, MissingParentsIsParseError)
{
    auto j = nlohmann::json::parse(dump_model(synth_model(2)));
    j.erase("parents");
    EXPECT_THROW(parse_model(j.dump()), ParseError);
    EXPECT_THROW(parse_model("{not json"), ParseError);
    EXPECT_THROW(load_model("/nonexistent/model.json"), ParseError);
}

TEST(ModelIo, WrongFlatLengthsRejected)
{
    auto j = nlohmann::json::parse(dump_model(synth_model(2)));
    j["vertices"].erase(0);
    EXPECT_THROW(parse_model(j.dump()), Error);
}

TEST(ModelIo, PoseDirsAccepted)
{
    auto j = nlohmann::json::parse(dump_model(synth_model(1)));
    j["pose_dirs"] = nlohmann::json::array({0.0, 1.0});
    EXPECT_NO_THROW(parse_model(j.dump()));
}

TEST(ModelIo, SmplSizedModelAndParams)
{
    const BodyModel m = testkit::smpl_sized_sphere();
    const BodyModel r = parse_model(dump_model(m));
    EXPECT_EQ(r.n_vertices(), 6890);
    EXPECT_EQ(r.n_faces(), 13776);
    EXPECT_EQ(r.n_joints(), 24);
    EXPECT_EQ(r.n_shape(), 10);
    nlohmann::json p;
    p["theta"] = std::vector<double>(72, 0.01);
    p["beta"] = std::vector<double>(10, 0.0);
    p["camera"] = {0.8, 0.0, 0.0};
    const BodyParams bp = parse_params(p.dump(), r);
    EXPECT_EQ(bp.pose.theta.size(), 72);
    p["theta"] = std::vector<double>(69, 0.0);
    EXPECT_THROW(parse_params(p.dump(), r), ShapeError);
}

TEST(ParamsIo, RoundTripAndValidation)
{
    TempDir dir("params");
    const BodyModel m = synth_model(2);
    std::mt19937 gen(3);
    const BodyParams p = testkit::random_params(gen, m);
    save_params(p, dir / "p.json");
    const BodyParams r = load_params(dir / "p.json", m);
    EXPECT_EQ(r.pose.theta, p.pose.theta);
    EXPECT_EQ(r.shape.beta, p.shape.beta);
    EXPECT_EQ(r.camera.scale, p.camera.scale);
    EXPECT_EQ(r.camera.ty, p.camera.ty);

    auto j = nlohmann::json::parse(testkit::read_file(dir / "p.json"));
    j["camera"][0] = -1.0;
    EXPECT_THROW(parse_params(j.dump(), m), Error);
    j["camera"] = {1.0, 0.0};
    EXPECT_THROW(parse_params(j.dump(), m), Error);
    j = nlohmann::json::parse(testkit::read_file(dir / "p.json"));
    j["beta"] = {0.0, 0.0};
    EXPECT_THROW(parse_params(j.dump(), m), ShapeError);
}

TEST(TensorIo, F32RoundTripBitIdentical)
{
    TempDir dir("tensor");
    std::mt19937 gen(1);
    std::uniform_real_distribution<float> u(-1e6f, 1e6f);
    std::vector<float> v(60);
    for (auto& x : v) {
        x = u(gen);
    }
    v[7] = -0.0f;
    v[8] = std::numeric_limits<float>::infinity();
    const Tensor t = make_tensor<float>({3, 4, 5}, v);
    tensor_write(dir / "t.lwtf", t);
    const Tensor r = tensor_read(dir / "t.lwtf");
    EXPECT_EQ(r.dims, t.dims);
    ASSERT_EQ(r.dtype(), DType::F32);
    EXPECT_EQ(std::memcmp(r.as<float>().data(), v.data(), v.size() * 4), 0);
}

TEST(TensorIo, HeaderLayoutIsLittleEndian)
{
    const Tensor t = make_tensor<int32_t>({2}, {1, -2});
    const std::string bytes = encode_tensor(t);
    const std::string expected("LWTF\x01\0\0\0\x02\0\0\0\x01\0\0\0\x02\0\0\0\x01\0\0\0\xfe\xff\xff\xff", 28);
    EXPECT_EQ(bytes, expected);
}

TEST(TensorIo, MaskAndI32RoundTrip)
{
    TempDir dir("mask");
    Mask m = Mask::Constant(3, 4, false);
    m(0, 1) = m(2, 3) = true;
    tensor_write(dir / "m.lwtf", to_tensor(m));
    EXPECT_TRUE((mask_from(tensor_read(dir / "m.lwtf")) == m).all());
    Plane<int32_t> c = Plane<int32_t>::Constant(2, 3, -1);
    c(1, 2) = 12345;
    tensor_write(dir / "c.lwtf", to_tensor(c));
    const Tensor r = tensor_read(dir / "c.lwtf");
    EXPECT_EQ(r.dtype(), DType::I32);
    EXPECT_EQ(r.as<int32_t>()[5], 12345);
}

TEST(TensorIo, TruncatedAndCorruptFiles)
{
    TempDir dir("trunc");
    const Tensor t = make_tensor<float>({4, 4}, std::vector<float>(16, 1.0f));
    const std::string bytes = encode_tensor(t);
    write_text(dir / "short.lwtf", bytes.substr(0, bytes.size() - 3));
    const std::string msg = error_message([&] { tensor_read(dir / "short.lwtf"); });
    EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
    EXPECT_THROW(tensor_read(dir / "short.lwtf"), ParseError);

    write_text(dir / "hdr.lwtf", bytes.substr(0, 10));
    EXPECT_THROW(tensor_read(dir / "hdr.lwtf"), ParseError);

    std::string bad = bytes;
    bad[0] = 'X';
    write_text(dir / "magic.lwtf", bad);
    EXPECT_THROW(tensor_read(dir / "magic.lwtf"), ParseError);

    bad = bytes;
    bad[4] = 2;
    write_text(dir / "version.lwtf", bad);
    EXPECT_THROW(tensor_read(dir / "version.lwtf"), ParseError);

    write_text(dir / "extra.lwtf", bytes + "x");
    EXPECT_THROW(tensor_read(dir / "extra.lwtf"), ParseError);
    EXPECT_THROW(tensor_read(dir / "missing.lwtf"), ParseError);
}

TEST(TensorIo, FeatureMapAndFlowConversions)
{
    std::mt19937 gen(2);
    const FeatureMap f = testkit::random_map(gen, 3, 4, 5);
    const Tensor t = to_tensor(f);
    EXPECT_EQ(t.dims, (std::vector<uint32_t>{3, 4, 5}));
    EXPECT_EQ(feature_map_from(t).data, f.data);

    TransformFlow tf = identity_flow(4, 5);
    tf.valid(1, 1) = false;
    tf.x(1, 1) = tf.y(1, 1) = 0.0f;
    const Tensor ft = flow_tensor(tf);
    EXPECT_EQ(ft.dims, (std::vector<uint32_t>{4, 5, 2}));
    EXPECT_EQ(ft.as<float>()[2 * (1 * 5 + 2)], tf.x(1, 2));
    EXPECT_EQ(ft.as<float>()[2 * (1 * 5 + 2) + 1], tf.y(1, 2));
    const TransformFlow back = flow_from(ft, to_tensor(tf.valid));
    EXPECT_TRUE((back.x == tf.x).all() && (back.y == tf.y).all() && (back.valid == tf.valid).all());
    EXPECT_THROW(flow_from(ft, to_tensor(Mask::Constant(5, 4, true).eval())), ShapeError);
}

TEST(ImageIo, PngRoundTrip)
{
    TempDir dir("png");
    const Image img = testkit::textured_image(13, 17);
    write_png(img, dir / "a.png");
    const Image r = read_png(dir / "a.png");
    EXPECT_EQ(r.height, 13);
    EXPECT_EQ(r.width, 17);
    EXPECT_EQ(r.data, img.data);
}

TEST(ImageIo, GrayIsReplicated)
{
    TempDir dir("gray");
    Image g(1, 4, 4);
    g.data.setConstant(from_u8(200));
    write_png(g, dir / "g.png");
    const Image r = read_png(dir / "g.png");
    EXPECT_EQ(r.channels(), 3);
    EXPECT_TRUE((r.data.array() == from_u8(200)).all());
}

TEST(ImageIo, QuantizationRoundsHalfUp)
{
    EXPECT_EQ(to_u8(0.0f), 0);
    EXPECT_EQ(to_u8(1.0f), 255);
    EXPECT_EQ(to_u8(2.0f), 255);
    EXPECT_EQ(to_u8(-1.0f), 0);
    EXPECT_EQ(to_u8(from_u8(77)), 77);
    EXPECT_EQ(to_u8(10.5f / 255.0f), 11);
    for (int v = 0; v < 256; ++v) {
        EXPECT_EQ(to_u8(from_u8(static_cast<uint8_t>(v))), v);
    }
}

TEST(ImageIo, BadFilesThrow)
{
    TempDir dir("badpng");
    write_text(dir / "x.png", "not a png at all");
    EXPECT_THROW(read_png(dir / "x.png"), ParseError);
    EXPECT_THROW(read_png(dir / "none.png"), ParseError);
    EXPECT_THROW(write_png(Image(2, 4, 4), dir / "two.png"), ShapeError);
}

TEST(FusionIo, BundleRoundTrip)
{
    TempDir dir("bundle");
    FusionParams p = init_fusion_params<float>(3, 17);
    p.eps = 2e-5f;
    bundle_write(dir / "p.lwtb", to_bundle(p));
    const FusionParams r = fusion_params_from(bundle_read(dir / "p.lwtb"));
    EXPECT_EQ(r.wq, p.wq);
    EXPECT_EQ(r.wk, p.wk);
    EXPECT_EQ(r.wv, p.wv);
    EXPECT_EQ(r.gate1.weight, p.gate1.weight);
    EXPECT_EQ(r.gate2.bias, p.gate2.bias);
    EXPECT_EQ(r.spade_shared.weight, p.spade_shared.weight);
    EXPECT_EQ(r.spade_gamma.weight, p.spade_gamma.weight);
    EXPECT_EQ(r.spade_beta.bias, p.spade_beta.bias);
    EXPECT_EQ(r.eps, p.eps);
    EXPECT_EQ(bundle_read(dir / "p.lwtb").at("gate1.weight").dims, (std::vector<uint32_t>{3, 3, 3, 3}));
}

TEST(FusionIo, MissingSectionAndCorruptBundle)
{
    TempDir dir("bundle_bad");
    TensorBundle b = to_bundle(init_fusion_params<float>(2, 1));
    b.erase("wk");
    EXPECT_THROW(fusion_params_from(b), ParseError);
    bundle_write(dir / "b.lwtb", to_bundle(init_fusion_params<float>(2, 1)));
    const std::string bytes = testkit::read_file(dir / "b.lwtb");
    write_text(dir / "short.lwtb", bytes.substr(0, bytes.size() / 2));
    EXPECT_THROW(bundle_read(dir / "short.lwtb"), ParseError);
    write_text(dir / "magic.lwtb", "LWTF" + bytes.substr(4));
    EXPECT_THROW(bundle_read(dir / "magic.lwtb"), ParseError);
}
