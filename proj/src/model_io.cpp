#include "lwg/model_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace lwg {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

json parse_json(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

const json& require(const json& doc, const char* key)
{
    if (!doc.is_object()) {
        throw ParseError("expected a JSON object");
    }
    const auto it = doc.find(key);
    if (it == doc.end()) {
        throw ParseError(std::string("missing field \"") + key + "\"");
    }
    if (!it->is_array()) {
        throw ParseError(std::string("field \"") + key + "\" must be an array");
    }
    return *it;
}

template <typename T>
std::vector<T> as_vector(const json& arr, const char* key)
{
    std::vector<T> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) {
            throw ParseError(std::string("field \"") + key + "\" must contain only numbers");
        }
        if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) {
                throw ParseError(std::string("field \"") + key + "\" must contain integers");
            }
        }
        out.push_back(v.get<T>());
    }
    return out;
}

void check_multiple(std::size_t size, std::size_t divisor, const char* key)
{
    if (divisor == 0 || size % divisor != 0) {
        throw ParseError(std::string("field \"") + key + "\" has length " + std::to_string(size)
                         + ", not a multiple of " + std::to_string(divisor));
    }
}

template <typename Matrix>
json flat(const Matrix& m)
{
    json arr = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            arr.push_back(m(r, c));
        }
    }
    return arr;
}

}  // namespace

BodyModel parse_model(const std::string& json_text)
{
    const json doc = parse_json(json_text);
    const auto verts = as_vector<double>(require(doc, "vertices"), "vertices");
    const auto faces = as_vector<int32_t>(require(doc, "faces"), "faces");
    const auto shape = as_vector<double>(require(doc, "shape_dirs"), "shape_dirs");
    const auto regressor = as_vector<double>(require(doc, "joint_regressor"), "joint_regressor");
    const auto parents = as_vector<int>(require(doc, "parents"), "parents");
    const auto weights = as_vector<double>(require(doc, "skin_weights"), "skin_weights");

    check_multiple(verts.size(), 3, "vertices");
    check_multiple(faces.size(), 3, "faces");
    const std::size_t nv = verts.size() / 3;
    const std::size_t nj = parents.size();
    check_multiple(shape.size(), 3 * nv, "shape_dirs");
    check_multiple(regressor.size(), nv, "joint_regressor");
    check_multiple(weights.size(), nj, "skin_weights");
    if (regressor.size() != nj * nv) {
        throw ParseError("field \"joint_regressor\" must have n_J * N_v entries");
    }
    if (weights.size() != nv * nj) {
        throw ParseError("field \"skin_weights\" must have N_v * n_J entries");
    }
    const auto n_beta = static_cast<Eigen::Index>(nv == 0 ? 0 : shape.size() / (3 * nv));

    BodyModel model;
    const auto rows = static_cast<Eigen::Index>(nv);
    model.template_vertices = Eigen::Map<const Points3<double>>(verts.data(), rows, 3);
    model.faces = Eigen::Map<const FaceIndices>(faces.data(), static_cast<Eigen::Index>(faces.size() / 3), 3);
    model.shape_dirs = Eigen::Map<const RowMatrix<double>>(shape.data(), 3 * rows, n_beta);
    model.joint_regressor =
        Eigen::Map<const RowMatrix<double>>(regressor.data(), static_cast<Eigen::Index>(nj), rows);
    model.parents = parents;
    model.skin_weights = Eigen::Map<const RowMatrix<double>>(weights.data(), rows, static_cast<Eigen::Index>(nj));
    if (doc.contains("head_faces")) {
        model.head_faces = as_vector<int>(require(doc, "head_faces"), "head_faces");
    }
    // "pose_dirs" (pose-dependent correctives) is accepted but not applied.
    validate(model);
    return model;
}

BodyModel load_model(const std::filesystem::path& path) { return parse_model(read_text(path)); }

std::string dump_model(const BodyModel& model)
{
    json doc;
    doc["vertices"] = flat(model.template_vertices);
    doc["faces"] = flat(model.faces);
    doc["shape_dirs"] = flat(model.shape_dirs);
    doc["joint_regressor"] = flat(model.joint_regressor);
    doc["parents"] = model.parents;
    doc["skin_weights"] = flat(model.skin_weights);
    if (!model.head_faces.empty()) {
        doc["head_faces"] = model.head_faces;
    }
    return doc.dump();
}

void save_model(const BodyModel& model, const std::filesystem::path& path) { write_text(dump_model(model), path); }

BodyModel synth_model(int n_segments)
{
    if (n_segments < 1) {
        throw InvariantError("synth_model: n_segments must be >= 1");
    }
    constexpr int kRing = 8;
    constexpr double kRadius = 0.45;
    constexpr double kBottomPole = -0.45;
    constexpr double kTopPole = 2.5;
    // Tabulated so the ring is mirror-symmetric bit for bit.
    constexpr double h = std::numbers::sqrt2 / 2.0;
    constexpr double kCos[kRing] = {1.0, h, 0.0, -h, -1.0, -h, 0.0, h};
    constexpr double kSin[kRing] = {0.0, h, 1.0, h, 0.0, -h, -1.0, -h};
    const int n_rings = 2 * n_segments + 1;
    const int nv = kRing * n_rings + 2;
    const int bottom = 0;
    const int top = nv - 1;
    auto ring_vertex = [&](int ring, int m) { return 1 + ring * kRing + (m % kRing); };

    BodyModel model;
    model.template_vertices.resize(nv, 3);
    model.template_vertices.row(bottom) << 0.0, kBottomPole, 0.0;
    model.template_vertices.row(top) << 0.0, kTopPole, 0.0;
    for (int k = 0; k < n_rings; ++k) {
        const double y = static_cast<double>(k) / n_segments;
        for (int m = 0; m < kRing; ++m) {
            model.template_vertices.row(ring_vertex(k, m)) << kRadius * kCos[m], y, kRadius * kSin[m];
        }
    }

    std::vector<Eigen::Vector3i> tris;
    for (int m = 0; m < kRing; ++m) {
        tris.emplace_back(bottom, ring_vertex(0, m + 1), ring_vertex(0, m));
    }
    for (int k = 0; k + 1 < n_rings; ++k) {
        for (int m = 0; m < kRing; ++m) {
            const int a = ring_vertex(k, m);
            const int b = ring_vertex(k, m + 1);
            const int c = ring_vertex(k + 1, m + 1);
            const int d = ring_vertex(k + 1, m);
            tris.emplace_back(a, b, c);
            tris.emplace_back(a, c, d);
        }
    }
    const int first_head = static_cast<int>(tris.size());
    for (int m = 0; m < kRing; ++m) {
        tris.emplace_back(ring_vertex(n_rings - 1, m), ring_vertex(n_rings - 1, m + 1), top);
    }
    model.faces.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t f = 0; f < tris.size(); ++f) {
        model.faces.row(static_cast<Eigen::Index>(f)) = tris[f].transpose();
    }
    for (int f = first_head; f < static_cast<int>(tris.size()); ++f) {
        model.head_faces.push_back(f);
    }

    model.shape_dirs = RowMatrix<double>::Zero(3 * nv, 1);
    for (int v = 0; v < nv; ++v) {
        model.shape_dirs(3 * v + 1, 0) = model.template_vertices(v, 1);
    }

    model.parents = {-1, 0};
    model.joint_regressor = RowMatrix<double>::Zero(2, nv);
    for (int m = 0; m < kRing; ++m) {
        model.joint_regressor(0, ring_vertex(0, m)) = 1.0 / kRing;
        model.joint_regressor(1, ring_vertex(n_segments, m)) = 1.0 / kRing;
    }
    model.skin_weights = RowMatrix<double>::Zero(nv, 2);
    for (int v = 0; v < nv; ++v) {
        model.skin_weights(v, model.template_vertices(v, 1) < 1.0 ? 0 : 1) = 1.0;
    }
    validate(model);
    return model;
}

CameraWP synth_default_camera() { return CameraWP{0.5, 0.0, -1.0}; }

BodyParams rest_params(const BodyModel& model, const CameraWP& camera)
{
    BodyParams p;
    p.pose.theta = Points3<double>::Zero(model.n_joints(), 3);
    p.shape.beta = Eigen::VectorXd::Zero(model.n_shape());
    p.camera = camera;
    return p;
}

BodyParams parse_params(const std::string& json_text, const BodyModel& model)
{
    const json doc = parse_json(json_text);
    const auto theta = as_vector<double>(require(doc, "theta"), "theta");
    const auto beta = as_vector<double>(require(doc, "beta"), "beta");
    const auto camera = as_vector<double>(require(doc, "camera"), "camera");
    if (theta.size() != static_cast<std::size_t>(3 * model.n_joints())) {
        throw ShapeError("params: theta has " + std::to_string(theta.size()) + " values, model expects "
                         + std::to_string(3 * model.n_joints()));
    }
    if (beta.size() != static_cast<std::size_t>(model.n_shape())) {
        throw ShapeError("params: beta has " + std::to_string(beta.size()) + " values, model expects "
                         + std::to_string(model.n_shape()));
    }
    if (camera.size() != 3) {
        throw ShapeError("params: camera must be [s, tx, ty]");
    }
    BodyParams p;
    p.pose.theta = Eigen::Map<const Points3<double>>(theta.data(), model.n_joints(), 3);
    p.shape.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), model.n_shape());
    p.camera = CameraWP{camera[0], camera[1], camera[2]};
    if (!(p.camera.scale > 0.0) || !std::isfinite(p.camera.scale) || !std::isfinite(p.camera.tx)
        || !std::isfinite(p.camera.ty)) {
        throw InvariantError("params: camera scale must be positive and all camera values finite");
    }
    if (!p.pose.theta.allFinite() || !p.shape.beta.allFinite()) {
        throw InvariantError("params: theta and beta must be finite");
    }
    return p;
}

BodyParams load_params(const std::filesystem::path& path, const BodyModel& model)
{
    return parse_params(read_text(path), model);
}

void save_params(const BodyParams& params, const std::filesystem::path& path)
{
    json doc;
    doc["theta"] = flat(params.pose.theta);
    doc["beta"] = flat(params.shape.beta);
    doc["camera"] = {params.camera.scale, params.camera.tx, params.camera.ty};
    write_text(doc.dump(2), path);
}

}  // namespace lwg
