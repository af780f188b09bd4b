// Command-line front end: model generation, rasterization, flows, warping,
// fusion blocks, output composition, metrics, losses and the full pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lwg/fusion_io.hpp"
#include "lwg/image_io.hpp"
#include "lwg/metrics.hpp"
#include "lwg/model_io.hpp"
#include "lwg/pipeline.hpp"
#include "lwg/tensor_io.hpp"
#include "lwg/warp_fusion.hpp"

namespace fs = std::filesystem;
using namespace lwg;

namespace {

bool is_png(const fs::path& p) { return p.extension() == ".png"; }

FeatureMap read_map(const fs::path& p) { return is_png(p) ? read_png(p) : feature_map_from(tensor_read(p)); }

void write_map(const FeatureMap& m, const fs::path& p)
{
    if (is_png(p)) {
        write_png(m, p);
    } else {
        tensor_write(p, to_tensor(m));
    }
}

Rotation3<double> rotation_from(const std::vector<double>& values)
{
    if (values.empty()) {
        return Rotation3<double>::Identity();
    }
    if (values.size() != 9) {
        throw ShapeError("--rotation takes 9 row-major values");
    }
    return Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(values.data());
}

Eigen::Vector3d translation_from(const std::vector<double>& values)
{
    if (values.empty()) {
        return Eigen::Vector3d::Zero();
    }
    if (values.size() != 3) {
        throw ShapeError("--translation takes 3 values");
    }
    return {values[0], values[1], values[2]};
}

std::vector<BodyParams> load_all_params(const std::vector<std::string>& paths, const BodyModel& model)
{
    std::vector<BodyParams> out;
    for (const auto& p : paths) {
        out.push_back(load_params(p, model));
    }
    return out;
}

void write_flow(const fs::path& dir, const std::string& stem, const TransformFlow& f)
{
    tensor_write(dir / (stem + ".lwtf"), flow_tensor(f));
    tensor_write(dir / (stem + "_valid.lwtf"), to_tensor(f.valid));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Geometry core for liquid-warping human image synthesis"};
    app.require_subcommand(1);

    // genmodel
    int segments = 2;
    std::string model_out;
    std::string params_out;
    auto* genmodel = app.add_subcommand("genmodel", "Write the synthetic two-joint capsule model as JSON");
    genmodel->add_option("--segments", segments, "Segments per half (>= 1)")->capture_default_str();
    genmodel->add_option("--out", model_out, "Model JSON path")->required();
    genmodel->add_option("--params", params_out, "Also write rest-pose parameters with the default camera");

    // shared options
    std::string model_path;
    std::string params_path;
    std::string out_dir;
    int height = 256;
    int width = 256;

    auto* rast = app.add_subcommand("rasterize", "Render correspondence, barycentric, depth and silhouette maps");
    rast->add_option("--model", model_path)->required();
    rast->add_option("--params", params_path)->required();
    rast->add_option("--height", height)->capture_default_str();
    rast->add_option("--width", width)->capture_default_str();
    rast->add_option("--out-dir", out_dir)->required();

    std::string mode = "imitate";
    std::vector<std::string> src_params;
    std::string ref_params;
    std::vector<double> rotation;
    std::vector<double> translation;
    auto* flow = app.add_subcommand("flow", "Build transformation flows for imitate, view or swap");
    flow->add_option("--mode", mode)->check(CLI::IsMember({"imitate", "view", "swap"}))->capture_default_str();
    flow->add_option("--model", model_path)->required();
    flow->add_option("--src", src_params, "Source parameter JSON (repeatable)")->required();
    flow->add_option("--ref", ref_params, "Reference parameter JSON (imitate, swap)");
    flow->add_option("--rotation", rotation, "Novel-view rotation, 9 row-major values")->expected(9);
    flow->add_option("--translation", translation, "Novel-view translation")->expected(3);
    flow->add_option("--height", height)->capture_default_str();
    flow->add_option("--width", width)->capture_default_str();
    flow->add_option("--out-dir", out_dir)->required();

    std::string input_path;
    std::string flow_path;
    std::string valid_path;
    std::string out_path;
    auto* warp = app.add_subcommand("warp", "Bilinearly sample an image or feature tensor along a flow");
    warp->add_option("--input", input_path, "PNG or f32 tensor")->required();
    warp->add_option("--flow", flow_path)->required();
    warp->add_option("--valid", valid_path)->required();
    warp->add_option("--out", out_path, "PNG or tensor, by extension")->required();

    std::string block = "attention";
    std::string xt_path;
    std::vector<std::string> xs_paths;
    std::vector<std::string> flow_paths;
    std::vector<std::string> valid_paths;
    std::string fusion_params_path;
    std::string save_params_path;
    uint32_t seed = 0;
    auto* fuse = app.add_subcommand("fuse", "Run a liquid warping block on feature tensors");
    fuse->add_option("--block", block)
        ->check(CLI::IsMember({"add", "mean", "gate_add", "gate_mean", "attention"}))
        ->capture_default_str();
    fuse->add_option("--xt", xt_path, "Target-stream feature tensor (C, H, W)")->required();
    fuse->add_option("--xs", xs_paths, "Source feature tensor (repeatable)")->required();
    fuse->add_option("--flow", flow_paths, "Flow per source (repeatable)")->required();
    fuse->add_option("--valid", valid_paths, "Flow validity per source (repeatable)")->required();
    fuse->add_option("--params", fusion_params_path, "Fusion parameter bundle");
    fuse->add_option("--seed", seed, "Seed for generated parameters when --params is absent")->capture_default_str();
    fuse->add_option("--save-params", save_params_path, "Write the parameters used");
    fuse->add_option("--out", out_path)->required();

    std::string color_path;
    std::string attention_path;
    std::string background_path;
    auto* compose = app.add_subcommand("compose", "Blend color and background with an attention map");
    compose->add_option("--color", color_path)->required();
    compose->add_option("--attention", attention_path, "f32 (H, W) tensor in [0, 1]")->required();
    compose->add_option("--background", background_path)->required();
    compose->add_option("--out", out_path)->required();

    std::string image_a;
    std::string image_b;
    auto* metrics = app.add_subcommand("metrics", "Print PSNR and SSIM between two images");
    metrics->add_option("a", image_a)->required();
    metrics->add_option("b", image_b)->required();

    std::vector<std::string> attention_paths;
    std::vector<std::string> silhouette_paths;
    std::string pred_path;
    std::string target_path;
    auto* losses = app.add_subcommand("losses", "Attention regularization and pixel L1");
    losses->add_option("--attention", attention_paths, "f32 (H, W) attention map (repeatable)");
    losses->add_option("--silhouette", silhouette_paths, "u8 (H, W) silhouette, paired with --attention");
    losses->add_option("--pred", pred_path, "Image for pixel L1");
    losses->add_option("--target", target_path, "Image for pixel L1");

    std::vector<std::string> src_images;
    std::string ref_image;
    int dilate_px = 0;
    int bg_index = 0;
    auto* pipeline = app.add_subcommand("pipeline", "Run flow construction, masking and warping end to end");
    pipeline->add_option("--mode", mode)->check(CLI::IsMember({"imitate", "view", "swap"}))->capture_default_str();
    pipeline->add_option("--model", model_path)->required();
    pipeline->add_option("--src", src_params, "Source parameter JSON (repeatable)")->required();
    pipeline->add_option("--src-image", src_images, "Source PNG (repeatable, paired with --src)")->required();
    pipeline->add_option("--ref", ref_params, "Reference parameter JSON (imitate, swap)");
    pipeline->add_option("--ref-image", ref_image, "Reference PNG (swap)");
    pipeline->add_option("--rotation", rotation)->expected(9);
    pipeline->add_option("--translation", translation)->expected(3);
    pipeline->add_option("--dilate", dilate_px, "Silhouette dilation radius in pixels")->capture_default_str();
    pipeline->add_option("--bg-index", bg_index, "Source whose masked background is kept")->capture_default_str();
    pipeline->add_option("--out-dir", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*genmodel) {
            const BodyModel model = synth_model(segments);
            save_model(model, model_out);
            if (!params_out.empty()) {
                save_params(rest_params(model, synth_default_camera()), params_out);
            }
        } else if (*rast) {
            const BodyModel model = load_model(model_path);
            const BodyParams params = load_params(params_path, model);
            const RenderMaps maps = rasterize(body_tris(model, params), height, width);
            fs::create_directories(out_dir);
            tensor_write(fs::path(out_dir) / "corr.lwtf", to_tensor(maps.corr));
            tensor_write(fs::path(out_dir) / "bary.lwtf", bary_tensor(maps));
            tensor_write(fs::path(out_dir) / "depth.lwtf", to_tensor(maps.depth));
            tensor_write(fs::path(out_dir) / "silhouette.lwtf", to_tensor(maps.silhouette));
        } else if (*flow) {
            const BodyModel model = load_model(model_path);
            const auto sources = load_all_params(src_params, model);
            fs::create_directories(out_dir);
            const fs::path dir(out_dir);
            if (mode == "swap") {
                if (ref_params.empty() || sources.size() != 1) {
                    throw Error("swap needs one --src and a --ref");
                }
                const SwapFlows sw =
                    swap_flows(model, sources[0], load_params(ref_params, model), model.head_faces, height, width);
                tensor_write(dir / "source_head_corr.lwtf", to_tensor(sw.src_head_maps.corr));
                tensor_write(dir / "source_body_corr.lwtf", to_tensor(sw.src_body_maps.corr));
                tensor_write(dir / "reference_body_corr.lwtf", to_tensor(sw.ref_body_maps.corr));
                write_flow(dir, "flow_head", sw.head);
                write_flow(dir, "flow_body", sw.body);
            } else {
                FlowBundle bundle;
                if (mode == "imitate") {
                    if (ref_params.empty()) {
                        throw Error("imitate needs --ref");
                    }
                    bundle = imitation_flow(model, sources, load_params(ref_params, model).pose, height, width);
                } else {
                    bundle = novelview_flow(model, sources, rotation_from(rotation), translation_from(translation),
                                            height, width);
                }
                tensor_write(dir / "target_corr.lwtf", to_tensor(bundle.tgt_maps.corr));
                for (std::size_t s = 0; s < sources.size(); ++s) {
                    tensor_write(dir / ("source" + std::to_string(s) + "_corr.lwtf"),
                                 to_tensor(bundle.src_maps[s].corr));
                    write_flow(dir, "flow" + std::to_string(s), bundle.flows[s]);
                }
            }
        } else if (*warp) {
            const TransformFlow tf = flow_from(tensor_read(flow_path), tensor_read(valid_path));
            write_map(bilinear_sample(read_map(input_path), tf), out_path);
        } else if (*fuse) {
            if (xs_paths.size() != flow_paths.size() || xs_paths.size() != valid_paths.size()) {
                throw ShapeError("fuse: --xs, --flow and --valid counts must match");
            }
            const FeatureMap xt = read_map(xt_path);
            std::vector<FeatureMap> xs;
            std::vector<TransformFlow> flows;
            for (std::size_t s = 0; s < xs_paths.size(); ++s) {
                xs.push_back(read_map(xs_paths[s]));
                flows.push_back(flow_from(tensor_read(flow_paths[s]), tensor_read(valid_paths[s])));
            }
            const FusionParams params = fusion_params_path.empty()
                                            ? init_fusion_params<float>(xt.channels(), seed)
                                            : fusion_params_from(bundle_read(fusion_params_path));
            validate(params, xt.channels());
            if (!save_params_path.empty()) {
                bundle_write(save_params_path, to_bundle(params));
            }
            write_map(lwb_apply<float>(parse_block_kind(block), params, xs, flows, xt), out_path);
        } else if (*compose) {
            write_map(compose_output(read_map(color_path), plane_from(tensor_read(attention_path)),
                                     read_map(background_path)),
                      out_path);
        } else if (*metrics) {
            const Image a = read_png(image_a);
            const Image b = read_png(image_b);
            std::printf("psnr=%.6f\nssim=%.6f\n", psnr(a, b), ssim(a, b));
        } else if (*losses) {
            if (attention_paths.size() != silhouette_paths.size()) {
                throw ShapeError("losses: --attention and --silhouette counts must match");
            }
            if (!attention_paths.empty()) {
                std::vector<AttentionMap> maps;
                std::vector<Mask> sils;
                for (std::size_t k = 0; k < attention_paths.size(); ++k) {
                    maps.push_back(plane_from(tensor_read(attention_paths[k])));
                    sils.push_back(mask_from(tensor_read(silhouette_paths[k])));
                }
                std::printf("attention_reg=%.9g\n", attention_reg<float>(maps, sils));
            }
            if (!pred_path.empty() || !target_path.empty()) {
                std::printf("pixel_l1=%.9g\n", pixel_l1(read_map(pred_path), read_map(target_path)));
            }
        } else if (*pipeline) {
            const BodyModel model = load_model(model_path);
            if (src_images.size() != src_params.size()) {
                throw ShapeError("pipeline: --src and --src-image counts must match");
            }
            PipelineInput input;
            input.mode = parse_pipeline_mode(mode);
            input.sources = load_all_params(src_params, model);
            for (const auto& p : src_images) {
                input.source_images.push_back(read_png(p));
            }
            if (!ref_params.empty()) {
                input.reference = load_params(ref_params, model);
            }
            if (!ref_image.empty()) {
                input.reference_image = read_png(ref_image);
            }
            input.rotation = rotation_from(rotation);
            input.translation = translation_from(translation);
            input.dilate_px = dilate_px;
            input.background_index = bg_index;
            const PipelineResult result = run_pipeline(model, input, out_dir);
            std::printf("wrote %zu files to %s\n", result.files.size() + 1, out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
