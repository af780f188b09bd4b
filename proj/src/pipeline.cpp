#include "lwg/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "lwg/image_io.hpp"
#include "lwg/tensor_io.hpp"
#include "lwg/warp_fusion.hpp"

namespace lwg {

PipelineMode parse_pipeline_mode(const std::string& name)
{
    if (name == "imitate") return PipelineMode::Imitate;
    if (name == "view") return PipelineMode::View;
    if (name == "swap") return PipelineMode::Swap;
    throw ParseError("unknown mode \"" + name + "\" (imitate, view, swap)");
}

namespace {

const char* mode_name(PipelineMode mode)
{
    switch (mode) {
    case PipelineMode::Imitate: return "imitate";
    case PipelineMode::View: return "view";
    case PipelineMode::Swap: return "swap";
    }
    return "unknown";
}

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root))
    {
        std::filesystem::create_directories(root_);
    }

    void tensor(const std::string& name, const Tensor& t)
    {
        tensor_write(root_ / name, t);
        files_.push_back(name);
    }

    void png(const std::string& name, const Image& img)
    {
        write_png(img, root_ / name);
        files_.push_back(name);
    }

    void flow(const std::string& stem, const TransformFlow& f)
    {
        tensor(stem + ".lwtf", flow_tensor(f));
        tensor(stem + "_valid.lwtf", to_tensor(f.valid));
    }

    PipelineResult finish(PipelineMode mode)
    {
        std::sort(files_.begin(), files_.end());
        nlohmann::json manifest;
        manifest["mode"] = mode_name(mode);
        manifest["files"] = files_;
        std::ofstream out(root_ / "manifest.json", std::ios::binary);
        if (!out) {
            throw Error("cannot write " + (root_ / "manifest.json").string());
        }
        out << manifest.dump(2) << "\n";
        return PipelineResult{files_};
    }

private:
    std::filesystem::path root_;
    std::vector<std::string> files_;
};

void check_images(const PipelineInput& input, int height, int width)
{
    for (const auto& img : input.source_images) {
        if (img.height != height || img.width != width || img.channels() != 3) {
            throw ShapeError("pipeline: all source images must be RGB and share one size");
        }
    }
}

PipelineResult run_flow_modes(const BodyModel& model, const PipelineInput& input, OutputDir& out)
{
    const int height = input.source_images[0].height;
    const int width = input.source_images[0].width;
    FlowBundle bundle;
    if (input.mode == PipelineMode::Imitate) {
        if (!input.reference) {
            throw Error("pipeline: imitate needs reference parameters");
        }
        bundle = imitation_flow(model, input.sources, input.reference->pose, height, width);
    } else {
        bundle = novelview_flow(model, input.sources, input.rotation, input.translation, height, width);
    }
    if (input.background_index < 0 || input.background_index >= static_cast<int>(input.sources.size())) {
        throw ShapeError("pipeline: background index out of range");
    }

    std::vector<Image> foregrounds;
    for (std::size_t s = 0; s < input.sources.size(); ++s) {
        const std::string tag = "source" + std::to_string(s);
        Decomposition parts = mask_decompose(input.source_images[s], bundle.src_maps[s], input.dilate_px);
        out.tensor(tag + "_corr.lwtf", to_tensor(bundle.src_maps[s].corr));
        out.tensor(tag + "_mask.lwtf", to_tensor(parts.mask));
        out.png(tag + "_foreground.png", parts.foreground);
        out.flow("flow" + std::to_string(s), bundle.flows[s]);
        if (static_cast<int>(s) == input.background_index) {
            out.png("background.png", parts.background);
        }
        foregrounds.push_back(std::move(parts.foreground));
    }
    out.tensor("target_corr.lwtf", to_tensor(bundle.tgt_maps.corr));
    const auto syn = compose_syn<float>(foregrounds, bundle.flows);
    out.png("synthetic.png", syn.image);
    return out.finish(input.mode);
}

PipelineResult run_swap(const BodyModel& model, const PipelineInput& input, OutputDir& out)
{
    if (input.sources.size() != 1 || !input.reference || !input.reference_image) {
        throw Error("pipeline: swap needs exactly one source and a reference with its image");
    }
    const Image& src_image = input.source_images[0];
    const Image& ref_image = *input.reference_image;
    if (ref_image.height != src_image.height || ref_image.width != src_image.width || ref_image.channels() != 3) {
        throw ShapeError("pipeline: reference image must match the source image size");
    }
    const int height = src_image.height;
    const int width = src_image.width;
    const std::vector<int>& head = input.head_faces.empty() ? model.head_faces : input.head_faces;
    const SwapFlows flows = swap_flows(model, input.sources[0], *input.reference, head, height, width);

    const RenderMaps src_full = rasterize(body_tris(model, input.sources[0]), height, width);
    const RenderMaps ref_full = rasterize(body_tris(model, *input.reference), height, width);
    const Decomposition src_parts = mask_decompose(src_image, src_full, input.dilate_px);
    const Decomposition ref_parts = mask_decompose(ref_image, ref_full, input.dilate_px);

    out.tensor("source_head_corr.lwtf", to_tensor(flows.src_head_maps.corr));
    out.tensor("source_body_corr.lwtf", to_tensor(flows.src_body_maps.corr));
    out.tensor("reference_body_corr.lwtf", to_tensor(flows.ref_body_maps.corr));
    out.tensor("source_mask.lwtf", to_tensor(src_parts.mask));
    out.png("source_foreground.png", src_parts.foreground);
    out.png("reference_foreground.png", ref_parts.foreground);
    out.png("background.png", src_parts.background);
    out.flow("flow_head", flows.head);
    out.flow("flow_body", flows.body);

    // Head pixels come from the source, body pixels from the reference.
    const Image head_part = bilinear_sample(src_parts.foreground, flows.head);
    Image syn = bilinear_sample(ref_parts.foreground, flows.body);
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            if (flows.head.valid(i, j)) {
                const Eigen::Index p = static_cast<Eigen::Index>(i) * width + j;
                syn.data.col(p) = head_part.data.col(p);
            }
        }
    }
    out.png("synthetic.png", syn);
    return out.finish(input.mode);
}

}  // namespace

PipelineResult run_pipeline(const BodyModel& model, const PipelineInput& input, const std::filesystem::path& out_dir)
{
    if (input.sources.empty() || input.sources.size() != input.source_images.size()) {
        throw Error("pipeline: need one image per source and at least one source");
    }
    check_images(input, input.source_images[0].height, input.source_images[0].width);
    OutputDir out(out_dir);
    if (input.mode == PipelineMode::Swap) {
        return run_swap(model, input, out);
    }
    return run_flow_modes(model, input, out);
}

}  // namespace lwg
