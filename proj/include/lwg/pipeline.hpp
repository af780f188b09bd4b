#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lwg/flow.hpp"
#include "lwg/model_io.hpp"

namespace lwg {

enum class PipelineMode { Imitate, View, Swap };

PipelineMode parse_pipeline_mode(const std::string& name);

struct PipelineInput {
    PipelineMode mode = PipelineMode::Imitate;
    // One or more sources for imitate/view, exactly one for swap.
    std::vector<BodyParams> sources;
    std::vector<Image> source_images;
    // Imitate: pose donor. Swap: appearance donor.
    std::optional<BodyParams> reference;
    std::optional<Image> reference_image;
    // View: V R + t applied to the first source mesh.
    Rotation3<double> rotation = Rotation3<double>::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    // Swap: head faces; empty means the model's own partition.
    std::vector<int> head_faces;
    int dilate_px = 0;
    // Which source's masked background is kept.
    int background_index = 0;
};

struct PipelineResult {
    // Names of the files written, relative to out_dir, sorted; manifest.json
    // is written last and not listed.
    std::vector<std::string> files;
};

/** Builds the flows for the selected task, warps the masked source
 *  foregrounds into the synthetic target image and writes every stage to
 *  out_dir together with manifest.json. The image size is the first source
 *  image's size. */
PipelineResult run_pipeline(const BodyModel& model, const PipelineInput& input, const std::filesystem::path& out_dir);

}  // namespace lwg
