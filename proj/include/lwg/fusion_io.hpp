#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "lwg/tensor_io.hpp"
#include "lwg/warp_fusion.hpp"

namespace lwg {

/** Named tensor sections in one file:
 *    "LWTB" | u32 version = 1 | u32 count |
 *    count x (u32 name length | name bytes | tensor record)
 *  where each tensor record is a complete tensor file image. Sections are
 *  written in name order. */
using TensorBundle = std::map<std::string, Tensor>;

void bundle_write(const std::filesystem::path& path, const TensorBundle& bundle);
TensorBundle bundle_read(const std::filesystem::path& path);

/// Sections: wq, wk, wv, {gate1,gate2,spade_shared,spade_gamma,spade_beta}.{weight,bias}
/// (weights as (out, in, 3, 3)), eps (one element).
TensorBundle to_bundle(const FusionParams& params);
FusionParams fusion_params_from(const TensorBundle& bundle);

}  // namespace lwg
