#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lwg/feature_map.hpp"
#include "lwg/flow.hpp"
#include "lwg/rasterizer.hpp"

namespace lwg {

enum class DType : uint32_t { F32 = 0, U8 = 1, I32 = 2 };

/** In-memory form of one tensor file. On disk:
 *    "LWTF" | u32 version = 1 | u32 dtype | u32 rank | rank x u32 dims | payload
 *  with every field and the row-major payload little-endian. */
struct Tensor {
    std::vector<uint32_t> dims;
    std::variant<std::vector<float>, std::vector<uint8_t>, std::vector<int32_t>> values;

    DType dtype() const { return static_cast<DType>(values.index()); }
    std::size_t element_count() const;

    template <typename T>
    const std::vector<T>& as() const
    {
        if (const auto* v = std::get_if<std::vector<T>>(&values)) {
            return *v;
        }
        throw ParseError("tensor has dtype " + std::to_string(static_cast<uint32_t>(dtype()))
                         + ", which does not match the requested element type");
    }
};

template <typename T>
Tensor make_tensor(std::vector<uint32_t> dims, std::vector<T> values)
{
    Tensor t;
    t.dims = std::move(dims);
    t.values = std::move(values);
    if (t.element_count() != std::get<std::vector<T>>(t.values).size()) {
        throw ShapeError("make_tensor: value count does not match dims");
    }
    return t;
}

std::string encode_tensor(const Tensor& t);
// Decodes one tensor starting at offset; advances offset past it.
Tensor decode_tensor(const std::string& bytes, std::size_t& offset);

void tensor_write(const std::filesystem::path& path, const Tensor& t);
Tensor tensor_read(const std::filesystem::path& path);

// Conversions between library types and tensors.
Tensor to_tensor(const FeatureMap& f);                 // f32 (C, H, W)
FeatureMap feature_map_from(const Tensor& t);          // f32 (C, H, W) or (H, W)
Tensor to_tensor(const Plane<float>& p);               // f32 (H, W)
Plane<float> plane_from(const Tensor& t);              // f32 (H, W) or (1, H, W)
Tensor to_tensor(const Plane<int32_t>& p);             // i32 (H, W)
Tensor to_tensor(const Mask& m);                       // u8 (H, W)
Mask mask_from(const Tensor& t);                       // u8 (H, W), nonzero = true
Tensor flow_tensor(const TransformFlow& f);            // f32 (H, W, 2)
TransformFlow flow_from(const Tensor& flow, const Tensor& valid);
Tensor bary_tensor(const RenderMaps& m);               // f32 (H, W, 3)

}  // namespace lwg
