#include "lwg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

namespace lwg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_fail(png_structp, png_const_charp message) { throw ParseError(std::string("png: ") + message); }

void png_warn(png_structp, png_const_charp) {}

}  // namespace

uint8_t to_u8(float v)
{
    if (!(v > 0.0f)) {
        return 0;
    }
    const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
    return static_cast<uint8_t>(std::min(255.0, scaled));
}

Image read_png(const std::filesystem::path& path)
{
    File file(std::fopen(path.string().c_str(), "rb"));
    if (!file) {
        throw ParseError("cannot open " + path.string());
    }
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        throw ParseError(path.string() + ": not a PNG file");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    Image out;
    try {
        png_init_io(png, file.get());
        png_set_sig_bytes(png, 8);
        png_read_info(png, info);
        png_set_expand(png);
        png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_set_gray_to_rgb(png);
        png_read_update_info(png, info);
        const auto width = static_cast<int>(png_get_image_width(png, info));
        const auto height = static_cast<int>(png_get_image_height(png, info));
        const auto rowbytes = png_get_rowbytes(png, info);
        if (rowbytes != static_cast<std::size_t>(width) * 3) {
            throw ParseError(path.string() + ": unsupported PNG layout");
        }
        std::vector<png_byte> pixels(rowbytes * height);
        std::vector<png_bytep> rows(height);
        for (int i = 0; i < height; ++i) {
            rows[i] = pixels.data() + rowbytes * i;
        }
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
        out = Image(3, height, width);
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                for (int c = 0; c < 3; ++c) {
                    out(c, i, j) = from_u8(rows[i][3 * j + c]);
                }
            }
        }
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const Image& image, const std::filesystem::path& path)
{
    const int channels = image.channels();
    if (channels != 1 && channels != 3) {
        throw ShapeError("write_png: expected 1 or 3 channels");
    }
    File file(std::fopen(path.string().c_str(), "wb"));
    if (!file) {
        throw Error("cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, file.get());
        png_set_IHDR(png, info, image.width, image.height, 8, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_set_compression_level(png, 6);
        png_write_info(png, info);
        std::vector<png_byte> row(static_cast<std::size_t>(image.width) * channels);
        for (int i = 0; i < image.height; ++i) {
            for (int j = 0; j < image.width; ++j) {
                for (int c = 0; c < channels; ++c) {
                    row[static_cast<std::size_t>(j) * channels + c] = to_u8(image(c, i, j));
                }
            }
            png_write_row(png, row.data());
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

Image quantize_u8(const Image& image)
{
    Image out = image;
    out.data = image.data.unaryExpr([](float v) { return from_u8(to_u8(v)); });
    return out;
}

}  // namespace lwg
