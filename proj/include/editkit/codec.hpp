#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "editkit/image.hpp"

// PNG and JPEG read, PNG write. Writers pin the compression settings and
// emit no ancillary chunks, so identical inputs always produce identical
// bytes. All entry points are reentrant.

namespace editkit {
namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr fp(std::fopen(path.string().c_str(), mode));
    if (!fp) {
        throw std::runtime_error("cannot open file: " + path.string());
    }
    return fp;
}

inline void warn_alpha_dropped(const std::string& path) {
    std::string msg = "editkit: dropping alpha channel while loading " + path + "\n";
    std::fputs(msg.c_str(), stderr);
}

inline ImageBuffer decode_png(std::FILE* fp, const std::string& name) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw std::runtime_error("decode failure: png reader allocation");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("decode failure: png info allocation");
    }

    // Containers live before setjmp so unwinding after the longjmp-throw
    // releases them normally.
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    bool alpha_dropped = false;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("decode failure: corrupt or truncated PNG: " + name);
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("decode failure: zero-dimension image: " + name);
    }

    if (bit_depth == 16) {
        png_set_strip_16(png);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(png);
        alpha_dropped = true;
    }
    if ((color_type & PNG_COLOR_MASK_ALPHA) != 0) {
        alpha_dropped = true;
    }
    if (alpha_dropped) {
        png_set_strip_alpha(png);
    }
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("decode failure: unsupported channel layout in " + name);
    }

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * rowbytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (alpha_dropped) {
        warn_alpha_dropped(name);
    }
    return ImageBuffer(static_cast<int>(width), static_cast<int>(height), channels,
                       std::move(pixels));
}

struct JpegErrorTrap {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_to_longjmp(j_common_ptr cinfo) {
    auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, trap->message);
    std::longjmp(trap->jump, 1);
}

inline ImageBuffer decode_jpeg(std::FILE* fp, const std::string& name) {
    jpeg_decompress_struct cinfo;
    JpegErrorTrap trap;
    trap.message[0] = '\0';
    cinfo.err = jpeg_std_error(&trap.pub);
    trap.pub.error_exit = &jpeg_error_to_longjmp;

    std::vector<std::uint8_t> pixels;

    if (setjmp(trap.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("decode failure: " + std::string(trap.message) + ": " + name);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);

    if (cinfo.jpeg_color_space != JCS_GRAYSCALE && cinfo.jpeg_color_space != JCS_YCbCr &&
        cinfo.jpeg_color_space != JCS_RGB) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("decode failure: unsupported JPEG color space in " + name);
    }
    cinfo.out_color_space = cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;

    jpeg_start_decompress(&cinfo);
    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    if (width == 0 || height == 0) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("decode failure: zero-dimension image: " + name);
    }

    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
    pixels.resize(rowbytes * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * rowbytes;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    return ImageBuffer(width, height, channels, std::move(pixels));
}

inline void encode_png(const std::uint8_t* samples, int width, int height, int channels,
                       const std::filesystem::path& path) {
    FilePtr fp = open_file(path, "wb");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) {
        throw std::runtime_error("PNG write failure: writer allocation");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("PNG write failure: info allocation");
    }

    std::vector<png_bytep> rows(static_cast<std::size_t>(height));

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG write failure: " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    // Pinned settings keep the output byte-stable across runs.
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_SUB);

    const std::size_t rowbytes = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(samples + static_cast<std::size_t>(y) * rowbytes);
    }
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace detail

// Decodes a PNG or JPEG file into an 8-bit buffer with 1 or 3 channels.
// Palette images expand to RGB, 16-bit samples narrow to 8, and alpha is
// dropped with a warning on stderr.
inline ImageBuffer load_image(const std::filesystem::path& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");

    unsigned char magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof magic, fp.get());
    std::rewind(fp.get());

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) {
        return detail::decode_png(fp.get(), path.string());
    }
    if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
        return detail::decode_jpeg(fp.get(), path.string());
    }
    throw std::runtime_error("unsupported format: " + path.string());
}

// Writes a mask as a single-channel PNG: edited cells 255, unedited 0.
// load_image of the result recovers the cell values exactly.
inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    std::vector<std::uint8_t> samples(mask.cell_count());
    const auto& values = mask.values();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = values[i] ? 255 : 0;
    }
    detail::encode_png(samples.data(), mask.width(), mask.height(), 1, path);
}

// Writes a 1- or 3-channel buffer as PNG.
inline void save_image_png(const ImageBuffer& image, const std::filesystem::path& path) {
    detail::encode_png(image.data().data(), image.width(), image.height(), image.channels(), path);
}

} // namespace editkit
