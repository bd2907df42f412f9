#pragma once

#include <cstdio>
#include <csetjmp>
#include <filesystem>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "tryon/error.hpp"
#include "tryon/image.hpp"

namespace tryon {

namespace detail {

struct FileHandle {
    std::FILE* f = nullptr;
    explicit FileHandle(const std::filesystem::path& p, const char* mode)
        : f(std::fopen(p.string().c_str(), mode)) {
        if (!f) throw IoError("cannot open " + p.string());
    }
    ~FileHandle() {
        if (f) std::fclose(f);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngReader() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("libpng: allocation failed");
    }
    ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngWriter() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (png) info = png_create_info_struct(png);
        if (!png || !info) throw IoError("libpng: allocation failed");
    }
    ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

struct JpegErrorMgr {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

inline bool sniff(const std::filesystem::path& p, unsigned char (&magic)[4]) {
    FileHandle fh(p, "rb");
    return std::fread(magic, 1, 4, fh.f) == 4;
}

}  // namespace detail

// ============================================================================
// PNG
// ============================================================================

/// Decode a PNG into an 8-bit gray or RGB buffer. Palette images are expanded
/// to RGB and any alpha channel is stripped.
inline ImageBuffer load_png(const std::filesystem::path& path) {
    detail::FileHandle fh(path, "rb");
    detail::PngReader r;
    if (setjmp(png_jmpbuf(r.png))) throw IoError("libpng: failed to decode " + path.string());
    png_init_io(r.png, fh.f);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);

    if (depth == 16) png_set_strip_16(r.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const int ch = png_get_channels(r.png, r.info);
    if (ch != 1 && ch != 3) throw IoError("load_png: unsupported channel count");

    ImageBuffer out(static_cast<int>(w), static_cast<int>(h), ch);
    for (png_uint_32 y = 0; y < h; ++y)
        png_read_row(r.png, out.data.data() + static_cast<std::size_t>(y) * w * ch, nullptr);
    return out;
}

/// Decode a PNG parse map. Palette images yield the raw palette index per
/// pixel; grayscale images yield the sample value. RGB parse maps are
/// rejected since the label id would be ambiguous.
inline ParseMap load_parse_map(const std::filesystem::path& path, int num_labels = 20) {
    detail::FileHandle fh(path, "rb");
    detail::PngReader r;
    if (setjmp(png_jmpbuf(r.png))) throw IoError("libpng: failed to decode " + path.string());
    png_init_io(r.png, fh.f);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);

    if (color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY)
        throw IoError("load_parse_map: expected palette or grayscale PNG: " + path.string());
    if (depth == 16) png_set_strip_16(r.png);
    if (depth < 8) png_set_packing(r.png);  // one byte per pixel, index preserved
    png_read_update_info(r.png, r.info);

    ParseMap out(static_cast<int>(w), static_cast<int>(h), num_labels);
    for (png_uint_32 y = 0; y < h; ++y)
        png_read_row(r.png, out.labels.data() + static_cast<std::size_t>(y) * w, nullptr);
    for (std::uint8_t v : out.labels)
        if (v >= out.num_labels)
            throw LabelError("load_parse_map: label " + std::to_string(v) +
                             " outside scheme in " + path.string());
    return out;
}

inline void save_png(const std::filesystem::path& path, const ImageBuffer& img) {
    detail::FileHandle fh(path, "wb");
    detail::PngWriter wtr;
    if (setjmp(png_jmpbuf(wtr.png))) throw IoError("libpng: failed to encode " + path.string());
    png_init_io(wtr.png, fh.f);
    png_set_IHDR(wtr.png, wtr.info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wtr.png, wtr.info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(wtr.png, const_cast<png_bytep>(
                                   img.data.data() +
                                   static_cast<std::size_t>(y) * img.width * img.channels));
    png_write_end(wtr.png, nullptr);
}

/// Masks persist as 8-bit grayscale PNG with samples 0 or 255.
inline void save_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
    ImageBuffer img(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) img.data[i] = mask.bits[i] ? 255 : 0;
    save_png(path, img);
}

/// Parse maps persist as 8-bit grayscale PNG whose sample value is the label id.
inline void save_parse_map_png(const std::filesystem::path& path, const ParseMap& parse) {
    ImageBuffer img(parse.width, parse.height, 1);
    img.data = parse.labels;
    save_png(path, img);
}

inline BinaryMask load_mask(const std::filesystem::path& path, std::uint8_t threshold = 127) {
    ImageBuffer img = load_png(path);
    if (img.channels != 1) img = grayscale(img);
    return binarize(img, threshold);
}

// ============================================================================
// JPEG
// ============================================================================

inline ImageBuffer load_jpeg(const std::filesystem::path& path) {
    detail::FileHandle fh(path, "rb");
    jpeg_decompress_struct cinfo;
    detail::JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("libjpeg: failed to decode " + path.string());
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fh.f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    const int ch = cinfo.output_components;
    if (ch != 1 && ch != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("load_jpeg: unsupported channel count");
    }
    ImageBuffer out(w, h, ch);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data.data() +
                       static_cast<std::size_t>(cinfo.output_scanline) * w * ch;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

inline void save_jpeg(const std::filesystem::path& path, const ImageBuffer& img,
                      int quality = 95) {
    detail::FileHandle fh(path, "wb");
    jpeg_compress_struct cinfo;
    detail::JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        throw IoError("libjpeg: failed to encode " + path.string());
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, fh.f);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = img.channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(
            img.data.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width *
                                  img.channels);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
}

// ============================================================================
// Format dispatch
// ============================================================================

/// Load a PNG or JPEG person/accessory image, dispatching on the magic bytes.
inline ImageBuffer load_image(const std::filesystem::path& path) {
    unsigned char magic[4] = {};
    if (!detail::sniff(path, magic)) throw IoError("cannot read " + path.string());
    if (magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G')
        return load_png(path);
    if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(path);
    throw IoError("unrecognized image format: " + path.string());
}

}  // namespace tryon
