#pragma once

#include <array>

#include "tryon/image.hpp"

namespace tryon {

using Rgb = std::array<std::uint8_t, 3>;

inline ImageBuffer to_rgb(const ImageBuffer& img) {
    if (img.channels == 3) return img;
    ImageBuffer out(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y);
    return out;
}

/// Filled dot, clipped to the image.
inline void draw_dot(ImageBuffer& img, double cx, double cy, double radius, Rgb color) {
    const BinaryMask disk = rasterize_disk(cx, cy, radius, img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (disk.at(x, y))
                for (int c = 0; c < img.channels && c < 3; ++c) img.at(x, y, c) = color[c];
}

/// Trace the mask boundary: set pixels with an unset 4-neighbor or touching
/// the image edge.
inline void draw_mask_outline(ImageBuffer& img, const BinaryMask& mask, Rgb color) {
    if (img.width != mask.width || img.height != mask.height)
        throw DimensionError("draw_mask_outline: dimension mismatch");
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y)) continue;
            const bool boundary = x == 0 || y == 0 || x == mask.width - 1 ||
                                  y == mask.height - 1 || !mask.at(x - 1, y) ||
                                  !mask.at(x + 1, y) || !mask.at(x, y - 1) || !mask.at(x, y + 1);
            if (boundary)
                for (int c = 0; c < img.channels && c < 3; ++c) img.at(x, y, c) = color[c];
        }
    }
}

}  // namespace tryon
