#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tryon/error.hpp"

namespace tryon {

// ============================================================================
// Types
// ============================================================================

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 midpoint(Vec2 a, Vec2 b) { return {(a.x + b.x) * 0.5, (a.y + b.y) * 0.5}; }

/// 8-bit image, row-major, 1 (gray) or 3 (RGB) interleaved channels.
/// Coordinate convention shared by the whole library: origin top-left,
/// x rightward, y downward, pixel centers at integer coordinates.
struct ImageBuffer {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {
        if (w < 1 || h < 1) throw DimensionError("ImageBuffer: width and height must be >= 1");
        if (c != 1 && c != 3) throw ChannelError("ImageBuffer: channels must be 1 or 3");
    }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t sample_count() const { return data.size(); }

    bool same_shape(const ImageBuffer& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Boolean grid stored one byte per pixel (0 or 1).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {
        if (w < 1 || h < 1) throw DimensionError("BinaryMask: width and height must be >= 1");
    }

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v = true) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }

    std::size_t popcount() const {
        return static_cast<std::size_t>(
            std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
    }
    bool empty() const { return popcount() == 0; }

    bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }
};

/// Per-pixel semantic label image. Default scheme is LIP (labels 0..19).
struct ParseMap {
    int width = 0;
    int height = 0;
    int num_labels = 20;
    std::vector<std::uint8_t> labels;

    ParseMap() = default;
    ParseMap(int w, int h, int scheme_size = 20, std::uint8_t fill = 0)
        : width(w), height(h), num_labels(scheme_size),
          labels(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw DimensionError("ParseMap: width and height must be >= 1");
        if (scheme_size < 1 || scheme_size > 256)
            throw LabelError("ParseMap: label scheme size out of range");
    }

    std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// LIP label ids (the 20-label single-person parsing scheme).
namespace lip {
inline constexpr std::uint8_t kBackground = 0;
inline constexpr std::uint8_t kHat = 1;
inline constexpr std::uint8_t kHair = 2;
inline constexpr std::uint8_t kGlove = 3;
inline constexpr std::uint8_t kSunglasses = 4;
inline constexpr std::uint8_t kUpperClothes = 5;
inline constexpr std::uint8_t kDress = 6;
inline constexpr std::uint8_t kCoat = 7;
inline constexpr std::uint8_t kSocks = 8;
inline constexpr std::uint8_t kPants = 9;
inline constexpr std::uint8_t kJumpsuits = 10;
inline constexpr std::uint8_t kScarf = 11;
inline constexpr std::uint8_t kSkirt = 12;
inline constexpr std::uint8_t kFace = 13;
inline constexpr std::uint8_t kLeftArm = 14;
inline constexpr std::uint8_t kRightArm = 15;
inline constexpr std::uint8_t kLeftLeg = 16;
inline constexpr std::uint8_t kRightLeg = 17;
inline constexpr std::uint8_t kLeftShoe = 18;
inline constexpr std::uint8_t kRightShoe = 19;
}  // namespace lip

/// Connected-component statistics. bbox is inclusive on both ends.
struct ComponentStats {
    long long area = 0;
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    double centroid_x = 0.0, centroid_y = 0.0;
};

// ============================================================================
// Mask operations
// ============================================================================

/// Threshold a single-channel image: bit set iff sample > threshold.
inline BinaryMask binarize(const ImageBuffer& img, std::uint8_t threshold) {
    if (img.channels != 1) throw ChannelError("binarize: expected a single-channel image");
    BinaryMask out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.bits[i] = img.data[i] > threshold;
    return out;
}

/// Pointwise AND of two masks of equal dimensions.
inline BinaryMask mask_intersect(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b)) throw DimensionError("mask_intersect: dimension mismatch");
    BinaryMask out(a.width, a.height);
    for (std::size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

/// Mask of pixels whose parse label belongs to `wanted`.
inline BinaryMask label_mask(const ParseMap& parse, const std::vector<std::uint8_t>& wanted) {
    if (wanted.empty()) throw LabelError("label_mask: empty label set");
    bool lut[256] = {};
    for (std::uint8_t id : wanted) {
        if (id >= parse.num_labels)
            throw LabelError("label_mask: label id " + std::to_string(id) +
                             " outside scheme of " + std::to_string(parse.num_labels) + " labels");
        lut[id] = true;
    }
    BinaryMask out(parse.width, parse.height);
    for (std::size_t i = 0; i < parse.labels.size(); ++i) out.bits[i] = lut[parse.labels[i]];
    return out;
}

/// 8-connected components, sorted by area descending, ties broken by the
/// bbox (min_y, min_x). Empty mask yields an empty list.
inline std::vector<ComponentStats> connected_components(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<ComponentStats> comps;
    std::vector<std::uint8_t> seen(mask.bits.size(), 0);
    std::vector<int> stack;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (!mask.bits[si] || seen[si]) continue;

            ComponentStats c;
            c.min_x = c.max_x = sx;
            c.min_y = c.max_y = sy;
            long long sum_x = 0, sum_y = 0;

            seen[si] = 1;
            stack.push_back(static_cast<int>(si));
            while (!stack.empty()) {
                const int idx = stack.back();
                stack.pop_back();
                const int x = idx % w, y = idx / w;
                ++c.area;
                sum_x += x;
                sum_y += y;
                c.min_x = std::min(c.min_x, x);
                c.max_x = std::max(c.max_x, x);
                c.min_y = std::min(c.min_y, y);
                c.max_y = std::max(c.max_y, y);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.bits[ni] && !seen[ni]) {
                            seen[ni] = 1;
                            stack.push_back(static_cast<int>(ni));
                        }
                    }
                }
            }
            c.centroid_x = static_cast<double>(sum_x) / static_cast<double>(c.area);
            c.centroid_y = static_cast<double>(sum_y) / static_cast<double>(c.area);
            comps.push_back(c);
        }
    }

    std::sort(comps.begin(), comps.end(), [](const ComponentStats& a, const ComponentStats& b) {
        if (a.area != b.area) return a.area > b.area;
        if (a.min_y != b.min_y) return a.min_y < b.min_y;
        return a.min_x < b.min_x;
    });
    return comps;
}

/// Filled disk: bit set iff the pixel center lies within `radius` of `center`.
/// Pixels outside the image bounds are clipped; radius 0 marks one pixel when
/// the center is in bounds.
inline BinaryMask rasterize_disk(double cx, double cy, double radius, int width, int height) {
    if (radius < 0) throw GeometryError("rasterize_disk: negative radius");
    BinaryMask out(width, height);
    const double r2 = radius * radius;
    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::floor(cy + radius)));
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - cy;
        const double rem = r2 - dy * dy;
        if (rem < 0) continue;
        const double span = std::sqrt(rem);
        const int x0 = std::max(0, static_cast<int>(std::ceil(cx - span)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(cx + span)));
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            if (dx * dx + dy * dy <= r2) out.set(x, y);
        }
    }
    return out;
}

/// Replace masked pixels with a uniform gray value; others pass through.
inline ImageBuffer overlay_gray(const ImageBuffer& img, const BinaryMask& mask,
                                std::uint8_t gray) {
    if (img.width != mask.width || img.height != mask.height)
        throw DimensionError("overlay_gray: mask/image dimension mismatch");
    ImageBuffer out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask.at(x, y))
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = gray;
    return out;
}

// ============================================================================
// Conversions and resampling
// ============================================================================

/// 3-channel to luma using ITU-R 601 weights; 1-channel input is copied.
inline ImageBuffer grayscale(const ImageBuffer& img) {
    if (img.channels == 1) return img;
    ImageBuffer out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                             0.114 * img.at(x, y, 2);
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
        }
    }
    return out;
}

/// Bilinear resize with half-pixel center alignment, edge-clamped.
inline ImageBuffer resize_bilinear(const ImageBuffer& img, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) throw DimensionError("resize_bilinear: bad output size");
    ImageBuffer out(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
                const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
                const double v = (1.0 - wy) * top + wy * bot;
                out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
            }
        }
    }
    return out;
}

/// Floating-point image with samples in [0,1]; the working type of the
/// warp objective and fitter.
struct FloatImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    FloatImage() = default;
    FloatImage(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const FloatImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

inline FloatImage to_float(const ImageBuffer& img) {
    FloatImage out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.0;
    return out;
}

inline ImageBuffer to_bytes(const FloatImage& img) {
    ImageBuffer out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] =
            static_cast<std::uint8_t>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
    return out;
}

}  // namespace tryon
