#pragma once

#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"
#include "tryon/locate.hpp"

namespace tryon {

/// build_region_mask outcome. `empty_region` is a warning, not an error: a
/// batch keeps processing and the caller reports per-image status.
struct RegionMaskResult {
    BinaryMask mask;
    bool empty_region = false;
};

/// Accessory-region mask: the site disk intersected with the pixels carrying
/// the given parse labels (default background, where parsers file the watch).
inline RegionMaskResult build_region_mask(const WatchSite& site, const ParseMap& parse,
                                          const std::vector<std::uint8_t>& labels = {
                                              lip::kBackground}) {
    if (site.radius <= 0.0) throw GeometryError("build_region_mask: radius must be > 0");
    const BinaryMask disk =
        rasterize_disk(site.center.x, site.center.y, site.radius, parse.width, parse.height);
    BinaryMask region = mask_intersect(disk, label_mask(parse, labels));
    RegionMaskResult out{std::move(region), false};
    out.empty_region = out.mask.empty();
    return out;
}

/// Human-agnostic image: the accessory region grayed out for re-synthesis.
inline ImageBuffer build_agnostic(const ImageBuffer& img, const BinaryMask& region,
                                  std::uint8_t gray = 128) {
    return overlay_gray(img, region, gray);
}

/// Ground-truth accessory appearance: region pixels kept, everything else
/// flooded with the fill value (white by default, matching product shots).
inline ImageBuffer build_target_crop(const ImageBuffer& img, const BinaryMask& region,
                                     std::uint8_t fill = 255) {
    if (img.width != region.width || img.height != region.height)
        throw DimensionError("build_target_crop: mask/image dimension mismatch");
    ImageBuffer out(img.width, img.height, img.channels, fill);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (region.at(x, y))
                for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = img.at(x, y, c);
    return out;
}

/// The three model inputs derived per image.
struct AgnosticBundle {
    BinaryMask region_mask;
    ImageBuffer agnostic_image;
    ImageBuffer target_crop;
    bool empty_region = false;
};

inline AgnosticBundle build_bundle(const ImageBuffer& person, const WatchSite& site,
                                   const ParseMap& parse,
                                   const std::vector<std::uint8_t>& labels = {lip::kBackground},
                                   std::uint8_t gray = 128, std::uint8_t fill = 255) {
    if (person.width != parse.width || person.height != parse.height)
        throw DimensionError("build_bundle: parse/image dimension mismatch");
    RegionMaskResult region = build_region_mask(site, parse, labels);
    AgnosticBundle out;
    out.agnostic_image = build_agnostic(person, region.mask, gray);
    out.target_crop = build_target_crop(person, region.mask, fill);
    out.region_mask = std::move(region.mask);
    out.empty_region = region.empty_region;
    return out;
}

}  // namespace tryon
