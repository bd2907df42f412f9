#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"
#include "tryon/keypoints.hpp"

namespace tryon {

/// Which strategy produced a watch site.
enum class SiteSource { hand_landmarks, wrist_keypoint, arm_fallback };

inline const char* to_string(SiteSource s) {
    switch (s) {
        case SiteSource::hand_landmarks: return "hand-landmarks";
        case SiteSource::wrist_keypoint: return "wrist-keypoint";
        case SiteSource::arm_fallback: return "arm-fallback";
    }
    return "?";
}

/// Predicted watch location and mask radius. Centers may fall outside the
/// image; rasterization clips.
struct WatchSite {
    Vec2 center;
    double radius = 0.0;
    SiteSource source = SiteSource::hand_landmarks;
};

/// Midpoint-reflection estimate: M = midpoint(K9, K13), the watch sits at the
/// reflection of M through K0, and |center - K0| becomes the mask radius.
inline WatchSite watch_from_hand(const HandLandmarks& h) {
    const Vec2 k0 = h.points[hand::kWristBase];
    const Vec2 m = midpoint(h.points[hand::kMiddleBase], h.points[hand::kRingBase]);
    const Vec2 center{2.0 * k0.x - m.x, 2.0 * k0.y - m.y};
    const double radius = (center - k0).norm();
    if (radius == 0.0)
        throw DegenerateGeometryError("watch_from_hand: landmark 0 coincides with finger-base midpoint");
    return {center, radius, SiteSource::hand_landmarks};
}

/// Estimate the wrist from the parse map alone: the watch splits the combined
/// arm mask in two, so the midpoint of the two largest components' centroids
/// approximates the missing wrist keypoint.
inline Vec2 wrist_fallback(const ParseMap& parse,
                           const std::vector<std::uint8_t>& arm_labels = {lip::kLeftArm,
                                                                          lip::kRightArm}) {
    const BinaryMask arms = label_mask(parse, arm_labels);
    if (arms.empty()) throw NoArmError("wrist_fallback: no arm-labeled pixels");
    const std::vector<ComponentStats> comps = connected_components(arms);
    if (comps.size() < 2)
        throw InsufficientContoursError("wrist_fallback: expected two arm contours, found " +
                                        std::to_string(comps.size()));
    const Vec2 a{comps[0].centroid_x, comps[0].centroid_y};
    const Vec2 b{comps[1].centroid_x, comps[1].centroid_y};
    return midpoint(a, b);
}

namespace detail {

/// When two hands are present, prefer the one whose landmark 0 is nearest a
/// present wrist keypoint; without a pose, prefer the right hand.
inline const HandLandmarks* select_hand(const std::vector<HandLandmarks>& hands,
                                        const std::optional<BodyPose>& pose) {
    if (hands.empty()) return nullptr;
    if (hands.size() == 1) return &hands[0];

    if (pose) {
        std::vector<Vec2> wrists;
        if (auto r = wrist(*pose, Side::right)) wrists.push_back(*r);
        if (auto l = wrist(*pose, Side::left)) wrists.push_back(*l);
        if (!wrists.empty()) {
            const HandLandmarks* best = nullptr;
            double best_d = 0.0;
            for (const HandLandmarks& h : hands) {
                for (const Vec2& w : wrists) {
                    const double d = (h.points[hand::kWristBase] - w).norm();
                    if (!best || d < best_d) {
                        best = &h;
                        best_d = d;
                    }
                }
            }
            return best;
        }
    }
    for (const HandLandmarks& h : hands)
        if (h.handedness == Handedness::right) return &h;
    return &hands[0];
}

}  // namespace detail

/// Combine the localization strategies in priority order:
///   1. hand landmarks (adaptive radius),
///   2. a present wrist keypoint with radius = default_radius_frac * image height,
///   3. the arm-contour fallback with the same default radius.
inline WatchSite resolve_site(const std::vector<HandLandmarks>& hands,
                              const std::optional<BodyPose>& pose, const ParseMap& parse,
                              double default_radius_frac = 0.06) {
    if (const HandLandmarks* h = detail::select_hand(hands, pose)) {
        try {
            return watch_from_hand(*h);
        } catch (const DegenerateGeometryError&) {
            // fall through to the keypoint strategies
        }
    }

    const double radius = default_radius_frac * parse.height;
    if (pose) {
        std::optional<Vec2> w = wrist(*pose, Side::right);
        if (!w) w = wrist(*pose, Side::left);
        if (w && radius > 0.0) return {*w, radius, SiteSource::wrist_keypoint};
    }

    try {
        if (radius > 0.0) {
            const Vec2 c = wrist_fallback(parse);
            return {c, radius, SiteSource::arm_fallback};
        }
    } catch (const Error&) {
        // fall through to the failure report
    }
    throw LocalizationError("resolve_site: no strategy produced a watch location");
}

}  // namespace tryon
