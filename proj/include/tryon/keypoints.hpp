#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tryon/error.hpp"
#include "tryon/image.hpp"

namespace tryon {

// ============================================================================
// Body pose (19-point schema)
// ============================================================================

struct BodyPoint {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;

    /// A detector emits (0,0) or non-positive confidence for undetected points.
    bool missing() const { return (x == 0.0 && y == 0.0) || confidence <= 0.0; }
};

namespace body {
inline constexpr int kPointCount = 19;
inline constexpr int kNose = 0;
inline constexpr int kNeck = 1;
inline constexpr int kRShoulder = 2;
inline constexpr int kRElbow = 3;
inline constexpr int kRWrist = 4;
inline constexpr int kLShoulder = 5;
inline constexpr int kLElbow = 6;
inline constexpr int kLWrist = 7;
inline constexpr int kBackground = 18;
}  // namespace body

struct BodyPose {
    std::array<BodyPoint, body::kPointCount> points{};
};

enum class Side { left, right };

/// Wrist point for the requested side, or nullopt when the detector missed it.
inline std::optional<Vec2> wrist(const BodyPose& pose, Side side) {
    const BodyPoint& p = pose.points[side == Side::right ? body::kRWrist : body::kLWrist];
    if (p.missing()) return std::nullopt;
    return Vec2{p.x, p.y};
}

/// Parse a pose-detector JSON document ({"people":[{"pose_keypoints_2d":
/// [x0,y0,c0,...]}]}, 57 numbers). Takes person index 0.
inline BodyPose parse_body_pose(const std::string& document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("pose document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("people") || !doc["people"].is_array())
        throw SchemaError("pose document: missing \"people\" array");
    const auto& people = doc["people"];
    if (people.empty()) throw NoPersonError("pose document: no people detected");

    const auto& person = people[0];
    if (!person.contains("pose_keypoints_2d") || !person["pose_keypoints_2d"].is_array())
        throw SchemaError("pose document: missing \"pose_keypoints_2d\"");
    const auto& flat = person["pose_keypoints_2d"];
    if (flat.size() != static_cast<std::size_t>(body::kPointCount) * 3)
        throw SchemaError("pose document: expected 57 numbers, got " +
                          std::to_string(flat.size()));

    BodyPose pose;
    for (int i = 0; i < body::kPointCount; ++i) {
        if (!flat[3 * i].is_number() || !flat[3 * i + 1].is_number() ||
            !flat[3 * i + 2].is_number())
            throw SchemaError("pose document: non-numeric keypoint entry");
        pose.points[i] = {flat[3 * i].get<double>(), flat[3 * i + 1].get<double>(),
                          flat[3 * i + 2].get<double>()};
    }
    return pose;
}

inline std::string serialize_body_pose(const BodyPose& pose) {
    nlohmann::json flat = nlohmann::json::array();
    for (const BodyPoint& p : pose.points) {
        flat.push_back(p.x);
        flat.push_back(p.y);
        flat.push_back(p.confidence);
    }
    nlohmann::json doc = {{"people", {{{"pose_keypoints_2d", flat}}}}};
    return doc.dump();
}

// ============================================================================
// Hand landmarks (21-point schema)
// ============================================================================

enum class Handedness { left, right };

/// Landmark indices used by watch localization: 0 = wrist base, 9 and 13 =
/// middle and ring finger bases.
namespace hand {
inline constexpr int kPointCount = 21;
inline constexpr int kWristBase = 0;
inline constexpr int kMiddleBase = 9;
inline constexpr int kRingBase = 13;
}  // namespace hand

struct HandLandmarks {
    std::array<Vec2, hand::kPointCount> points{};  // pixel coordinates
    std::array<Vec2, hand::kPointCount> norm{};    // as stored in the file, [0,1]
    Handedness handedness = Handedness::right;
};

namespace detail {

inline HandLandmarks parse_one_hand(const nlohmann::json& obj, int image_width,
                                    int image_height) {
    if (!obj.is_object() || !obj.contains("handedness") || !obj.contains("landmarks"))
        throw SchemaError("hand document: expected {handedness, landmarks}");

    HandLandmarks out;
    std::string hs = obj["handedness"].get<std::string>();
    for (char& c : hs) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (hs == "left")
        out.handedness = Handedness::left;
    else if (hs == "right")
        out.handedness = Handedness::right;
    else
        throw SchemaError("hand document: handedness must be \"left\" or \"right\"");

    const auto& lm = obj["landmarks"];
    if (!lm.is_array() || lm.size() != hand::kPointCount)
        throw SchemaError("hand document: expected 21 landmarks, got " +
                          std::to_string(lm.size()));
    for (int i = 0; i < hand::kPointCount; ++i) {
        const auto& p = lm[i];
        if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number())
            throw SchemaError("hand document: landmark must be [x, y]");
        const double nx = p[0].get<double>();
        const double ny = p[1].get<double>();
        if (nx < 0.0 || nx > 1.0 || ny < 0.0 || ny > 1.0)
            throw RangeError("hand document: normalized coordinate outside [0,1]");
        out.norm[i] = {nx, ny};
        out.points[i] = {nx * image_width, ny * image_height};
    }
    return out;
}

}  // namespace detail

/// Parse a single-hand document with normalized coordinates, scaling to
/// pixels: x_px = x_norm * image_width, y_px = y_norm * image_height.
inline HandLandmarks parse_hand_landmarks(const std::string& document, int image_width,
                                          int image_height) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("hand document: ") + e.what());
    }
    return detail::parse_one_hand(doc, image_width, image_height);
}

/// Parse a hand document holding either one hand object or an array of them
/// (one per detected hand).
inline std::vector<HandLandmarks> parse_hands(const std::string& document, int image_width,
                                              int image_height) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("hand document: ") + e.what());
    }
    std::vector<HandLandmarks> out;
    if (doc.is_array()) {
        for (const auto& obj : doc)
            out.push_back(detail::parse_one_hand(obj, image_width, image_height));
    } else {
        out.push_back(detail::parse_one_hand(doc, image_width, image_height));
    }
    if (out.empty()) throw SchemaError("hand document: no hands");
    return out;
}

inline std::string serialize_hand_landmarks(const HandLandmarks& h) {
    nlohmann::json lm = nlohmann::json::array();
    for (const Vec2& p : h.norm) lm.push_back({p.x, p.y});
    nlohmann::json doc = {{"handedness", h.handedness == Handedness::left ? "left" : "right"},
                          {"landmarks", lm}};
    return doc.dump();
}

}  // namespace tryon
