#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "tryon/keypoints.hpp"

using namespace tryon;

namespace {

std::string pose_doc(const std::array<std::array<double, 3>, 19>& triples) {
    std::ostringstream os;
    os << "{\"people\":[{\"pose_keypoints_2d\":[";
    bool first = true;
    for (const auto& t : triples)
        for (double v : t) {
            if (!first) os << ",";
            os << v;
            first = false;
        }
    os << "]}]}";
    return os.str();
}

std::array<std::array<double, 3>, 19> plausible_triples() {
    std::array<std::array<double, 3>, 19> t{};
    for (int i = 0; i < 19; ++i) t[i] = {100.0 + i, 200.0 + 2 * i, 0.8};
    return t;
}

}  // namespace

TEST_CASE("parse_body_pose maps triples by schema index") {
    auto triples = plausible_triples();
    triples[body::kRWrist] = {412.0, 300.5, 0.9};
    const BodyPose pose = parse_body_pose(pose_doc(triples));
    CHECK(pose.points[body::kRWrist].x == 412.0);
    CHECK(pose.points[body::kRWrist].y == 300.5);
    CHECK_FALSE(pose.points[body::kRWrist].missing());
}

TEST_CASE("parse_body_pose flags (0,0,0) wrists as missing") {
    auto triples = plausible_triples();
    triples[body::kRWrist] = {0.0, 0.0, 0.0};
    const BodyPose pose = parse_body_pose(pose_doc(triples));
    CHECK(pose.points[body::kRWrist].missing());
    CHECK_FALSE(wrist(pose, Side::right).has_value());
}

TEST_CASE("parse_body_pose error paths") {
    CHECK_THROWS_AS(parse_body_pose("{\"people\":[]}"), NoPersonError);
    CHECK_THROWS_AS(parse_body_pose("{}"), SchemaError);
    CHECK_THROWS_AS(parse_body_pose("not json"), SchemaError);
    CHECK_THROWS_AS(parse_body_pose("{\"people\":[{\"pose_keypoints_2d\":[1,2,3]}]}"),
                    SchemaError);
}

TEST_CASE("parse_body_pose takes person index 0") {
    auto a = plausible_triples();
    a[body::kNose] = {7.0, 8.0, 0.9};
    std::ostringstream os;
    os << "{\"people\":[{\"pose_keypoints_2d\":[";
    bool first = true;
    for (const auto& t : a)
        for (double v : t) {
            if (!first) os << ",";
            os << v;
            first = false;
        }
    os << "]},{\"pose_keypoints_2d\":[";
    first = true;
    for (int i = 0; i < 57; ++i) {
        if (!first) os << ",";
        os << 1;
        first = false;
    }
    os << "]}]}";
    const BodyPose pose = parse_body_pose(os.str());
    CHECK(pose.points[body::kNose].x == 7.0);
}

TEST_CASE("body pose serialize/parse round-trips exactly") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> coord(-10.0, 900.0);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        BodyPose pose;
        for (auto& p : pose.points) p = {coord(rng), coord(rng), conf(rng)};
        const BodyPose back = parse_body_pose(serialize_body_pose(pose));
        for (int i = 0; i < body::kPointCount; ++i) {
            CHECK(back.points[i].x == pose.points[i].x);
            CHECK(back.points[i].y == pose.points[i].y);
            CHECK(back.points[i].confidence == pose.points[i].confidence);
        }
    }
}

TEST_CASE("missing-point predicate") {
    CHECK(BodyPoint{0.0, 0.0, 0.9}.missing());
    CHECK(BodyPoint{10.0, 5.0, 0.0}.missing());
    CHECK(BodyPoint{10.0, 5.0, -0.2}.missing());
    CHECK_FALSE(BodyPoint{10.0, 5.0, 0.1}.missing());
}

TEST_CASE("wrist retrieval is side-independent") {
    auto triples = plausible_triples();
    triples[body::kLWrist] = {200.0, 300.0, 0.8};
    triples[body::kRWrist] = {150.0, 310.0, 0.7};
    const BodyPose pose = parse_body_pose(pose_doc(triples));
    const auto l = wrist(pose, Side::left);
    const auto r = wrist(pose, Side::right);
    REQUIRE(l.has_value());
    REQUIRE(r.has_value());
    CHECK(l->x == 200.0);
    CHECK(l->y == 300.0);
    CHECK(r->x == 150.0);
}

namespace {

std::string hand_doc(const std::string& handedness, int count, double x = 0.25,
                     double y = 0.75) {
    std::ostringstream os;
    os << "{\"handedness\":\"" << handedness << "\",\"landmarks\":[";
    for (int i = 0; i < count; ++i) {
        if (i) os << ",";
        os << "[" << x << "," << y << "]";
    }
    os << "]}";
    return os.str();
}

}  // namespace

TEST_CASE("parse_hand_landmarks scales normalized coordinates to pixels") {
    const HandLandmarks h = parse_hand_landmarks(hand_doc("left", 21, 0.5, 0.5), 1024, 768);
    CHECK(h.handedness == Handedness::left);
    CHECK(h.points[0].x == 512.0);
    CHECK(h.points[0].y == 384.0);
}

TEST_CASE("parse_hand_landmarks boundary maps to the image extent") {
    const HandLandmarks h = parse_hand_landmarks(hand_doc("right", 21, 1.0, 1.0), 100, 100);
    CHECK(h.points[20].x == 100.0);
    CHECK(h.points[20].y == 100.0);
    const HandLandmarks z = parse_hand_landmarks(hand_doc("right", 21, 0.0, 0.0), 100, 100);
    CHECK(z.points[0].x == 0.0);
    CHECK(z.points[0].y == 0.0);
}

TEST_CASE("parse_hand_landmarks error paths") {
    CHECK_THROWS_AS(parse_hand_landmarks(hand_doc("left", 20), 100, 100), SchemaError);
    CHECK_THROWS_AS(parse_hand_landmarks(hand_doc("left", 21, 1.25, 0.5), 100, 100),
                    RangeError);
    CHECK_THROWS_AS(parse_hand_landmarks(hand_doc("up", 21), 100, 100), SchemaError);
    CHECK_THROWS_AS(parse_hand_landmarks("{}", 100, 100), SchemaError);
    CHECK_THROWS_AS(parse_hand_landmarks("garbage", 100, 100), SchemaError);
}

TEST_CASE("parse_hands accepts one object or an array of hands") {
    const auto one = parse_hands(hand_doc("right", 21), 64, 64);
    REQUIRE(one.size() == 1);

    const std::string two = "[" + hand_doc("left", 21, 0.2, 0.2) + "," +
                            hand_doc("right", 21, 0.8, 0.8) + "]";
    const auto both = parse_hands(two, 64, 64);
    REQUIRE(both.size() == 2);
    CHECK(both[0].handedness == Handedness::left);
    CHECK(both[1].handedness == Handedness::right);
}

TEST_CASE("hand landmarks serialize/parse round-trips exactly") {
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        HandLandmarks h;
        h.handedness = trial % 2 ? Handedness::left : Handedness::right;
        for (int i = 0; i < hand::kPointCount; ++i) {
            h.norm[i] = {unit(rng), unit(rng)};
            h.points[i] = {h.norm[i].x * 640, h.norm[i].y * 480};
        }
        const HandLandmarks back = parse_hand_landmarks(serialize_hand_landmarks(h), 640, 480);
        CHECK(back.handedness == h.handedness);
        for (int i = 0; i < hand::kPointCount; ++i) {
            CHECK(back.norm[i].x == h.norm[i].x);
            CHECK(back.norm[i].y == h.norm[i].y);
            CHECK(back.points[i].x == h.points[i].x);
            CHECK(back.points[i].y == h.points[i].y);
        }
    }
}

TEST_CASE("pixel scaling is monotone") {
    std::mt19937 rng(29);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        double a = unit(rng), b = unit(rng);
        if (a > b) std::swap(a, b);
        const HandLandmarks ha = parse_hand_landmarks(hand_doc("left", 21, a, a), 320, 240);
        const HandLandmarks hb = parse_hand_landmarks(hand_doc("left", 21, b, b), 320, 240);
        CHECK(ha.points[0].x <= hb.points[0].x);
        CHECK(ha.points[0].y <= hb.points[0].y);
    }
}
