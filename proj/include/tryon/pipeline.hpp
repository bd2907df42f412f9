#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tryon/agnostic.hpp"
#include "tryon/config.hpp"
#include "tryon/draw.hpp"
#include "tryon/error.hpp"
#include "tryon/fit.hpp"
#include "tryon/image_io.hpp"
#include "tryon/keypoints.hpp"
#include "tryon/locate.hpp"
#include "tryon/ssim.hpp"

namespace tryon {

/// Dataset layout: one subdirectory per data type, files matched by stem.
namespace layout {
inline constexpr const char* kImageDir = "image";
inline constexpr const char* kParseDir = "image-parse-v3";
inline constexpr const char* kPoseDir = "openpose_json";
inline constexpr const char* kHandDir = "hand-landmarks";
inline constexpr const char* kClothDir = "cloth";
inline constexpr const char* kClothMaskDir = "cloth-mask";
inline constexpr const char* kAgnosticDir = "agnostic";
inline constexpr const char* kAgnosticMaskDir = "agnostic-mask";
inline constexpr const char* kTargetCropDir = "target-crop";
inline constexpr const char* kWarpDir = "warp";
inline constexpr const char* kVisualizeDir = "visualize";
inline constexpr const char* kPoseSuffix = "_keypoints.json";
}  // namespace layout

enum class Status { ok, warning, error };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::ok: return "ok";
        case Status::warning: return "warning";
        case Status::error: return "error";
    }
    return "?";
}

/// One dataset entry, assembled by filename stem. Optional inputs that are
/// absent leave an empty path and a note.
struct ImageRecord {
    std::string id;
    std::filesystem::path person_image;
    std::filesystem::path parse;
    std::filesystem::path body_pose;       // optional
    std::filesystem::path hand_landmarks;  // optional
    std::filesystem::path accessory_image;
    std::filesystem::path accessory_mask;
    std::vector<std::string> notes;
    Status status = Status::ok;
    std::string message;  // set when a mandatory per-record file is missing
};

struct RecordOutcome {
    std::string id;
    Status status = Status::ok;
    std::string message;
    std::string detail;        // stage-specific (site source, best loss, ...)
    double duration_ms = 0.0;  // reported only in non-deterministic mode
};

struct RunSummary {
    std::vector<RecordOutcome> rows;

    int count(Status s) const {
        int n = 0;
        for (const auto& r : rows) n += r.status == s ? 1 : 0;
        return n;
    }
    /// 0 when everything succeeded, 1 with warnings, 2 with errors.
    int exit_code() const {
        if (count(Status::error) > 0) return 2;
        if (count(Status::warning) > 0) return 1;
        return 0;
    }
};

// ============================================================================
// Discovery
// ============================================================================

namespace detail {

inline std::filesystem::path find_with_image_ext(const std::filesystem::path& dir,
                                                 const std::string& stem) {
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        const std::filesystem::path p = dir / (stem + ext);
        if (std::filesystem::is_regular_file(p)) return p;
    }
    return {};
}

}  // namespace detail

/// Walk the convention subdirectories and assemble one record per person
/// image. Mandatory subdirectories must exist; per-record gaps are recorded
/// on the record, never thrown.
inline std::vector<ImageRecord> discover(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw LayoutError("dataset root not found: " + root.string());
    for (const char* sub : {layout::kImageDir, layout::kParseDir, layout::kPoseDir,
                            layout::kClothDir, layout::kClothMaskDir})
        if (!fs::is_directory(root / sub))
            throw LayoutError("missing mandatory subdirectory: " + (root / sub).string());

    std::vector<ImageRecord> records;
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(root / layout::kImageDir))
        if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
            images.push_back(entry.path());
    std::sort(images.begin(), images.end());

    for (const fs::path& img : images) {
        ImageRecord rec;
        rec.id = img.stem().string();
        rec.person_image = img;

        const fs::path parse = root / layout::kParseDir / (rec.id + ".png");
        if (fs::is_regular_file(parse)) rec.parse = parse;

        const fs::path pose = root / layout::kPoseDir / (rec.id + layout::kPoseSuffix);
        if (fs::is_regular_file(pose))
            rec.body_pose = pose;
        else
            rec.notes.push_back("no body-pose file");

        const fs::path hand = root / layout::kHandDir / (rec.id + ".json");
        if (fs::is_regular_file(hand))
            rec.hand_landmarks = hand;
        else
            rec.notes.push_back("no hand-landmarks file");

        rec.accessory_image = detail::find_with_image_ext(root / layout::kClothDir, rec.id);
        rec.accessory_mask = detail::find_with_image_ext(root / layout::kClothMaskDir, rec.id);

        if (rec.parse.empty()) {
            rec.status = Status::error;
            rec.message = "missing parse map";
        } else if (rec.accessory_image.empty()) {
            rec.status = Status::error;
            rec.message = "missing accessory image";
        } else if (rec.accessory_mask.empty()) {
            rec.status = Status::error;
            rec.message = "missing accessory mask";
        }
        records.push_back(std::move(rec));
    }
    return records;
}

// ============================================================================
// Per-record helpers
// ============================================================================

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot read " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot write " + p.string());
    os << text;
}

/// Run fn(i) over the records with a bounded worker pool. Workers own
/// disjoint output slots, so no synchronization beyond the index counter.
template <typename Fn>
inline void for_each_record(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const int workers = static_cast<int>(std::min<std::size_t>(jobs, count));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (std::thread& t : pool) t.join();
}

inline std::optional<BodyPose> try_load_pose(const ImageRecord& rec,
                                             std::vector<std::string>& notes) {
    if (rec.body_pose.empty()) return std::nullopt;
    try {
        return parse_body_pose(read_text(rec.body_pose));
    } catch (const Error& e) {
        notes.push_back(std::string("pose unreadable: ") + e.what());
        return std::nullopt;
    }
}

inline std::vector<HandLandmarks> try_load_hands(const ImageRecord& rec, int width, int height,
                                                 std::vector<std::string>& notes) {
    if (rec.hand_landmarks.empty()) return {};
    try {
        return parse_hands(read_text(rec.hand_landmarks), width, height);
    } catch (const Error& e) {
        notes.push_back(std::string("hand landmarks unreadable: ") + e.what());
        return {};
    }
}

inline std::string join_notes(const std::vector<std::string>& notes) {
    std::string out;
    for (const std::string& n : notes) {
        if (!out.empty()) out += "; ";
        out += n;
    }
    return out;
}

template <typename Work>
inline RunSummary run_stage(const PipelineConfig& cfg, const std::vector<ImageRecord>& records,
                            Work&& work) {
    RunSummary summary;
    summary.rows.resize(records.size());
    for_each_record(records.size(), cfg.jobs, [&](std::size_t i) {
        const auto started = std::chrono::steady_clock::now();
        RecordOutcome& row = summary.rows[i];
        row.id = records[i].id;
        if (records[i].status == Status::error) {
            row.status = Status::error;
            row.message = records[i].message;
        } else {
            try {
                work(records[i], row);
            } catch (const Error& e) {
                row.status = Status::error;
                row.message = e.what();
            } catch (const std::exception& e) {
                row.status = Status::error;
                row.message = std::string("unexpected: ") + e.what();
            }
        }
        row.duration_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    });
    std::sort(summary.rows.begin(), summary.rows.end(),
              [](const RecordOutcome& a, const RecordOutcome& b) { return a.id < b.id; });
    return summary;
}

inline void write_summary_csv(const RunSummary& summary, const std::filesystem::path& path,
                              bool deterministic) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "id,status,detail,message";
    if (!deterministic) os << ",duration_ms";
    os << "\n";
    char buf[40];
    for (const RecordOutcome& r : summary.rows) {
        os << r.id << "," << to_string(r.status) << "," << r.detail << "," << r.message;
        if (!deterministic) {
            std::snprintf(buf, sizeof buf, ",%.3f", r.duration_ms);
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace detail

// ============================================================================
// Stages
// ============================================================================

/// Stage 1: localization, region mask, human-agnostic image, target crop.
/// Artifacts: agnostic-mask/<id>.png, agnostic/<id>.png, target-crop/<id>.png
/// and prepare-summary.csv under the dataset root.
inline RunSummary run_prepare(const PipelineConfig& cfg,
                              const std::vector<ImageRecord>& records) {
    namespace fs = std::filesystem;
    cfg.validate();
    const fs::path root = cfg.dataset_root;
    fs::create_directories(root / layout::kAgnosticDir);
    fs::create_directories(root / layout::kAgnosticMaskDir);
    fs::create_directories(root / layout::kTargetCropDir);

    RunSummary summary = detail::run_stage(cfg, records, [&](const ImageRecord& rec,
                                                             RecordOutcome& row) {
        const ImageBuffer person = load_image(rec.person_image);
        const ParseMap parse = load_parse_map(rec.parse, cfg.num_labels);
        if (parse.width != person.width || parse.height != person.height)
            throw DimensionError("parse map dimensions do not match the person image");

        std::vector<std::string> notes = rec.notes;
        const std::optional<BodyPose> pose = detail::try_load_pose(rec, notes);
        const std::vector<HandLandmarks> hands =
            detail::try_load_hands(rec, person.width, person.height, notes);

        const WatchSite site = resolve_site(hands, pose, parse, cfg.default_radius_frac);
        const AgnosticBundle bundle =
            build_bundle(person, site, parse, cfg.region_labels,
                         static_cast<std::uint8_t>(cfg.gray_value));

        save_mask_png(root / layout::kAgnosticMaskDir / (rec.id + ".png"), bundle.region_mask);
        save_png(root / layout::kAgnosticDir / (rec.id + ".png"), bundle.agnostic_image);
        save_png(root / layout::kTargetCropDir / (rec.id + ".png"), bundle.target_crop);

        row.detail = to_string(site.source);
        if (bundle.empty_region) {
            row.status = Status::warning;
            row.message = "empty region mask";
        } else {
            row.status = Status::ok;
        }
        const std::string joined = detail::join_notes(notes);
        if (!joined.empty())
            row.message = row.message.empty() ? joined : row.message + "; " + joined;
    });

    detail::write_summary_csv(summary, root / "prepare-summary.csv", cfg.deterministic);
    return summary;
}

/// Stage 2: fit the TPS warp of the white-composited accessory against the
/// target crop, then apply it at full resolution. Artifacts per image:
/// warp/<id>.png, warp/<id>_params.txt, warp/<id>_loss.csv, plus
/// warp-summary.csv.
inline RunSummary run_warp(const PipelineConfig& cfg, const std::vector<ImageRecord>& records) {
    namespace fs = std::filesystem;
    cfg.validate();
    const fs::path root = cfg.dataset_root;
    fs::create_directories(root / layout::kWarpDir);

    RunSummary summary = detail::run_stage(cfg, records, [&](const ImageRecord& rec,
                                                             RecordOutcome& row) {
        const fs::path target_path = root / layout::kTargetCropDir / (rec.id + ".png");
        if (!fs::is_regular_file(target_path))
            throw IoError("prepare output missing (run prepare first): " + target_path.string());

        const ImageBuffer target = load_image(target_path);
        ImageBuffer accessory = load_image(rec.accessory_image);
        const BinaryMask cloth_mask = load_mask(rec.accessory_mask);
        if (cloth_mask.width != accessory.width || cloth_mask.height != accessory.height)
            throw DimensionError("accessory mask dimensions do not match the accessory image");

        // product shots get a clean white background before fitting
        for (int y = 0; y < accessory.height; ++y)
            for (int x = 0; x < accessory.width; ++x)
                if (!cloth_mask.at(x, y))
                    for (int c = 0; c < accessory.channels; ++c) accessory.at(x, y, c) = 255;
        if (accessory.channels != target.channels) {
            if (accessory.channels == 1) accessory = to_rgb(accessory);
            // 3-channel accessory against a grayscale target is not expected
        }

        const ImageBuffer acc_full = resize_bilinear(accessory, target.width, target.height);
        const ImageBuffer acc_fit = resize_bilinear(acc_full, cfg.fit_width, cfg.fit_height);
        const ImageBuffer tgt_fit = resize_bilinear(target, cfg.fit_width, cfg.fit_height);

        const FitResult fit = fit_tps(to_float(acc_fit), to_float(tgt_fit), cfg.gmm);

        const WarpGrid grid = tps_grid(fit.params, target.width, target.height);
        const ImageBuffer warped = warp_image(
            acc_full, grid,
            static_cast<std::uint8_t>(std::lround(cfg.gmm.warp_fill * 255.0)));

        save_png(root / layout::kWarpDir / (rec.id + ".png"), warped);
        detail::write_text(root / layout::kWarpDir / (rec.id + "_params.txt"),
                           to_text(fit.params));
        std::ostringstream losses;
        char buf[48];
        losses << "step,loss\n";
        for (std::size_t s = 0; s < fit.loss_history.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g\n", s, fit.loss_history[s]);
            losses << buf;
        }
        detail::write_text(root / layout::kWarpDir / (rec.id + "_loss.csv"), losses.str());

        std::snprintf(buf, sizeof buf, "best_loss=%.6g@%d", fit.best_loss, fit.best_step);
        row.detail = buf;
        row.status = Status::ok;
    });

    detail::write_summary_csv(summary, root / "warp-summary.csv", cfg.deterministic);
    return summary;
}

/// Stage 3: paired SSIM evaluation between two directories. Artifacts:
/// report.csv, report-summary.csv, report.txt (+ chart-<res>.csv with charts).
inline SsimReport run_eval(const PipelineConfig& cfg,
                           const std::filesystem::path& generated_dir,
                           const std::filesystem::path& truth_dir,
                           const std::filesystem::path& out_dir, bool charts = false) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    const SsimReport report = evaluate_pairs(generated_dir, truth_dir, cfg.resolutions);
    write_report_csv(report, out_dir / "report.csv");
    write_report_summary_csv(report, out_dir / "report-summary.csv");
    detail::write_text(out_dir / "report.txt", format_report_table(report));
    if (charts) write_chart_data(report, out_dir);
    return report;
}

/// Debug overlays: hand landmarks (green), predicted center (red), region
/// outline (blue). Records whose inputs cannot produce a site are skipped
/// with a warning row.
inline RunSummary run_visualize(const PipelineConfig& cfg,
                                const std::vector<ImageRecord>& records) {
    namespace fs = std::filesystem;
    cfg.validate();
    const fs::path root = cfg.dataset_root;
    fs::create_directories(root / layout::kVisualizeDir);

    RunSummary summary = detail::run_stage(cfg, records, [&](const ImageRecord& rec,
                                                             RecordOutcome& row) {
        const ImageBuffer person = load_image(rec.person_image);
        const ParseMap parse = load_parse_map(rec.parse, cfg.num_labels);

        std::vector<std::string> notes;
        const std::optional<BodyPose> pose = detail::try_load_pose(rec, notes);
        const std::vector<HandLandmarks> hands =
            detail::try_load_hands(rec, person.width, person.height, notes);

        ImageBuffer canvas = to_rgb(person);
        for (const HandLandmarks& h : hands)
            for (const Vec2& p : h.points) draw_dot(canvas, p.x, p.y, 2.0, {0, 200, 0});

        WatchSite site;
        try {
            site = resolve_site(hands, pose, parse, cfg.default_radius_frac);
        } catch (const LocalizationError& e) {
            row.status = Status::warning;
            row.message = std::string("skipped: ") + e.what();
            return;
        }
        const RegionMaskResult region = build_region_mask(site, parse, cfg.region_labels);
        draw_mask_outline(canvas, region.mask, {40, 90, 255});
        draw_dot(canvas, site.center.x, site.center.y, 3.0, {255, 0, 0});

        save_png(root / layout::kVisualizeDir / (rec.id + ".png"), canvas);
        row.detail = to_string(site.source);
        row.status = Status::ok;
    });

    detail::write_summary_csv(summary, root / "visualize-summary.csv", cfg.deterministic);
    return summary;
}

}  // namespace tryon
