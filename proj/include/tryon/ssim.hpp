#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"
#include "tryon/image_io.hpp"

namespace tryon {

// ============================================================================
// SSIM
// ============================================================================

namespace detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

inline const std::array<double, kSsimWindow>& gaussian_taps() {
    static const std::array<double, kSsimWindow> taps = [] {
        std::array<double, kSsimWindow> t{};
        const int half = kSsimWindow / 2;
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - half;
            t[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += t[i];
        }
        for (double& v : t) v /= sum;
        return t;
    }();
    return taps;
}

/// Separable 11x11 Gaussian filtering at valid window positions only.
inline std::vector<double> gauss_valid(const std::vector<double>& src, int w, int h, int& ow,
                                       int& oh) {
    const auto& taps = gaussian_taps();
    ow = w - kSsimWindow + 1;
    oh = h - kSsimWindow + 1;
    std::vector<double> horiz(static_cast<std::size_t>(ow) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += taps[t] * src[static_cast<std::size_t>(y) * w + x + t];
            horiz[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int t = 0; t < kSsimWindow; ++t)
                acc += taps[t] * horiz[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

}  // namespace detail

/// Windowed structural similarity over an 11x11 Gaussian window (sigma 1.5),
/// dynamic range 255, averaged over all valid window positions. 3-channel
/// inputs are converted to luma first. Returns a value in [-1, 1]; identical
/// images score exactly 1.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionError("ssim: dimension mismatch");
    if (a.width < detail::kSsimWindow || a.height < detail::kSsimWindow)
        throw WindowError("ssim: image smaller than the 11x11 window");

    const ImageBuffer ga = grayscale(a);
    const ImageBuffer gb = grayscale(b);
    const int w = a.width, h = a.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ga.data[i];
        y[i] = gb.data[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    int ow = 0, oh = 0;
    const std::vector<double> mu_x = detail::gauss_valid(x, w, h, ow, oh);
    const std::vector<double> mu_y = detail::gauss_valid(y, w, h, ow, oh);
    const std::vector<double> m_xx = detail::gauss_valid(xx, w, h, ow, oh);
    const std::vector<double> m_yy = detail::gauss_valid(yy, w, h, ow, oh);
    const std::vector<double> m_xy = detail::gauss_valid(xy, w, h, ow, oh);

    double total = 0.0;
    const std::size_t count = static_cast<std::size_t>(ow) * oh;
    for (std::size_t i = 0; i < count; ++i) {
        const double sxx = m_xx[i] - mu_x[i] * mu_x[i];
        const double syy = m_yy[i] - mu_y[i] * mu_y[i];
        const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
        const double num = (2.0 * mu_x[i] * mu_y[i] + detail::kSsimC1) *
                           (2.0 * sxy + detail::kSsimC2);
        const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + detail::kSsimC1) *
                           (sxx + syy + detail::kSsimC2);
        total += num / den;
    }
    return total / static_cast<double>(count);
}

// ============================================================================
// Paired evaluation over directories
// ============================================================================

struct Resolution {
    int width = 0;
    int height = 0;

    std::string tag() const { return std::to_string(width) + "x" + std::to_string(height); }
};

struct SsimRow {
    std::string id;
    std::string resolution;  // empty for error rows
    double score = 0.0;
    bool ok = false;
    std::string message;
};

struct ResolutionStats {
    std::string resolution;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    int count = 0;
};

struct SsimReport {
    std::vector<SsimRow> rows;               // per (image, resolution), plus error rows
    std::vector<ResolutionStats> aggregates;  // per resolution, over ok rows

    int score_count() const {
        return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                              [](const SsimRow& r) { return r.ok; }));
    }
};

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ".png" || e == ".jpg" || e == ".jpeg";
}

inline std::map<std::string, std::filesystem::path> image_stems(
    const std::filesystem::path& dir) {
    std::map<std::string, std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && has_image_extension(entry.path()))
            out[entry.path().stem().string()] = entry.path();
    return out;
}

}  // namespace detail

/// Score every id present in both directories at every resolution (bilinear
/// resize first). Unmatched or unreadable files become per-image error rows;
/// an empty intersection is fatal.
inline SsimReport evaluate_pairs(const std::filesystem::path& dir_generated,
                                 const std::filesystem::path& dir_truth,
                                 const std::vector<Resolution>& resolutions) {
    const auto gen = detail::image_stems(dir_generated);
    const auto truth = detail::image_stems(dir_truth);

    SsimReport report;
    std::vector<std::string> matched;
    for (const auto& [id, path] : gen) {
        if (truth.count(id))
            matched.push_back(id);
        else
            report.rows.push_back({id, "", 0.0, false, "no ground-truth counterpart"});
    }
    for (const auto& [id, path] : truth)
        if (!gen.count(id))
            report.rows.push_back({id, "", 0.0, false, "no generated counterpart"});
    if (matched.empty())
        throw EmptyEvalError("evaluate_pairs: no ids present in both directories");

    for (const std::string& id : matched) {
        try {
            const ImageBuffer a = load_image(gen.at(id));
            const ImageBuffer b = load_image(truth.at(id));
            for (const Resolution& res : resolutions) {
                const ImageBuffer ra = resize_bilinear(a, res.width, res.height);
                const ImageBuffer rb = resize_bilinear(b, res.width, res.height);
                report.rows.push_back({id, res.tag(), ssim(ra, rb), true, ""});
            }
        } catch (const Error& e) {
            report.rows.push_back({id, "", 0.0, false, e.what()});
        }
    }

    for (const Resolution& res : resolutions) {
        ResolutionStats st;
        st.resolution = res.tag();
        double sum = 0.0;
        for (const SsimRow& r : report.rows) {
            if (!r.ok || r.resolution != st.resolution) continue;
            if (st.count == 0) {
                st.min = st.max = r.score;
            } else {
                st.min = std::min(st.min, r.score);
                st.max = std::max(st.max, r.score);
            }
            sum += r.score;
            ++st.count;
        }
        if (st.count > 0) st.mean = sum / st.count;
        report.aggregates.push_back(st);
    }
    return report;
}

// ============================================================================
// Report output
// ============================================================================

inline void write_report_csv(const SsimReport& report, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "id,resolution,score,status,message\n";
    char buf[40];
    for (const SsimRow& r : report.rows) {
        if (r.ok) {
            std::snprintf(buf, sizeof buf, "%.9f", r.score);
            os << r.id << "," << r.resolution << "," << buf << ",ok,\n";
        } else {
            os << r.id << "," << r.resolution << ",,error," << r.message << "\n";
        }
    }
}

inline void write_report_summary_csv(const SsimReport& report,
                                     const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "resolution,count,min,max,mean\n";
    char buf[128];
    for (const ResolutionStats& st : report.aggregates) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.9f,%.9f,%.9f", st.resolution.c_str(), st.count,
                      st.min, st.max, st.mean);
        os << buf << "\n";
    }
}

inline std::string format_report_table(const SsimReport& report) {
    std::ostringstream os;
    char buf[160];
    os << "resolution      count      min      max     mean\n";
    for (const ResolutionStats& st : report.aggregates) {
        std::snprintf(buf, sizeof buf, "%-14s %6d %8.4f %8.4f %8.4f\n", st.resolution.c_str(),
                      st.count, st.min, st.max, st.mean);
        os << buf;
    }
    const int errors = static_cast<int>(report.rows.size()) - report.score_count();
    if (errors > 0) os << errors << " image(s) failed; see the per-image report\n";
    return os.str();
}

/// Bar-chart data mirroring the per-resolution score figures: one CSV per
/// resolution with (id, score) rows.
inline void write_chart_data(const SsimReport& report, const std::filesystem::path& dir) {
    for (const ResolutionStats& st : report.aggregates) {
        std::ofstream os(dir / ("chart-" + st.resolution + ".csv"));
        if (!os) throw IoError("cannot write chart data under " + dir.string());
        os << "id,score\n";
        char buf[40];
        for (const SsimRow& r : report.rows) {
            if (!r.ok || r.resolution != st.resolution) continue;
            std::snprintf(buf, sizeof buf, "%.9f", r.score);
            os << r.id << "," << buf << "\n";
        }
    }
}

}  // namespace tryon
