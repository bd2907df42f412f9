#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tryon/error.hpp"
#include "tryon/image.hpp"
#include "tryon/ssim.hpp"
#include "tryon/tps.hpp"

namespace tryon {

/// Batch-run configuration. Defaults mirror the library defaults; a plain
/// key=value file and TRYON_* environment variables override them in that
/// order, with explicit CLI flags on top.
struct PipelineConfig {
    std::filesystem::path dataset_root;
    std::string label_scheme = "lip";
    int num_labels = 20;
    std::vector<std::uint8_t> region_labels = {lip::kBackground};
    std::vector<std::uint8_t> arm_labels = {lip::kLeftArm, lip::kRightArm};
    int gray_value = 128;
    double default_radius_frac = 0.06;
    GmmConfig gmm;
    int fit_width = 192;
    int fit_height = 256;
    std::vector<Resolution> resolutions = {{1024, 768}, {512, 384}, {256, 192}};
    int jobs = 1;
    bool deterministic = true;

    void validate() const {
        if (gray_value < 0 || gray_value > 255)
            throw RangeError("config: gray_value must lie in 0..255");
        if (!(default_radius_frac > 0.0))
            throw RangeError("config: default_radius_frac must be > 0");
        if (num_labels < 1 || num_labels > 256)
            throw RangeError("config: num_labels out of range");
        if (region_labels.empty()) throw RangeError("config: region_labels must be nonempty");
        if (fit_width < 3 || fit_height < 3) throw RangeError("config: fit size too small");
        if (resolutions.empty()) throw RangeError("config: resolutions must be nonempty");
        for (const Resolution& r : resolutions)
            if (r.width < 1 || r.height < 1) throw RangeError("config: bad resolution");
        if (jobs < 1) throw RangeError("config: jobs must be >= 1");
        gmm.validate();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw SchemaError("config: expected a boolean, got \"" + v + "\"");
}

inline int parse_int(const std::string& v) {
    try {
        std::size_t used = 0;
        const int r = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw SchemaError("config: expected an integer, got \"" + v + "\"");
    }
}

inline double parse_double(const std::string& v) {
    try {
        std::size_t used = 0;
        const double r = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw SchemaError("config: expected a number, got \"" + v + "\"");
    }
}

inline std::vector<std::uint8_t> parse_label_list(const std::string& v) {
    std::vector<std::uint8_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const int id = parse_int(trim(item));
        if (id < 0 || id > 255) throw SchemaError("config: label id out of range: " + item);
        out.push_back(static_cast<std::uint8_t>(id));
    }
    if (out.empty()) throw SchemaError("config: empty label list");
    return out;
}

inline std::vector<Resolution> parse_resolutions(const std::string& v) {
    std::vector<Resolution> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto x = item.find('x');
        if (x == std::string::npos)
            throw SchemaError("config: resolution must look like 512x384: " + item);
        out.push_back({parse_int(item.substr(0, x)), parse_int(item.substr(x + 1))});
    }
    if (out.empty()) throw SchemaError("config: empty resolution list");
    return out;
}

}  // namespace detail

/// All recognized configuration keys, shared by the file parser and the
/// environment override pass (TRYON_<KEY uppercased>).
inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "dataset_root", "label_scheme", "num_labels", "region_labels", "arm_labels",
        "gray_value", "default_radius_frac", "lambda_l1", "lambda_reg", "lr", "beta1",
        "beta2", "epsilon", "decay_every", "decay_factor", "max_steps", "grid_k",
        "gic_stride", "gic_form", "warp_fill", "clamp", "fit_width", "fit_height",
        "resolutions", "jobs", "deterministic"};
    return keys;
}

/// Apply one key=value pair; throws SchemaError for unknown keys or bad values.
inline void apply_config_value(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;

    if (key == "dataset_root") cfg.dataset_root = value;
    else if (key == "label_scheme") cfg.label_scheme = value;
    else if (key == "num_labels") cfg.num_labels = parse_int(value);
    else if (key == "region_labels") cfg.region_labels = detail::parse_label_list(value);
    else if (key == "arm_labels") cfg.arm_labels = detail::parse_label_list(value);
    else if (key == "gray_value") cfg.gray_value = parse_int(value);
    else if (key == "default_radius_frac") cfg.default_radius_frac = parse_double(value);
    else if (key == "lambda_l1") cfg.gmm.lambda_l1 = parse_double(value);
    else if (key == "lambda_reg") cfg.gmm.lambda_reg = parse_double(value);
    else if (key == "lr") cfg.gmm.lr = parse_double(value);
    else if (key == "beta1") cfg.gmm.beta1 = parse_double(value);
    else if (key == "beta2") cfg.gmm.beta2 = parse_double(value);
    else if (key == "epsilon") cfg.gmm.epsilon = parse_double(value);
    else if (key == "decay_every") cfg.gmm.decay_every = parse_int(value);
    else if (key == "decay_factor") cfg.gmm.decay_factor = parse_double(value);
    else if (key == "max_steps") cfg.gmm.max_steps = parse_int(value);
    else if (key == "grid_k") cfg.gmm.grid_k = parse_int(value);
    else if (key == "gic_stride") cfg.gmm.gic_stride = parse_int(value);
    else if (key == "gic_form") {
        if (value == "distance") cfg.gmm.gic_form = GicForm::distance;
        else if (value == "printed") cfg.gmm.gic_form = GicForm::printed;
        else throw SchemaError("config: gic_form must be distance or printed");
    }
    else if (key == "warp_fill") cfg.gmm.warp_fill = parse_double(value);
    else if (key == "clamp") cfg.gmm.clamp = parse_double(value);
    else if (key == "fit_width") cfg.fit_width = parse_int(value);
    else if (key == "fit_height") cfg.fit_height = parse_int(value);
    else if (key == "resolutions") cfg.resolutions = detail::parse_resolutions(value);
    else if (key == "jobs") cfg.jobs = parse_int(value);
    else if (key == "deterministic") cfg.deterministic = parse_bool(value);
    else throw SchemaError("config: unknown key \"" + key + "\"");
}

/// Read a key=value file. '#' starts a comment; blank lines are skipped.
inline void load_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("config: line " + std::to_string(lineno) + " is not key=value");
        apply_config_value(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
}

/// Environment overrides: TRYON_<KEY> (key uppercased) for every known key.
inline void apply_env_overrides(PipelineConfig& cfg) {
    for (const std::string& key : config_keys()) {
        std::string env = "TRYON_";
        for (char c : key) env += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(env.c_str())) apply_config_value(cfg, key, v);
    }
}

}  // namespace tryon
