// Batch CLI for the accessory try-on preprocessing pipeline: watch
// localization, agnostic-mask construction, TPS warp fitting and SSIM
// evaluation over a convention-layout dataset tree.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "tryon/pipeline.hpp"

namespace {

struct CliOverrides {
    std::string root;
    std::string config_file;
    int jobs = 0;            // 0 = not given
    bool deterministic = false;
    bool deterministic_given = false;
};

tryon::PipelineConfig make_config(const CliOverrides& cli) {
    tryon::PipelineConfig cfg;
    if (!cli.config_file.empty()) tryon::load_config_file(cfg, cli.config_file);
    tryon::apply_env_overrides(cfg);
    if (!cli.root.empty()) cfg.dataset_root = cli.root;
    if (cli.jobs > 0) cfg.jobs = cli.jobs;
    if (cli.deterministic_given) cfg.deterministic = cli.deterministic;
    if (cfg.dataset_root.empty())
        throw tryon::LayoutError("no dataset root (use --root or the config file)");
    return cfg;
}

void print_summary(const char* stage, const tryon::RunSummary& summary) {
    std::printf("%s: %d ok, %d warning, %d error\n", stage,
                summary.count(tryon::Status::ok), summary.count(tryon::Status::warning),
                summary.count(tryon::Status::error));
    for (const auto& row : summary.rows)
        if (row.status != tryon::Status::ok)
            std::printf("  %s: %s %s\n", row.id.c_str(), tryon::to_string(row.status),
                        row.message.c_str());
}

int run_prepare_cmd(const tryon::PipelineConfig& cfg) {
    const auto records = tryon::discover(cfg.dataset_root);
    const auto summary = tryon::run_prepare(cfg, records);
    print_summary("prepare", summary);
    return summary.exit_code();
}

int run_warp_cmd(const tryon::PipelineConfig& cfg) {
    const auto records = tryon::discover(cfg.dataset_root);
    const auto summary = tryon::run_warp(cfg, records);
    print_summary("warp", summary);
    return summary.exit_code();
}

int run_visualize_cmd(const tryon::PipelineConfig& cfg) {
    const auto records = tryon::discover(cfg.dataset_root);
    const auto summary = tryon::run_visualize(cfg, records);
    print_summary("visualize", summary);
    return summary.exit_code();
}

int run_eval_cmd(const tryon::PipelineConfig& cfg, const std::string& generated,
                 const std::string& truth, const std::string& out, bool charts) {
    const auto report = tryon::run_eval(cfg, generated, truth, out, charts);
    std::fputs(tryon::format_report_table(report).c_str(), stdout);
    const int errors = static_cast<int>(report.rows.size()) - report.score_count();
    return errors > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"watch try-on preprocessing: localization, agnostic masks, "
                 "TPS warp fitting, SSIM evaluation"};
    app.require_subcommand(1);

    CliOverrides cli;
    app.add_option("--root", cli.root, "dataset root directory");
    app.add_option("--config", cli.config_file, "key=value configuration file");
    app.add_option("--jobs", cli.jobs, "worker count for per-image stages");
    app.add_flag("--deterministic,!--no-deterministic", cli.deterministic,
                 "byte-reproducible artifacts (default on)")
        ->each([&](const std::string&) { cli.deterministic_given = true; });

    auto* prepare = app.add_subcommand("prepare", "build agnostic masks, images and crops");
    auto* warp = app.add_subcommand("warp", "fit and apply the accessory warp");
    auto* visualize = app.add_subcommand("visualize", "write localization debug overlays");
    auto* all = app.add_subcommand("all", "prepare, warp, visualize, then eval warp output");

    auto* eval = app.add_subcommand("eval", "paired SSIM evaluation of two directories");
    std::string eval_generated, eval_truth, eval_out = "eval";
    bool eval_charts = false;
    eval->add_option("--generated", eval_generated, "directory of generated images")
        ->required();
    eval->add_option("--truth", eval_truth, "directory of ground-truth images")->required();
    eval->add_option("--out", eval_out, "report output directory");
    eval->add_flag("--charts", eval_charts, "also write per-resolution chart data");

    CLI11_PARSE(app, argc, argv);

    try {
        if (eval->parsed()) {
            tryon::PipelineConfig cfg;
            if (!cli.config_file.empty()) tryon::load_config_file(cfg, cli.config_file);
            tryon::apply_env_overrides(cfg);
            if (!cli.root.empty()) cfg.dataset_root = cli.root;
            return run_eval_cmd(cfg, eval_generated, eval_truth, eval_out, eval_charts);
        }

        const tryon::PipelineConfig cfg = make_config(cli);
        if (prepare->parsed()) return run_prepare_cmd(cfg);
        if (warp->parsed()) return run_warp_cmd(cfg);
        if (visualize->parsed()) return run_visualize_cmd(cfg);
        if (all->parsed()) {
            const auto records = tryon::discover(cfg.dataset_root);
            const auto prep = tryon::run_prepare(cfg, records);
            print_summary("prepare", prep);
            const auto warped = tryon::run_warp(cfg, records);
            print_summary("warp", warped);
            const auto viz = tryon::run_visualize(cfg, records);
            print_summary("visualize", viz);
            int code = std::max({prep.exit_code(), warped.exit_code(), viz.exit_code()});
            try {
                const auto report = tryon::run_eval(
                    cfg, cfg.dataset_root / tryon::layout::kWarpDir,
                    cfg.dataset_root / tryon::layout::kTargetCropDir,
                    cfg.dataset_root / "eval");
                std::fputs(tryon::format_report_table(report).c_str(), stdout);
            } catch (const tryon::EmptyEvalError& e) {
                std::fprintf(stderr, "eval: %s\n", e.what());
                code = std::max(code, 2);
            }
            return code;
        }
    } catch (const tryon::EmptyEvalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const tryon::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return 0;
}
