#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dhanshr/checkpoint.hpp"
#include "dhanshr/eval.hpp"
#include "dhanshr/gradcheck.hpp"
#include "dhanshr/image_io.hpp"
#include "dhanshr/manifest.hpp"
#include "dhanshr/network.hpp"
#include "dhanshr/perfbench.hpp"
#include "dhanshr/version.hpp"

namespace dhanshr::cli {

// Exit codes: 0 success, 1 usage error, 2 data/processing error (including a
// failed gradient check).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace clidetail {

inline void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << contents;
}

inline ModelConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

// Pairs prediction and ground-truth directories by shared stem into an
// ad-hoc single-source manifest.
inline Manifest manifest_from_dirs(const std::string& pred_dir, const std::string& gt_dir) {
    const auto preds = manifestdetail::stems_of_dir(pred_dir);
    const auto gts = manifestdetail::stems_of_dir(gt_dir);
    if (preds.empty()) throw std::runtime_error("no images found in " + pred_dir);
    std::vector<std::string> missing;
    for (const auto& [stem, path] : preds)
        if (!gts.count(stem)) missing.push_back(stem);
    if (!missing.empty()) {
        std::string msg = "missing ground truth in " + gt_dir + " for stem(s):";
        for (const auto& s : missing) msg += " " + s;
        throw std::runtime_error(msg);
    }
    Manifest m;
    for (const auto& [stem, path] : preds)
        m.records.push_back({"eval", "pairs", path, gts.at(stem)});
    return m;
}

}  // namespace clidetail

inline int run(int argc, const char* const* argv) {
    CLI::App app{"specular highlight removal toolkit"};
    app.set_version_flag("--version", std::string("dhanshr ") + kToolVersion +
                                          " (checkpoint format v" +
                                          std::to_string(kCheckpointFormatVersion) + ")");
    app.require_subcommand(0, 1);

    // init
    auto* init_cmd = app.add_subcommand("init", "create a seeded checkpoint");
    std::string init_config, init_preset = "toy", init_out;
    std::uint64_t init_seed = 0;
    auto* init_config_opt = init_cmd->add_option("--config", init_config, "model config JSON");
    init_cmd->add_option("--preset", init_preset, "config preset when no --config is given")
        ->check(CLI::IsMember({"toy", "large"}));
    auto* init_seed_opt = init_cmd->add_option("--seed", init_seed, "initialization seed");
    init_cmd->add_option("--out", init_out, "output checkpoint path")->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "run one image through a checkpoint");
    std::string infer_ckpt, infer_in, infer_out;
    infer_cmd->add_option("--checkpoint", infer_ckpt, "checkpoint path")->required();
    infer_cmd->add_option("--input", infer_in, "input image (PNG or PPM)")->required();
    infer_cmd->add_option("--output", infer_out, "output image path")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    std::string eval_ckpt, eval_manifest, eval_pred_dir, eval_gt_dir, eval_report;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "run inference with this checkpoint");
    auto* eval_manifest_opt = eval_cmd->add_option("--manifest", eval_manifest, "manifest JSON");
    auto* eval_pred_opt = eval_cmd->add_option("--pred-dir", eval_pred_dir, "predictions directory");
    eval_cmd->add_option("--gt-dir", eval_gt_dir, "ground-truth directory")->needs(eval_pred_opt);
    eval_pred_opt->excludes(eval_manifest_opt);
    eval_cmd->add_option("--report", eval_report, "write the JSON report here");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "attention kernel scaling benchmark");
    std::string bench_kind = "pixel", bench_report;
    std::vector<int> bench_sizes{64, 128, 256};
    int bench_channels = 8, bench_window = 8, bench_reps = 5;
    bench_cmd->add_option("--kind", bench_kind, "kernel kind")
        ->check(CLI::IsMember({"pixel", "channel", "dense"}));
    bench_cmd->add_option("--sizes", bench_sizes, "square side lengths")->delimiter(',');
    bench_cmd->add_option("--channels", bench_channels, "channel count");
    bench_cmd->add_option("--window", bench_window, "window side for windowed kernels");
    bench_cmd->add_option("--reps", bench_reps, "timed repetitions per size");
    bench_cmd->add_option("--report", bench_report, "write the JSON report here");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
    std::string grad_block = "all", grad_report;
    std::uint64_t grad_seed = 0;
    grad_cmd->add_option("--block", grad_block, "which core to check")
        ->check(CLI::IsMember({"all", "p_ssswa", "c_ssswa", "cca", "ssim", "layer_norm",
                               "composite"}));
    grad_cmd->add_option("--seed", grad_seed, "random seed");
    grad_cmd->add_option("--report", grad_report, "write the JSON report here");

    // manifest
    auto* man_cmd = app.add_subcommand("manifest", "build a dataset manifest");
    std::string man_root, man_out;
    man_cmd->add_option("--root", man_root, "dataset root: <split>/<source>/{input,gt}")
        ->required();
    man_cmd->add_option("--out", man_out, "output manifest JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (init_cmd->parsed()) {
            ModelConfig config = init_preset == "large" ? ModelConfig::large() : ModelConfig::toy();
            if (init_config_opt->count()) config = clidetail::load_config_file(init_config);
            const std::uint64_t seed = init_seed_opt->count() ? init_seed : config.seed;
            const auto model = build_model<double>(config, seed);
            save_checkpoint(model, init_out);
            std::cout << "wrote " << init_out << " (" << count_params(model) << " parameters, seed "
                      << seed << ")\n";
            return kExitOk;
        }

        if (infer_cmd->parsed()) {
            const auto model = load_checkpoint<double>(infer_ckpt);
            const auto image = load_image<double>(infer_in);
            save_image(forward(model, image), infer_out);
            std::cout << "wrote " << infer_out << "\n";
            return kExitOk;
        }

        if (eval_cmd->parsed()) {
            if (!eval_manifest_opt->count() && !eval_pred_opt->count())
                throw CLI::RequiredError("eval: either --manifest or --pred-dir/--gt-dir");
            Manifest manifest;
            if (eval_manifest_opt->count()) {
                manifest = load_manifest(eval_manifest);
            } else {
                if (eval_gt_dir.empty())
                    throw CLI::RequiredError("eval: --pred-dir requires --gt-dir");
                manifest = clidetail::manifest_from_dirs(eval_pred_dir, eval_gt_dir);
            }
            std::optional<ModelWeights<double>> model;
            if (!eval_ckpt.empty()) model = load_checkpoint<double>(eval_ckpt);
            const EvalReport report = evaluate(manifest, model ? &*model : nullptr);
            if (!eval_report.empty())
                clidetail::write_text_file(eval_report, eval_to_json(report).dump(2) + "\n");
            std::cout << eval_to_table(report);
            return kExitOk;
        }

        if (bench_cmd->parsed()) {
            const auto report = run_scaling(kernel_kind_from_name(bench_kind), bench_channels,
                                            bench_window, bench_sizes, bench_reps);
            if (!bench_report.empty())
                clidetail::write_text_file(bench_report, scaling_to_json(report).dump(2) + "\n");
            std::cout << scaling_to_table(report);
            return kExitOk;
        }

        if (grad_cmd->parsed()) {
            std::vector<GradCheckReport> reports;
            if (grad_block == "all")
                reports = grad_check_all(grad_seed);
            else
                reports.push_back(grad_check(grad_block, grad_seed));

            bool all_pass = true;
            for (const auto& r : reports) {
                for (const auto& p : r.params)
                    std::cout << r.block << "." << p.name << ": max rel err "
                              << std::scientific << p.max_rel_err << "\n";
                std::cout << r.block << ": " << (r.pass ? "pass" : "FAIL") << "\n";
                all_pass = all_pass && r.pass;
            }
            if (!grad_report.empty()) {
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& r : reports) j.push_back(gradcheck_to_json(r));
                clidetail::write_text_file(grad_report, j.dump(2) + "\n");
            }
            return all_pass ? kExitOk : kExitData;
        }

        if (man_cmd->parsed()) {
            const Manifest manifest = build_manifest(man_root);
            const auto summary = summarize(manifest);
            std::cout << summary_table(summary);
            if (const auto err = check_benchmark_split_totals(summary)) throw std::runtime_error(*err);
            save_manifest(manifest, man_out);
            std::cout << "wrote " << man_out << " (" << manifest.records.size() << " records)\n";
            return kExitOk;
        }

        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::RequiredError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

inline int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dhanshr::cli
