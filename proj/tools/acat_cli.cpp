// acat: command-line front end for the adversarial-channel attention toolkit.
//
// Subcommands: train-toy, craft-patch, gen-video, run-defense, ablate,
// sweep-period, sweep-layer, report. Exit codes: 0 success, 1 configuration
// error, 2 runtime error. All randomness flows from --seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acat/config.hpp"
#include "acat/dataset.hpp"
#include "acat/errors.hpp"
#include "acat/experiments.hpp"
#include "acat/format.hpp"
#include "acat/metrics.hpp"
#include "acat/pipeline.hpp"
#include "acat/report.hpp"

namespace fs = std::filesystem;
using namespace acat;

namespace {

struct CommonArgs {
    std::string config_file;
    std::vector<std::pair<std::string, std::string>> overrides;
};

// Registers --config plus one CLI flag per config key, recorded as overrides
// so precedence stays: flag > config file > default.
void add_config_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "key=value configuration file");
    static const std::vector<std::pair<const char*, const char*>> kFlags = {
        {"--seed", "seed"},
        {"--frame-h", "frame_h"},
        {"--frame-w", "frame_w"},
        {"--frames", "num_frames"},
        {"--classes", "class_count"},
        {"--shapes", "num_shapes"},
        {"--scroll", "scroll_speed"},
        {"--noise", "noise_sigma"},
        {"--epochs", "epochs"},
        {"--lr", "lr"},
        {"--train-frames", "train_frames"},
        {"--patch-h", "patch_h"},
        {"--patch-w", "patch_w"},
        {"--beta", "beta"},
        {"--steps", "steps"},
        {"--step-size", "step_size"},
        {"--eot-samples", "eot_samples"},
        {"--s-min", "s_min"},
        {"--s-max", "s_max"},
        {"--motion-scale", "motion_scale"},
        {"--targeted", "targeted"},
        {"--target-class", "target_class"},
        {"--layer", "monitored_layer"},
        {"--apply-layer", "apply_layer"},
        {"--tau", "tau"},
        {"--gaussian-kernel", "gaussian_kernel"},
        {"--dilation-kernel", "dilation_kernel"},
        {"--percentile-v", "percentile_v"},
        {"--period", "update_period"},
        {"--lambda-m", "lambda_m"},
        {"--provider", "provider"},
        {"--deep-layer", "detector_deep_layer"},
        {"--margin", "detector_margin"},
    };
    for (const auto& [flag, key] : kFlags) {
        const std::string k = key;
        cmd->add_option_function<std::string>(
            flag, [&args, k](const std::string& v) { args.overrides.emplace_back(k, v); }, k);
    }
    cmd->add_option_function<std::string>(
        "--flags",
        [&args](const std::string& v) {
            const bool none = v == "none";
            args.overrides.emplace_back("att_plus",
                                        !none && v.find("att+") != std::string::npos ? "1" : "0");
            args.overrides.emplace_back("att_minus",
                                        !none && v.find("att-") != std::string::npos ? "1" : "0");
            args.overrides.emplace_back("upd",
                                        !none && v.find("upd") != std::string::npos ? "1" : "0");
            args.overrides.emplace_back("nf",
                                        !none && v.find("nf") != std::string::npos ? "1" : "0");
        },
        "comma list of att+,att-,upd,nf (or 'none')");
    cmd->add_flag_function(
        "--require-gt",
        [&args](std::int64_t) { args.overrides.emplace_back("require_gt", "1"); },
        "fail if the dataset lacks ground-truth masks");
}

RunConfig resolve(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_file.empty()) cfg.load_file(args.config_file);
    for (const auto& [k, v] : args.overrides) cfg.set(k, v);
    return cfg;
}

void emit_run_metadata(const std::string& out_dir, const RunConfig& cfg) {
    fs::create_directories(out_dir);
    std::ofstream out((fs::path(out_dir) / "resolved_config.txt").string());
    out << cfg.resolved();
    std::ofstream ver((fs::path(out_dir) / "version.txt").string());
    ver << kToolVersion << "\n";
}

std::vector<LabeledFrame> clean_frames(const RunConfig& cfg, int count) {
    const SceneSpec scene = cfg.scene_spec();
    std::vector<LabeledFrame> frames(count);
    for (int k = 0; k < count; ++k) frames[k] = render_frame(scene, k);
    return frames;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("expected a comma-separated integer list");
    return out;
}

int cmd_train_toy(const CommonArgs& args, const std::string& out_path) {
    const RunConfig cfg = resolve(args);
    ToyTrainOptions opts;
    opts.frame_h = cfg.frame_h;
    opts.frame_w = cfg.frame_w;
    opts.class_count = cfg.class_count;
    opts.num_frames = cfg.train_frames;
    opts.scroll_speed = cfg.scroll_speed;
    opts.noise_sigma = cfg.noise_sigma;
    const SlicedNetwork net = train_toy_model(cfg.seed, cfg.epochs, cfg.lr, opts);
    save_weights(net, out_path);

    // Report held-out accuracy as a sanity signal.
    SceneSpec scene = cfg.scene_spec();
    scene.seed = derive_seed(cfg.seed, 0x22);  // same scene the trainer used
    double acc = 0.0;
    const int held_out = 4;
    for (int k = 0; k < held_out; ++k) {
        const LabeledFrame f = render_frame(scene, opts.num_frames + k);
        acc += pixel_accuracy(argmax_labels(forward(net, f.image)), f.labels);
    }
    std::cout << "trained " << out_path << " held-out pixel accuracy "
              << fmt_double(acc / held_out) << "\n";
    return 0;
}

int cmd_craft_patch(const CommonArgs& args, const std::string& weights,
                    const std::string& out_dir) {
    const RunConfig cfg = resolve(args);
    emit_run_metadata(out_dir, cfg);
    const SlicedNetwork net = load_weights(weights);
    const auto images = clean_frames(cfg, std::max(8, cfg.train_frames / 2));
    const AdversarialPatch initial =
        random_patch(cfg.patch_h, cfg.patch_w, derive_seed(cfg.seed, 0x9a));
    const AdversarialPatch patch =
        optimize_patch(net, images, cfg.attack_config(), initial, cfg.seed);
    save_patch(patch, (fs::path(out_dir) / "patch.ppm").string(),
               (fs::path(out_dir) / "patch_meta.txt").string(), cfg.attack_config());
    std::cout << "patch written to " << out_dir << "/patch.ppm\n";
    return 0;
}

int cmd_gen_video(const CommonArgs& args, const std::string& patch_path,
                  const std::string& out_dir, int phase_seed) {
    const RunConfig cfg = resolve(args);
    const AdversarialPatch patch = load_patch(patch_path);
    gen_video_dataset(cfg.scene_spec(), cfg.num_frames, patch, cfg.motion(phase_seed), out_dir);
    emit_run_metadata(out_dir, cfg);
    std::cout << "dataset written to " << out_dir << " (" << cfg.num_frames << " frames)\n";
    return 0;
}

StartingMaskProvider build_provider(const RunConfig& cfg, const VideoDataset& ds,
                                    const SlicedNetwork& net, long lambda,
                                    const std::vector<BinaryMask>& gt_l, int lh, int lw) {
    if (cfg.provider == "gt") {
        if (gt_l.empty())
            throw ConfigError("provider 'gt' needs a dataset with ground-truth masks");
        return make_gt_provider(gt_l, lambda);
    }
    SceneSpec scene = cfg.scene_spec();
    scene.seed = ds.seed;
    scene.frame_h = ds.frame_h;
    scene.frame_w = ds.frame_w;
    scene.class_count = ds.class_count;
    std::vector<ActivationTensor> clean;
    for (int k = 0; k < std::min(ds.num_frames, 8); ++k)
        clean.push_back(render_frame(scene, k).image);
    return make_baseline_provider(
        calibrate_baseline(net, clean, cfg.detector_deep_layer, cfg.detector_margin), lh, lw);
}

int cmd_run_defense(const CommonArgs& args, const std::string& weights,
                    const std::string& dataset_dir, const std::string& out_dir) {
    const RunConfig cfg = resolve(args);
    const SlicedNetwork net = load_weights(weights);
    const VideoDataset ds = load_video_dataset(dataset_dir);
    if (cfg.require_gt && ds.gt_masks.empty())
        throw ConfigError("dataset " + dataset_dir + " has no ground-truth masks (--require-gt)");
    emit_run_metadata(out_dir, cfg);

    const ActivationTensor probe =
        forward_slice(net, ds.frames.at(0), 0, cfg.defense.monitored_layer);
    const long lambda =
        cfg.lambda_m > 0 ? cfg.lambda_m : auto_lambda_m(probe.height, probe.width);
    const auto gt_l =
        ds.gt_masks.empty() ? std::vector<BinaryMask>{}
                            : gt_masks_at_layer(ds, net, cfg.defense.monitored_layer);
    const auto provider = build_provider(cfg, ds, net, lambda, gt_l, probe.height, probe.width);

    AcatState state;
    state.params = cfg.defense;
    state.lambda_m = lambda;
    const StreamResult result =
        run_stream(state, net, ds.frames, provider, gt_l.empty() ? nullptr : &gt_l);
    write_stream_csv((fs::path(out_dir) / "stream.csv").string(), result);

    const PassAccount passes = count_passes(result.outcomes);
    std::cout << "frames=" << result.outcomes.size() << " pass_units=" << fmt_double(passes.units)
              << " baseline_units=" << fmt_double(passes.baseline_units)
              << " ratio=" << fmt_double(passes.ratio)
              << " resets=" << result.reset_frames.size() << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& weights, const std::string& dataset_dir,
              const std::string& out_dir, const std::string& kind, const std::string& list) {
    const RunConfig cfg = resolve(args);
    const SlicedNetwork net = load_weights(weights);
    const VideoDataset ds = load_video_dataset(dataset_dir);
    emit_run_metadata(out_dir, cfg);

    std::vector<CellResult> rows;
    if (kind == "ablate") {
        const auto provider = cfg.provider == "gt" ? MaskProviderKind::GroundTruth
                                                   : MaskProviderKind::Detector;
        rows = run_ablation(ds, net, cfg.defense, default_ablation_grid(provider), cfg.lambda_m);
    } else if (kind == "period") {
        rows = run_period_sweep(ds, net, cfg.defense, parse_int_list(list), cfg.lambda_m);
    } else {
        rows = run_layer_sweep(ds, net, cfg.defense, parse_int_list(list), cfg.lambda_m);
    }
    const std::string csv = (fs::path(out_dir) / "results.csv").string();
    write_results_csv(csv, rows);
    std::cout << "results written to " << csv << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-frame adversarial-patch defense toolkit"};
    app.require_subcommand(1);

    CommonArgs train_args, craft_args, gen_args, run_args, ablate_args, period_args, layer_args;
    std::string train_out = "weights.bin";
    std::string weights, dataset_dir, out_dir = "out";
    std::string patch_path;
    int phase_seed = -1;
    std::string periods = "1,5,10,30", layers = "1,2,3";
    std::vector<std::string> report_csvs;
    std::string report_out = "summary.txt", report_dat;

    auto* train = app.add_subcommand("train-toy", "train the toy segmentation net");
    add_config_options(train, train_args);
    train->add_option("--out", train_out, "weight file to write");

    auto* craft = app.add_subcommand("craft-patch", "optimize an adversarial patch");
    add_config_options(craft, craft_args);
    craft->add_option("--weights", weights, "trained weight file")->required();
    craft->add_option("--out", out_dir, "output directory");

    auto* gen = app.add_subcommand("gen-video", "generate an attacked video dataset");
    add_config_options(gen, gen_args);
    gen->add_option("--patch", patch_path, "patch PPM file")->required();
    gen->add_option("--out", out_dir, "dataset directory")->required();
    gen->add_option("--phase-seed", phase_seed, "index for randomized motion phases (-1 = zero)");

    auto* run = app.add_subcommand("run-defense", "run the multi-frame defense over a dataset");
    add_config_options(run, run_args);
    run->add_option("--weights", weights, "trained weight file")->required();
    run->add_option("--dataset", dataset_dir, "dataset directory")->required();
    run->add_option("--out", out_dir, "run directory");

    auto* ablate = app.add_subcommand("ablate", "flag-ablation grid");
    add_config_options(ablate, ablate_args);
    ablate->add_option("--weights", weights, "trained weight file")->required();
    ablate->add_option("--dataset", dataset_dir, "dataset directory")->required();
    ablate->add_option("--out", out_dir, "run directory");

    auto* sweep_p = app.add_subcommand("sweep-period", "update-period sweep");
    add_config_options(sweep_p, period_args);
    sweep_p->add_option("--weights", weights, "trained weight file")->required();
    sweep_p->add_option("--dataset", dataset_dir, "dataset directory")->required();
    sweep_p->add_option("--out", out_dir, "run directory");
    sweep_p->add_option("--periods", periods, "comma list of update periods");

    auto* sweep_l = app.add_subcommand("sweep-layer", "monitored-layer sweep");
    add_config_options(sweep_l, layer_args);
    sweep_l->add_option("--weights", weights, "trained weight file")->required();
    sweep_l->add_option("--dataset", dataset_dir, "dataset directory")->required();
    sweep_l->add_option("--out", out_dir, "run directory");
    sweep_l->add_option("--layers", layers, "comma list of monitored layers");

    auto* rep = app.add_subcommand("report", "aggregate result CSVs");
    rep->add_option("csvs", report_csvs, "input CSV files")->required();
    rep->add_option("--out", report_out, "summary file");
    rep->add_option("--dat-dir", report_dat, "directory for gnuplot-ready data files");

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train_toy(train_args, train_out);
        if (craft->parsed()) return cmd_craft_patch(craft_args, weights, out_dir);
        if (gen->parsed()) return cmd_gen_video(gen_args, patch_path, out_dir, phase_seed);
        if (run->parsed()) return cmd_run_defense(run_args, weights, dataset_dir, out_dir);
        if (ablate->parsed())
            return cmd_sweep(ablate_args, weights, dataset_dir, out_dir, "ablate", "");
        if (sweep_p->parsed())
            return cmd_sweep(period_args, weights, dataset_dir, out_dir, "period", periods);
        if (sweep_l->parsed())
            return cmd_sweep(layer_args, weights, dataset_dir, out_dir, "layer", layers);
        if (rep->parsed()) {
            report(report_csvs, report_out, report_dat);
            std::cout << "summary written to " << report_out << "\n";
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
