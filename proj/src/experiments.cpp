#include "acat/experiments.hpp"

#include <cmath>
#include <fstream>

#include "acat/errors.hpp"
#include "acat/format.hpp"
#include "acat/metrics.hpp"

namespace acat {

std::string AblationConfig::flag_string() const {
    std::string s;
    if (att_plus) s += "att+ ";
    if (att_minus) s += "att- ";
    if (upd) s += "upd ";
    if (nf) s += "nf ";
    if (s.empty()) return "none";
    s.pop_back();
    return s;
}

std::vector<BinaryMask> gt_masks_at_layer(const VideoDataset& ds, const SlicedNetwork& net,
                                          int layer) {
    const ActivationTensor probe = forward_slice(net, ds.frames.at(0), 0, layer);
    std::vector<BinaryMask> out;
    out.reserve(ds.gt_masks.size());
    for (const BinaryMask& m : ds.gt_masks)
        out.push_back(resize_mask(m, probe.height, probe.width));
    return out;
}

DefenseParams scale_params_for_layer(const DefenseParams& base, const SlicedNetwork& net,
                                     const VideoDataset& ds, int layer) {
    DefenseParams params = base;
    params.monitored_layer = layer;
    params.apply_layer = layer;
    const ActivationTensor ref = forward_slice(net, ds.frames.at(0), 0, base.monitored_layer);
    const ActivationTensor tgt = forward_slice(net, ds.frames.at(0), 0, layer);
    const double ratio = static_cast<double>(tgt.height) / static_cast<double>(ref.height);
    const auto scale_kernel = [ratio](int k) {
        int v = static_cast<int>(std::lround(k * ratio));
        if (v < 1) v = 1;
        if (v % 2 == 0) ++v;
        return v;
    };
    params.gaussian_kernel = scale_kernel(base.gaussian_kernel);
    params.dilation_kernel = scale_kernel(base.dilation_kernel);
    return params;
}

CellResult run_cell(const VideoDataset& ds, const SlicedNetwork& net, const DefenseParams& params,
                    const AblationConfig& cfg, long lambda_m) {
    DefenseParams p = params;
    p.att_plus_enabled = cfg.att_plus;
    p.att_minus_enabled = cfg.att_minus;
    p.upd_enabled = cfg.upd;
    p.nf_enabled = cfg.nf;

    if (ds.gt_masks.empty())
        throw ConfigError("run_cell: dataset has no ground-truth masks");
    const ActivationTensor probe = forward_slice(net, ds.frames.at(0), 0, p.monitored_layer);
    const long lambda = lambda_m > 0 ? lambda_m : auto_lambda_m(probe.height, probe.width);
    const auto gt_l = gt_masks_at_layer(ds, net, p.monitored_layer);

    StartingMaskProvider provider;
    if (cfg.provider == MaskProviderKind::GroundTruth) {
        provider = make_gt_provider(gt_l, lambda);
    } else {
        // Calibrate on clean renders of the same scene.
        SceneSpec scene;
        scene.seed = ds.seed;
        scene.frame_h = ds.frame_h;
        scene.frame_w = ds.frame_w;
        scene.class_count = ds.class_count;
        std::vector<ActivationTensor> clean;
        for (int k = 0; k < std::min(ds.num_frames, 8); ++k)
            clean.push_back(render_frame(scene, k).image);
        provider = make_baseline_provider(calibrate_baseline(net, clean, 3, 1.1), probe.height,
                                          probe.width);
    }

    AcatState state;
    state.params = p;
    state.lambda_m = lambda;
    const StreamResult stream = run_stream(state, net, ds.frames, provider, &gt_l);

    CellResult res;
    res.config = cfg;
    res.monitored_layer = p.monitored_layer;
    res.update_period = p.update_period;
    res.pass_units = stream.total_pass_units;
    res.resets = static_cast<int>(stream.reset_frames.size());
    double iou_sum = 0.0;
    for (std::size_t k = 0; k < stream.outcomes.size(); ++k) {
        if (stream.outcomes[k].mode != FrameMode::Traced) continue;
        ++res.traced_frames;
        if (stream.mask_ious[k] >= 0.0) iou_sum += stream.mask_ious[k];
    }
    res.mean_mask_iou = res.traced_frames > 0 ? iou_sum / res.traced_frames : 0.0;
    return res;
}

std::vector<CellResult> run_ablation(const VideoDataset& ds, const SlicedNetwork& net,
                                     const DefenseParams& params,
                                     const std::vector<AblationConfig>& grid, long lambda_m) {
    std::vector<CellResult> rows;
    rows.reserve(grid.size());
    for (const AblationConfig& cfg : grid) rows.push_back(run_cell(ds, net, params, cfg, lambda_m));
    return rows;
}

std::vector<AblationConfig> default_ablation_grid(MaskProviderKind provider) {
    // Mirrors the flag rows of the attention/update ablation table.
    std::vector<AblationConfig> grid;
    const auto add = [&](bool ap, bool am, bool upd, bool nf) {
        AblationConfig c;
        c.att_plus = ap;
        c.att_minus = am;
        c.upd = upd;
        c.nf = nf;
        c.provider = provider;
        grid.push_back(c);
    };
    add(false, false, false, false);
    add(false, false, false, true);  // NF only
    add(true, false, false, false);  // Att+ only
    add(true, false, false, true);
    add(true, true, false, true);
    add(true, false, true, true);
    add(true, true, true, false);
    add(true, true, true, true);  // all on
    return grid;
}

std::vector<CellResult> run_layer_sweep(const VideoDataset& ds, const SlicedNetwork& net,
                                        const DefenseParams& params,
                                        const std::vector<int>& layers, long lambda_m) {
    std::vector<CellResult> rows;
    AblationConfig cfg;  // all flags on, GT provider
    for (int layer : layers) {
        const DefenseParams p = scale_params_for_layer(params, net, ds, layer);
        rows.push_back(run_cell(ds, net, p, cfg, lambda_m));
    }
    return rows;
}

std::vector<CellResult> run_period_sweep(const VideoDataset& ds, const SlicedNetwork& net,
                                         const DefenseParams& params,
                                         const std::vector<int>& periods, long lambda_m) {
    std::vector<CellResult> rows;
    AblationConfig cfg;
    for (int period : periods) {
        if (period < 1) throw ConfigError("run_period_sweep: period must be >= 1");
        DefenseParams p = params;
        p.update_period = period;
        rows.push_back(run_cell(ds, net, p, cfg, lambda_m));
    }
    return rows;
}

void write_results_csv(const std::string& path, const std::vector<CellResult>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "config,att_plus,att_minus,upd,nf,provider,layer,period,"
           "mean_mask_iou,traced_frames,resets,pass_units\n";
    for (const CellResult& r : rows) {
        out << r.config.flag_string() << ',' << r.config.att_plus << ',' << r.config.att_minus
            << ',' << r.config.upd << ',' << r.config.nf << ','
            << (r.config.provider == MaskProviderKind::GroundTruth ? "gt" : "detector") << ','
            << r.monitored_layer << ',' << r.update_period << ',' << fmt_double(r.mean_mask_iou)
            << ',' << r.traced_frames << ',' << r.resets << ',' << fmt_double(r.pass_units)
            << '\n';
    }
}

}  // namespace acat
