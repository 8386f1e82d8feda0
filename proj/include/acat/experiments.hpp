#pragma once

#include <string>
#include <vector>

#include "acat/dataset.hpp"
#include "acat/net.hpp"
#include "acat/pipeline.hpp"

namespace acat {

enum class MaskProviderKind { GroundTruth, Detector };

struct AblationConfig {
    bool att_plus = true;
    bool att_minus = true;
    bool upd = true;
    bool nf = true;
    MaskProviderKind provider = MaskProviderKind::GroundTruth;

    std::string flag_string() const;  // e.g. "att+,att-,upd,nf" or "none"
};

struct CellResult {
    AblationConfig config;
    int monitored_layer = 1;
    int update_period = 1;
    double mean_mask_iou = 0.0;  // over traced frames
    int traced_frames = 0;
    int resets = 0;
    double pass_units = 0.0;
};

// Resizes the dataset's ground-truth masks to the monitored layer's dims.
std::vector<BinaryMask> gt_masks_at_layer(const VideoDataset& ds, const SlicedNetwork& net,
                                          int layer);

// Scales the layer-1 kernel defaults to another monitored layer's resolution.
DefenseParams scale_params_for_layer(const DefenseParams& base, const SlicedNetwork& net,
                                     const VideoDataset& ds, int layer);

// Runs one full stream for a grid cell and summarizes it.
CellResult run_cell(const VideoDataset& ds, const SlicedNetwork& net, const DefenseParams& params,
                    const AblationConfig& cfg, long lambda_m);

// Table-2-style grid over the attention/update/noise-filter flags.
std::vector<CellResult> run_ablation(const VideoDataset& ds, const SlicedNetwork& net,
                                     const DefenseParams& params,
                                     const std::vector<AblationConfig>& grid, long lambda_m);

std::vector<AblationConfig> default_ablation_grid(MaskProviderKind provider);

// Mean Mask-IoU per monitored layer, evaluated at each layer's resolution.
std::vector<CellResult> run_layer_sweep(const VideoDataset& ds, const SlicedNetwork& net,
                                        const DefenseParams& params,
                                        const std::vector<int>& layers, long lambda_m);

// Mean Mask-IoU for each trace/threshold update period.
std::vector<CellResult> run_period_sweep(const VideoDataset& ds, const SlicedNetwork& net,
                                         const DefenseParams& params,
                                         const std::vector<int>& periods, long lambda_m);

// CSV shared by all sweep outputs:
// config,att_plus,att_minus,upd,nf,provider,layer,period,mean_mask_iou,traced_frames,resets,pass_units
void write_results_csv(const std::string& path, const std::vector<CellResult>& rows);

}  // namespace acat
