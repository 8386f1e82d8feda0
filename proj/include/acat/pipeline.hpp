#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "acat/defense.hpp"
#include "acat/net.hpp"
#include "acat/tensor.hpp"

namespace acat {

enum class FrameMode { Clean, Detected, Traced, Reset };

const char* frame_mode_name(FrameMode mode);

// Starting-mask provider: any single-frame detector that can localize the
// patch once. Receives the recorded activations of the current frame's full
// forward pass (so it needs no pass of its own) and returns a mask at
// layer-l dims (paper convention, 0 = adversarial), or nullopt.
using StartingMaskProvider = std::function<std::optional<BinaryMask>(
    const SlicedNetwork& net, const GradientTape& recorded, int frame_index)>;

struct FrameOutcome {
    ActivationTensor output;
    std::optional<BinaryMask> mask_used;  // at layer-l dims
    FrameMode mode = FrameMode::Clean;
    double pass_units = 1.0;  // full-network forwards
    double xi = 0.0;
    long adversarial_pixels = 0;  // zeros of mask_used
};

struct AcatState {
    std::optional<AdversarialTrace> trace;
    std::optional<ThresholdState> threshold;
    DefenseParams params;
    long lambda_m = 0;  // 0 = auto (1% of layer-l spatial elements)
    long frame_counter = 0;
    int stale_count = 0;
};

// True iff the mask's adversarial pixel count is strictly below lambda_m.
bool reset_check(const BinaryMask& mask, long lambda_m);

// One step of the per-frame loop:
//  - no trace: run the detector (its forward pass doubles as task inference,
//    1.0 units). If it fires, initialize trace and threshold from the
//    recorded h^l and run the defended suffix (2.0 units, mode Detected).
//  - trace set: prefix to l, heatmap, binarize. Below lambda_m: clear state,
//    plain suffix, mode Reset. Otherwise optionally update trace/threshold on
//    the update period, apply the mask at l, run the suffix. 1.0 units.
FrameOutcome process_frame(AcatState& state, const SlicedNetwork& net,
                           const ActivationTensor& frame, const StartingMaskProvider& detector);

struct StreamResult {
    std::vector<FrameOutcome> outcomes;
    double total_pass_units = 0.0;
    std::vector<double> mask_ious;  // per frame; -1 when no mask or no GT
    std::vector<int> reset_frames;
};

// Folds process_frame over the frames. gt_masks, when given, are at layer-l
// dims (paper convention) and produce per-frame Mask-IoU for defended frames.
StreamResult run_stream(AcatState& state, const SlicedNetwork& net,
                        const std::vector<ActivationTensor>& frames,
                        const StartingMaskProvider& detector,
                        const std::vector<BinaryMask>* gt_masks = nullptr);

// Two-pass reference (detector pass + defended pass per attacked frame),
// used by the pass-accounting comparison.
StreamResult run_two_pass_baseline(const SlicedNetwork& net,
                                   const std::vector<ActivationTensor>& frames,
                                   const StartingMaskProvider& detector, int monitored_layer,
                                   const std::vector<BinaryMask>* gt_masks = nullptr);

// CSV: frame_index,mode,pass_units,mask_pixel_count,xi,mask_iou.
void write_stream_csv(const std::string& path, const StreamResult& result);

// GT-backed provider: fires when the ground-truth adversarial region has at
// least min_pixels pixels at layer-l resolution (a real detector cannot
// localize an arbitrarily small patch).
StartingMaskProvider make_gt_provider(std::vector<BinaryMask> gt_masks_at_l, long min_pixels);

StartingMaskProvider make_baseline_provider(CalibrationRecord calib, int layer_h, int layer_w);

long auto_lambda_m(int layer_h, int layer_w);

}  // namespace acat
