#pragma once

#include <optional>
#include <string>
#include <vector>

#include "acat/net.hpp"
#include "acat/tensor.hpp"

namespace acat {

// Per-channel attention weights in [0,1] at the monitored layer. Unless the
// pre-normalization vector was constant, min is 0 and max is 1.
struct AdversarialTrace {
    std::vector<double> weights;
};

struct DefenseParams {
    int monitored_layer = 1;   // l
    int apply_layer = 1;       // z, 0 <= z <= l
    double tau = 2.0;          // heatmap attention exponent
    int gaussian_kernel = 3;   // noise filter size at layer-l resolution
    int dilation_kernel = 5;   // threshold-exclusion expansion
    double percentile_v = 70.0;
    bool nf_enabled = true;
    bool att_plus_enabled = true;
    bool att_minus_enabled = true;
    bool upd_enabled = true;
    int update_period = 1;       // frames between trace/threshold updates
    double gaussian_sigma = 0.0;  // 0 = kernel_size / 4
    bool normalized_dilation = false;
};

struct ThresholdState {
    double xi = 0.0;
};

// Calibration for the stand-in single-frame detector: per-clean-frame maxima
// of the unweighted channel-sum heatmap at a deep layer.
struct CalibrationRecord {
    int deep_layer = 3;
    std::vector<double> maxima;
    double margin = 1.1;

    double static_threshold() const;
};

// H(i,j) = sum_c sigma_c^tau * h_{c,i,j}; Gaussian noise filter applied when
// nf_enabled. With both attention flags disabled the trace is replaced by
// all-ones (plain channel sum).
Heatmap compute_heatmap(const ActivationTensor& h, const AdversarialTrace& trace,
                        const DefenseParams& params);

// mask = 0 where map > xi (adversarial), 1 elsewhere.
BinaryMask binarize(const Heatmap& map, double xi);

// Per channel: mean activation over the adversarial region (att+) minus mean
// over the clean region (att-), then ReLU and min-max normalization across
// the channel vector. A constant post-ReLU vector maps to all-ones when
// positive and all-zeros when zero. mask uses the paper convention
// (0 = adversarial). Throws DegenerateMaskError if either region is empty.
AdversarialTrace update_trace(const ActivationTensor& h, const BinaryMask& mask,
                              const DefenseParams& params);

// xi = max(clean values) + (percentile_v(clean values) - mean(clean values)),
// where clean values are heatmap pixels outside the dilated adversarial
// region. Returns nullopt when dilation swallows every clean pixel (caller
// keeps the previous threshold).
std::optional<ThresholdState> update_threshold(const Heatmap& map, const BinaryMask& mask,
                                               const DefenseParams& params);

// Resizes the layer-l mask to layer z, applies it spatially, and finishes the
// forward pass from z.
ActivationTensor apply_defense_mask(const SlicedNetwork& net,
                                    const ActivationTensor& prefix_features,
                                    const BinaryMask& mask_at_l, int z, int l);

// Builds the detector calibration from clean frames (one forward each).
CalibrationRecord calibrate_baseline(const SlicedNetwork& net,
                                     const std::vector<ActivationTensor>& clean_frames,
                                     int deep_layer, double margin);

// Stand-in single-frame detector: unweighted channel-sum heatmap at the
// calibrated deep layer; fires when any pixel exceeds the static threshold.
// Works from already-recorded activations so it costs no extra pass. Returns
// the mask resized to (target_h, target_w) (layer-l dims), or nullopt.
std::optional<BinaryMask> baseline_detect(const GradientTape& recorded,
                                          const CalibrationRecord& calib, int target_h,
                                          int target_w);

// Plain channel sum of a feature tensor (the sigma = 1 heatmap).
Heatmap channel_sum(const ActivationTensor& h);

void save_trace(const AdversarialTrace& trace, const std::string& path);
AdversarialTrace load_trace(const std::string& path);

}  // namespace acat
