#include "acat/defense.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "acat/errors.hpp"
#include "acat/format.hpp"

namespace acat {

double CalibrationRecord::static_threshold() const {
    if (maxima.empty()) throw ConfigError("CalibrationRecord: empty calibration");
    return *std::max_element(maxima.begin(), maxima.end()) * margin;
}

Heatmap channel_sum(const ActivationTensor& h) {
    Heatmap map(h.height, h.width);
    for (int c = 0; c < h.channels; ++c)
        for (int i = 0; i < h.height; ++i)
            for (int j = 0; j < h.width; ++j)
                map.at(i, j) += h.at(c, i, j);
    return map;
}

Heatmap compute_heatmap(const ActivationTensor& h, const AdversarialTrace& trace,
                        const DefenseParams& params) {
    const bool attention = params.att_plus_enabled || params.att_minus_enabled;
    if (attention && static_cast<int>(trace.weights.size()) != h.channels)
        throw ConfigError("compute_heatmap: trace length " +
                          std::to_string(trace.weights.size()) + " != channels " +
                          std::to_string(h.channels));

    Heatmap map(h.height, h.width);
    for (int c = 0; c < h.channels; ++c) {
        const double w = attention ? std::pow(trace.weights[c], params.tau) : 1.0;
        if (w == 0.0) continue;
        for (int i = 0; i < h.height; ++i)
            for (int j = 0; j < h.width; ++j)
                map.at(i, j) += w * h.at(c, i, j);
    }
    if (params.nf_enabled)
        map = gaussian_filter(map, params.gaussian_kernel, params.gaussian_sigma);
    return map;
}

BinaryMask binarize(const Heatmap& map, double xi) {
    BinaryMask mask(map.height, map.width);
    for (std::size_t i = 0; i < map.data.size(); ++i)
        mask.data[i] = map.data[i] > xi ? 0 : 1;
    return mask;
}

AdversarialTrace update_trace(const ActivationTensor& h, const BinaryMask& mask,
                              const DefenseParams& params) {
    if (mask.height != h.height || mask.width != h.width)
        throw ConfigError("update_trace: mask dims do not match features");
    const long adv_count = mask.count_zeros();
    const long clean_count = mask.count_ones();
    if (adv_count == 0) throw DegenerateMaskError("update_trace: empty adversarial region");
    if (clean_count == 0) throw DegenerateMaskError("update_trace: empty clean region");

    std::vector<double> d(h.channels, 0.0);
    for (int c = 0; c < h.channels; ++c) {
        double adv_sum = 0.0, clean_sum = 0.0;
        for (int i = 0; i < h.height; ++i) {
            for (int j = 0; j < h.width; ++j) {
                if (mask.at(i, j))
                    clean_sum += h.at(c, i, j);
                else
                    adv_sum += h.at(c, i, j);
            }
        }
        double v = 0.0;
        if (params.att_plus_enabled) v += adv_sum / adv_count;
        if (params.att_minus_enabled) v -= clean_sum / clean_count;
        d[c] = v > 0.0 ? v : 0.0;  // ReLU
    }

    const auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
    const double lo = *lo_it, hi = *hi_it;
    AdversarialTrace trace;
    trace.weights.resize(d.size());
    if (hi > lo) {
        for (std::size_t c = 0; c < d.size(); ++c) trace.weights[c] = (d[c] - lo) / (hi - lo);
    } else {
        // Constant post-ReLU vector: uniform over-activation gets uniform
        // attention, an all-zero vector gets none.
        std::fill(trace.weights.begin(), trace.weights.end(), hi > 0.0 ? 1.0 : 0.0);
    }
    return trace;
}

std::optional<ThresholdState> update_threshold(const Heatmap& map, const BinaryMask& mask,
                                               const DefenseParams& params) {
    if (mask.height != map.height || mask.width != map.width)
        throw ConfigError("update_threshold: mask dims do not match heatmap");
    const BinaryMask excluded = expand_mask(mask.complement(), params.dilation_kernel, 0.5,
                                            params.normalized_dilation);
    std::vector<double> clean_values;
    clean_values.reserve(map.data.size());
    for (std::size_t i = 0; i < map.data.size(); ++i)
        if (!excluded.data[i]) clean_values.push_back(map.data[i]);
    if (clean_values.empty()) return std::nullopt;

    double mx = clean_values[0], sum = 0.0;
    for (double v : clean_values) {
        mx = v > mx ? v : mx;
        sum += v;
    }
    const double mean = sum / static_cast<double>(clean_values.size());
    const double psi = percentile(clean_values, params.percentile_v) - mean;
    return ThresholdState{mx + psi};
}

ActivationTensor apply_defense_mask(const SlicedNetwork& net,
                                    const ActivationTensor& prefix_features,
                                    const BinaryMask& mask_at_l, int z, int l) {
    if (z < 0 || z > l || l > net.num_layers())
        throw ConfigError("apply_defense_mask: need 0 <= z <= l <= num_layers");
    const BinaryMask mask =
        (mask_at_l.height == prefix_features.height && mask_at_l.width == prefix_features.width)
            ? mask_at_l
            : resize_mask(mask_at_l, prefix_features.height, prefix_features.width);
    return forward_slice(net, spatial_mask_apply(prefix_features, mask), z, net.num_layers());
}

CalibrationRecord calibrate_baseline(const SlicedNetwork& net,
                                     const std::vector<ActivationTensor>& clean_frames,
                                     int deep_layer, double margin) {
    if (clean_frames.empty()) throw ConfigError("calibrate_baseline: no calibration frames");
    CalibrationRecord calib;
    calib.deep_layer = deep_layer;
    calib.margin = margin;
    for (const ActivationTensor& frame : clean_frames) {
        const Heatmap map = channel_sum(forward_slice(net, frame, 0, deep_layer));
        calib.maxima.push_back(*std::max_element(map.data.begin(), map.data.end()));
    }
    return calib;
}

std::optional<BinaryMask> baseline_detect(const GradientTape& recorded,
                                          const CalibrationRecord& calib, int target_h,
                                          int target_w) {
    if (!recorded.recorded) throw StateError("baseline_detect: no recorded forward pass");
    const Heatmap map = channel_sum(recorded.activations.at(calib.deep_layer));
    const double xi_s = calib.static_threshold();
    bool fired = false;
    for (double v : map.data)
        if (v > xi_s) {
            fired = true;
            break;
        }
    if (!fired) return std::nullopt;
    return resize_mask(binarize(map, xi_s), target_h, target_w);
}

void save_trace(const AdversarialTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (double w : trace.weights) out << fmt_double(w) << "\n";
}

AdversarialTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    AdversarialTrace trace;
    double v;
    while (in >> v) trace.weights.push_back(v);
    return trace;
}

}  // namespace acat
