#include "acat/pipeline.hpp"

#include <fstream>

#include "acat/errors.hpp"
#include "acat/format.hpp"
#include "acat/metrics.hpp"

namespace acat {

const char* frame_mode_name(FrameMode mode) {
    switch (mode) {
        case FrameMode::Clean: return "clean";
        case FrameMode::Detected: return "detected";
        case FrameMode::Traced: return "traced";
        case FrameMode::Reset: return "reset";
    }
    return "?";
}

bool reset_check(const BinaryMask& mask, long lambda_m) {
    return mask.count_zeros() < lambda_m;
}

long auto_lambda_m(int layer_h, int layer_w) {
    const long spatial = static_cast<long>(layer_h) * layer_w;
    return std::max(1L, spatial / 100);
}

namespace {

// Consecutive stale-threshold frames tolerated before forcing a reset.
constexpr int kMaxStaleFrames = 2;

FrameOutcome handle_detection(AcatState& state, const SlicedNetwork& net,
                              const GradientTape& tape, const BinaryMask& starting_mask) {
    const int l = state.params.monitored_layer;
    const ActivationTensor& h_l = tape.activations.at(l);

    FrameOutcome out;
    AdversarialTrace trace;
    try {
        trace = update_trace(h_l, starting_mask, state.params);
    } catch (const DegenerateMaskError&) {
        // Detector produced an unusable mask; stay in the no-trace state.
        out.output = tape.activations.back();
        out.mode = FrameMode::Clean;
        out.pass_units = 1.0;
        return out;
    }
    const Heatmap heat = compute_heatmap(h_l, trace, state.params);
    const auto threshold = update_threshold(heat, starting_mask, state.params);
    if (!threshold) {
        out.output = tape.activations.back();
        out.mode = FrameMode::Clean;
        out.pass_units = 1.0;
        return out;
    }

    state.trace = trace;
    state.threshold = *threshold;
    state.stale_count = 0;

    out.output = apply_defense_mask(net, h_l, starting_mask, l, l);
    out.mask_used = starting_mask;
    out.mode = FrameMode::Detected;
    out.pass_units = 2.0;  // detector pass plus the defended inference
    out.xi = threshold->xi;
    out.adversarial_pixels = starting_mask.count_zeros();
    return out;
}

}  // namespace

FrameOutcome process_frame(AcatState& state, const SlicedNetwork& net,
                           const ActivationTensor& frame, const StartingMaskProvider& detector) {
    const int l = state.params.monitored_layer;
    if (l < 1 || l > net.num_layers())
        throw ConfigError("process_frame: monitored_layer out of range");
    const long frame_index = state.frame_counter++;

    if (!state.trace) {
        // No trace: the detector's full pass doubles as the task inference.
        const GradientTape tape = forward_record(net, frame);
        const auto starting_mask = detector(net, tape, static_cast<int>(frame_index));
        if (!starting_mask) {
            FrameOutcome out;
            out.output = tape.activations.back();
            out.mode = FrameMode::Clean;
            out.pass_units = 1.0;
            return out;
        }
        return handle_detection(state, net, tape, *starting_mask);
    }

    // Trace available: one prefix, one suffix, exactly one full pass.
    const ActivationTensor h_l = forward_slice(net, frame, 0, l);
    const Heatmap heat = compute_heatmap(h_l, *state.trace, state.params);
    BinaryMask mask = binarize(heat, state.threshold->xi);
    const long lambda = state.lambda_m > 0 ? state.lambda_m : auto_lambda_m(h_l.height, h_l.width);

    FrameOutcome out;
    out.xi = state.threshold->xi;
    out.adversarial_pixels = mask.count_zeros();
    out.mask_used = mask;

    if (reset_check(mask, lambda)) {
        state.trace.reset();
        state.threshold.reset();
        state.stale_count = 0;
        out.output = forward_slice(net, h_l, l, net.num_layers());
        out.mode = FrameMode::Reset;
        out.pass_units = 1.0;
        return out;
    }

    bool force_reset = false;
    const int period = state.params.update_period;
    const bool due = state.params.upd_enabled && period > 0 && frame_index % period == 0;
    if (due) {
        try {
            const AdversarialTrace new_trace = update_trace(h_l, mask, state.params);
            // Recompute the heatmap with the new trace before the threshold
            // update so xi lives on the same scale as the next frame's map.
            const Heatmap new_heat = compute_heatmap(h_l, new_trace, state.params);
            const auto new_threshold = update_threshold(new_heat, mask, state.params);
            if (new_threshold) {
                state.trace = new_trace;
                state.threshold = *new_threshold;
                state.stale_count = 0;
            } else {
                // Dilation swallowed every clean pixel; reuse the previous
                // threshold for now.
                if (++state.stale_count > kMaxStaleFrames) force_reset = true;
            }
        } catch (const DegenerateMaskError&) {
            force_reset = true;
        }
    }

    if (force_reset) {
        state.trace.reset();
        state.threshold.reset();
        state.stale_count = 0;
        out.output = forward_slice(net, h_l, l, net.num_layers());
        out.mode = FrameMode::Reset;
        out.pass_units = 1.0;
        return out;
    }

    out.output = apply_defense_mask(net, h_l, mask, l, l);
    out.mode = FrameMode::Traced;
    out.pass_units = 1.0;
    return out;
}

namespace {

void fill_iou(StreamResult& result, const std::vector<BinaryMask>* gt_masks) {
    result.mask_ious.assign(result.outcomes.size(), -1.0);
    if (!gt_masks) return;
    for (std::size_t k = 0; k < result.outcomes.size(); ++k) {
        if (!result.outcomes[k].mask_used || k >= gt_masks->size()) continue;
        result.mask_ious[k] = mask_iou(*result.outcomes[k].mask_used, (*gt_masks)[k]);
    }
}

}  // namespace

StreamResult run_stream(AcatState& state, const SlicedNetwork& net,
                        const std::vector<ActivationTensor>& frames,
                        const StartingMaskProvider& detector,
                        const std::vector<BinaryMask>* gt_masks) {
    if (frames.empty()) throw ConfigError("run_stream: empty frame sequence");
    StreamResult result;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        try {
            result.outcomes.push_back(process_frame(state, net, frames[k], detector));
        } catch (const std::exception& e) {
            throw DataError("frame " + std::to_string(k) + ": " + e.what());
        }
        result.total_pass_units += result.outcomes.back().pass_units;
        if (result.outcomes.back().mode == FrameMode::Reset)
            result.reset_frames.push_back(static_cast<int>(k));
    }
    fill_iou(result, gt_masks);
    return result;
}

StreamResult run_two_pass_baseline(const SlicedNetwork& net,
                                   const std::vector<ActivationTensor>& frames,
                                   const StartingMaskProvider& detector, int monitored_layer,
                                   const std::vector<BinaryMask>* gt_masks) {
    if (frames.empty()) throw ConfigError("run_two_pass_baseline: empty frame sequence");
    StreamResult result;
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const GradientTape tape = forward_record(net, frames[k]);
        const auto mask = detector(net, tape, static_cast<int>(k));
        FrameOutcome out;
        if (mask) {
            // Second, defended pass from scratch.
            const ActivationTensor h_l = forward_slice(net, frames[k], 0, monitored_layer);
            out.output = apply_defense_mask(net, h_l, *mask, monitored_layer, monitored_layer);
            out.mask_used = *mask;
            out.mode = FrameMode::Detected;
            out.pass_units = 2.0;
            out.adversarial_pixels = mask->count_zeros();
        } else {
            out.output = tape.activations.back();
            out.mode = FrameMode::Clean;
            out.pass_units = 1.0;
        }
        result.total_pass_units += out.pass_units;
        result.outcomes.push_back(std::move(out));
    }
    fill_iou(result, gt_masks);
    return result;
}

void write_stream_csv(const std::string& path, const StreamResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "frame_index,mode,pass_units,mask_pixel_count,xi,mask_iou\n";
    for (std::size_t k = 0; k < result.outcomes.size(); ++k) {
        const FrameOutcome& o = result.outcomes[k];
        out << k << ',' << frame_mode_name(o.mode) << ',' << fmt_double(o.pass_units) << ','
            << o.adversarial_pixels << ',' << fmt_double(o.xi) << ',';
        if (result.mask_ious[k] >= 0.0) out << fmt_double(result.mask_ious[k]);
        out << '\n';
    }
}

StartingMaskProvider make_gt_provider(std::vector<BinaryMask> gt_masks_at_l, long min_pixels) {
    return [masks = std::move(gt_masks_at_l), min_pixels](
               const SlicedNetwork&, const GradientTape&,
               int frame_index) -> std::optional<BinaryMask> {
        if (frame_index < 0 || frame_index >= static_cast<int>(masks.size()))
            return std::nullopt;
        if (masks[frame_index].count_zeros() < min_pixels) return std::nullopt;
        return masks[frame_index];
    };
}

StartingMaskProvider make_baseline_provider(CalibrationRecord calib, int layer_h, int layer_w) {
    return [calib = std::move(calib), layer_h, layer_w](
               const SlicedNetwork&, const GradientTape& recorded,
               int) -> std::optional<BinaryMask> {
        return baseline_detect(recorded, calib, layer_h, layer_w);
    };
}

}  // namespace acat
