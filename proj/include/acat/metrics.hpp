#pragma once

#include <cstdint>
#include <vector>

#include "acat/tensor.hpp"

namespace acat {

struct FrameOutcome;

// Binary IoU of the adversarial regions of two defense masks (paper
// convention, 0 = adversarial). Both regions empty counts as 1.0.
double mask_iou(const BinaryMask& pred, const BinaryMask& gt);

// Mean per-class IoU; classes absent from both maps are excluded.
double miou(const std::vector<std::uint8_t>& pred_labels,
            const std::vector<std::uint8_t>& gt_labels, int class_count);

struct PassAccount {
    double units = 0.0;           // sum of forward-pass units
    double baseline_units = 0.0;  // two passes per defended frame
    double ratio = 0.0;           // units / baseline_units (0 for empty streams)
};

PassAccount count_passes(const std::vector<FrameOutcome>& outcomes);

}  // namespace acat
