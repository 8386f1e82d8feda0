#pragma once

#include <cstdint>
#include <vector>

#include "acat/tensor.hpp"

namespace acat {

// Procedural scene: colored shapes on a flat background, scrolling
// horizontally with wraparound. Labels are known by construction
// (class 0 = background, shapes carry classes 1..class_count-1).
struct SceneSpec {
    std::uint64_t seed = 1;
    int frame_h = 64;
    int frame_w = 64;
    int class_count = 4;
    int num_shapes = 6;
    double scroll_speed = 0.5;  // pixels per frame; 0 = static scene
    double noise_sigma = 0.02;  // per-pixel sensor noise
};

struct LabeledFrame {
    ActivationTensor image;            // 3 x H x W in [0,1], 8-bit quantized
    std::vector<std::uint8_t> labels;  // H*W class indices
};

// Deterministic in (spec, frame_index); frames differ only by the scroll
// offset and the per-frame noise draw.
LabeledFrame render_frame(const SceneSpec& spec, int frame_index);

}  // namespace acat
