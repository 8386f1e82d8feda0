#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acat/attack.hpp"
#include "acat/synth.hpp"
#include "acat/tensor.hpp"

namespace acat {

// On-disk layout:
//   dir/frames/%06d.ppm   attacked frames
//   dir/masks/%06d.pgm    ground-truth masks (0 = adversarial, 255 = clean)
//   dir/labels/%06d.pgm   class index per pixel
//   dir/manifest.txt      key=value generation record
struct VideoDataset {
    std::string dir;
    int num_frames = 0;
    int frame_h = 0, frame_w = 0;
    int class_count = 0;
    std::uint64_t seed = 0;
    MotionParams motion;
    std::vector<ActivationTensor> frames;
    std::vector<BinaryMask> gt_masks;  // paper convention, 0 = adversarial
    std::vector<std::vector<std::uint8_t>> labels;
};

// Composites the patch onto the procedural scene along the sinusoidal
// trajectory and writes everything under out_dir. Bit-deterministic in
// (scene, motion, patch).
VideoDataset gen_video_dataset(const SceneSpec& scene, int num_frames,
                               const AdversarialPatch& patch, const MotionParams& motion,
                               const std::string& out_dir);

VideoDataset load_video_dataset(const std::string& dir);

}  // namespace acat
