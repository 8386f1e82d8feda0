#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acat/net.hpp"
#include "acat/rng.hpp"
#include "acat/synth.hpp"
#include "acat/tensor.hpp"

namespace acat {

// Learnable patch image, values in [0,1].
struct AdversarialPatch {
    ActivationTensor pixels;  // 3 x H~ x W~

    int height() const { return pixels.height; }
    int width() const { return pixels.width; }
};

// Patch center in frame pixel coordinates plus a scale factor.
struct Placement {
    double x_pos = 0.0;
    double y_pos = 0.0;
    double s = 1.0;
};

// Sinusoidal per-frame motion:
//   x = c_x + A_x sin(alpha_x k + omega_x)   (same for y and s around 1).
struct MotionParams {
    double a_x = 0, a_y = 0, a_s = 0;
    double alpha_x = 0, alpha_y = 0, alpha_s = 0;
    double omega_x = 0, omega_y = 0, omega_s = 0;
    double c_x = 0, c_y = 0;
};

// Reference amplitudes (500, 300, 0.3) and frequencies 0.05 are given at
// 2048x1024; amplitudes rescale proportionally to the frame size.
MotionParams default_motion(int frame_h, int frame_w);

struct AttackConfig {
    double beta = 1.0;          // adversarial weight; 1-beta weights the activation term
    int steps = 200;
    double step_size = 0.01;    // signed-gradient step
    std::vector<int> monitored_layers{1};
    bool targeted = false;      // untargeted: maximize CE against true labels
    int target_class = 0;
    int eot_samples = 4;        // (image, placement) draws per step
    double s_min = 0.8;
    double s_max = 1.2;
};

struct PasteResult {
    ActivationTensor frame;
    BinaryMask covered;  // adversarial-indicator: 1 = patch pixel
};

// Nearest-neighbor scales the patch by placement.s and pastes it (pixel
// replacement) centered at (x_pos, y_pos), cropping at frame borders.
// Throws PlacementError if no pixel lands inside the frame.
PasteResult paste_patch(const ActivationTensor& frame, const AdversarialPatch& patch,
                        const Placement& placement);

Placement patch_trajectory(const MotionParams& params, int frame_index);

// Uniform center within the frame, uniform scale in [s_min, s_max].
Placement sample_transform(Rng& rng, int frame_h, int frame_w, double s_min, double s_max);

// Over-activation-aware EOT: signed-gradient descent on
//   L = beta * L_adv + (1 - beta) * L_act
// where L_adv is per-pixel cross-entropy toward the target class (targeted)
// or negative cross-entropy toward the true labels (untargeted), and L_act is
// the mean squared activation over patch-covered positions at the monitored
// layers. Each step averages gradients over cfg.eot_samples random
// (image, placement) draws. Deterministic given seed.
AdversarialPatch optimize_patch(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                                const AttackConfig& cfg, const AdversarialPatch& initial,
                                std::uint64_t seed);

// Uniform-random patch on the 8-bit grid.
AdversarialPatch random_patch(int height, int width, std::uint64_t seed);

// Mean squared activation over patch-covered positions at one layer, averaged
// over the given placements. Used by tests and the beta sweep.
double patch_activation_energy(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                               const AdversarialPatch& patch,
                               const std::vector<Placement>& placements, int layer);

// Mean adversarial loss of the patch over fixed (image, placement) pairs.
double patch_adversarial_loss(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                              const AdversarialPatch& patch,
                              const std::vector<Placement>& placements, const AttackConfig& cfg);

// PPM pixels plus a key=value sidecar with base dims and crafting config.
void save_patch(const AdversarialPatch& patch, const std::string& ppm_path,
                const std::string& meta_path, const AttackConfig& cfg);
AdversarialPatch load_patch(const std::string& ppm_path);

}  // namespace acat
