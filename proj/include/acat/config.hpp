#pragma once

#include <cstdint>
#include <string>

#include "acat/attack.hpp"
#include "acat/defense.hpp"
#include "acat/synth.hpp"

namespace acat {

inline constexpr const char* kToolVersion = "acat 0.1.0";

// Flat configuration for all tools. Precedence: CLI flag > config file >
// built-in default. Unknown keys are rejected.
struct RunConfig {
    std::uint64_t seed = 1;

    // scene / dataset
    int frame_h = 64;
    int frame_w = 64;
    int num_frames = 60;
    int class_count = 4;
    int num_shapes = 6;
    double scroll_speed = 0.5;
    double noise_sigma = 0.02;

    // toy training
    int epochs = 20;
    double lr = 0.1;
    int train_frames = 8;

    // attack
    int patch_h = 24;
    int patch_w = 24;
    double beta = 1.0;
    int steps = 200;
    double step_size = 0.01;
    int eot_samples = 4;
    double s_min = 0.8;
    double s_max = 1.2;
    double motion_scale = 1.0;  // multiplier on sinusoidal motion amplitudes
    bool targeted = false;
    int target_class = 0;

    // defense
    DefenseParams defense;
    long lambda_m = 0;  // 0 = auto (1% of layer-l spatial elements)
    std::string provider = "gt";  // gt | detector
    int detector_deep_layer = 3;
    double detector_margin = 1.1;

    bool require_gt = false;

    // Applies one key=value pair; throws ConfigError on unknown key or bad value.
    void set(const std::string& key, const std::string& value);

    // Loads a key=value file (comments with '#', blank lines allowed).
    void load_file(const std::string& path);

    // Fully resolved key=value dump, suitable to reproduce the run.
    std::string resolved() const;

    SceneSpec scene_spec() const;
    AttackConfig attack_config() const;
    MotionParams motion(int frame_index_phase_seed = -1) const;
};

}  // namespace acat
