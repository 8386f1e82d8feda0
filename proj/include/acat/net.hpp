#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "acat/tensor.hpp"

namespace acat {

enum class LayerKind : std::uint8_t { Conv = 1, Upsample = 2 };

// One layer descriptor. Conv layers optionally fuse a ReLU; Upsample is
// bilinear with an integer scale factor (align-corners-false mapping).
struct Layer {
    LayerKind kind = LayerKind::Conv;
    ConvKernel kernel;
    std::vector<double> bias;
    int stride = 1;
    int padding = 0;
    bool relu = false;
    int scale = 1;  // Upsample only

    std::size_t param_count() const {
        return kind == LayerKind::Conv ? kernel.w.size() + bias.size() : 0;
    }
};

// Feed-forward CNN sliceable at any layer boundary. Layer index 0 is the
// input; h^j is the output of layer j. Immutable after training; exec_counts
// feed the pass-accounting harness and are the only mutable state.
struct SlicedNetwork {
    std::vector<Layer> layers;
    int class_count = 0;
    mutable std::vector<long> exec_counts;

    int num_layers() const { return static_cast<int>(layers.size()); }
    void reset_exec_counts() const {
        exec_counts.assign(layers.size(), 0);
    }
};

// Per-layer activations recorded on the way up, gradients filled on the way
// down. Single-owner, single-threaded.
struct GradientTape {
    std::vector<ActivationTensor> activations;  // h^0 .. h^N
    std::vector<std::vector<double>> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    ActivationTensor input_grad;
    bool recorded = false;
    bool have_grads = false;
};

// Runs layers from_layer+1 .. to_layer. from_layer == to_layer returns the
// input unchanged. Increments exec_counts for every layer run.
ActivationTensor forward_slice(const SlicedNetwork& net, const ActivationTensor& input,
                               int from_layer, int to_layer);

inline ActivationTensor forward(const SlicedNetwork& net, const ActivationTensor& input) {
    return forward_slice(net, input, 0, net.num_layers());
}

// Forward pass that keeps every intermediate activation. Counts as one full
// network execution in exec_counts. Optionally start from a prefix.
GradientTape forward_record(const SlicedNetwork& net, const ActivationTensor& input);

// Reverse sweep. loss_grad is dL/d(h^N). extra_layer_grads, when given, adds
// dL/d(h^j) contributions at inner layers j as the sweep passes them (used by
// the activation-energy attack term). Fills parameter grads and input_grad.
void backward(const SlicedNetwork& net, GradientTape& tape, const ActivationTensor& loss_grad,
              const std::map<int, ActivationTensor>* extra_layer_grads = nullptr);

// Per-pixel softmax cross-entropy against a class map. Returns mean loss over
// pixels and writes dL/d(logits) into grad. Pixels where exclude==1 are left
// out of the mean (and get zero gradient); if every pixel is excluded the
// loss is 0.
double softmax_cross_entropy(const ActivationTensor& logits,
                             const std::vector<std::uint8_t>& labels, ActivationTensor& grad,
                             const BinaryMask* exclude = nullptr);

// Per-pixel argmax over channels.
std::vector<std::uint8_t> argmax_labels(const ActivationTensor& logits);

double pixel_accuracy(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt);

// Toy segmentation net:
//   L1 conv3x3 (3->16) pad 1 + ReLU      <- default monitored layer
//   L2 conv3x3 (16->32) pad 1 stride 2 + ReLU
//   L3 conv3x3 (32->32) pad 1 stride 2 + ReLU
//   L4 conv1x1 (32->classes)
//   L5 bilinear upsample x4
// He-style uniform init; all parameters quantized onto the float32 grid so
// the weight file round-trips bit-exactly.
SlicedNetwork make_toy_net(int class_count, std::uint64_t seed);

struct ToyTrainOptions {
    int frame_h = 64;
    int frame_w = 64;
    int class_count = 4;
    int num_frames = 8;
    double scroll_speed = 0.5;
    double noise_sigma = 0.02;
};

// Plain SGD with per-pixel cross-entropy on the procedural scene generator.
// Deterministic given seed. Throws TrainingError if the loss goes non-finite.
SlicedNetwork train_toy_model(std::uint64_t seed, int epochs, double lr,
                              const ToyTrainOptions& opts = {});

// Weight file: magic "ACATW1\0", little-endian u32 layer count and class
// count, then per layer: kind byte, dims as u32, parameters as f32.
void save_weights(const SlicedNetwork& net, const std::string& path);
SlicedNetwork load_weights(const std::string& path);

}  // namespace acat
