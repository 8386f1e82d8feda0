#include "acat/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "acat/errors.hpp"
#include "acat/rng.hpp"
#include "acat/synth.hpp"

namespace acat {

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

ActivationTensor upsample_bilinear(const ActivationTensor& in, int scale) {
    const int oh = in.height * scale, ow = in.width * scale;
    ActivationTensor out(in.channels, oh, ow);
    for (int oy = 0; oy < oh; ++oy) {
        double sy = (oy + 0.5) / scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(in.height - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, in.height - 1);
        const double wy = sy - y0;
        for (int ox = 0; ox < ow; ++ox) {
            double sx = (ox + 0.5) / scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(in.width - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, in.width - 1);
            const double wx = sx - x0;
            for (int c = 0; c < in.channels; ++c) {
                out.at(c, oy, ox) = (1 - wy) * ((1 - wx) * in.at(c, y0, x0) + wx * in.at(c, y0, x1)) +
                                    wy * ((1 - wx) * in.at(c, y1, x0) + wx * in.at(c, y1, x1));
            }
        }
    }
    return out;
}

ActivationTensor upsample_backward(const ActivationTensor& grad_out, int scale,
                                   int in_h, int in_w) {
    ActivationTensor grad_in(grad_out.channels, in_h, in_w);
    for (int oy = 0; oy < grad_out.height; ++oy) {
        double sy = (oy + 0.5) / scale - 0.5;
        sy = std::clamp(sy, 0.0, static_cast<double>(in_h - 1));
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double wy = sy - y0;
        for (int ox = 0; ox < grad_out.width; ++ox) {
            double sx = (ox + 0.5) / scale - 0.5;
            sx = std::clamp(sx, 0.0, static_cast<double>(in_w - 1));
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, in_w - 1);
            const double wx = sx - x0;
            for (int c = 0; c < grad_out.channels; ++c) {
                const double g = grad_out.at(c, oy, ox);
                grad_in.at(c, y0, x0) += (1 - wy) * (1 - wx) * g;
                grad_in.at(c, y0, x1) += (1 - wy) * wx * g;
                grad_in.at(c, y1, x0) += wy * (1 - wx) * g;
                grad_in.at(c, y1, x1) += wy * wx * g;
            }
        }
    }
    return grad_in;
}

ActivationTensor apply_layer(const Layer& layer, const ActivationTensor& in) {
    if (layer.kind == LayerKind::Upsample) return upsample_bilinear(in, layer.scale);
    ActivationTensor out = conv2d(in, layer.kernel, layer.bias, layer.stride, layer.padding);
    if (layer.relu)
        for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

// Backprop one layer. 'in' and 'out' are the recorded activations around it;
// grad_out is dL/d(out) and is gated through the ReLU here using the
// post-activation sign. Parameter grads are accumulated into wg / bg.
ActivationTensor layer_backward(const Layer& layer, const ActivationTensor& in,
                                const ActivationTensor& out, const ActivationTensor& grad_out,
                                std::vector<double>& wg, std::vector<double>& bg) {
    if (layer.kind == LayerKind::Upsample)
        return upsample_backward(grad_out, layer.scale, in.height, in.width);

    ActivationTensor gpre = grad_out;
    if (layer.relu) {
        for (std::size_t i = 0; i < gpre.data.size(); ++i)
            if (out.data[i] <= 0.0) gpre.data[i] = 0.0;
    }

    const ConvKernel& k = layer.kernel;
    ActivationTensor grad_in(in.channels, in.height, in.width);
    wg.assign(k.w.size(), 0.0);
    bg.assign(layer.bias.size(), 0.0);

    for (int oc = 0; oc < k.out_c; ++oc) {
        for (int oy = 0; oy < out.height; ++oy) {
            for (int ox = 0; ox < out.width; ++ox) {
                const double g = gpre.at(oc, oy, ox);
                if (g == 0.0) continue;
                bg[oc] += g;
                const int base_y = oy * layer.stride - layer.padding;
                const int base_x = ox * layer.stride - layer.padding;
                for (int ic = 0; ic < k.in_c; ++ic) {
                    for (int ky = 0; ky < k.kh; ++ky) {
                        const int iy = base_y + ky;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int kx = 0; kx < k.kw; ++kx) {
                            const int ix = base_x + kx;
                            if (ix < 0 || ix >= in.width) continue;
                            grad_in.at(ic, iy, ix) += k.at(oc, ic, ky, kx) * g;
                            wg[((static_cast<std::size_t>(oc) * k.in_c + ic) * k.kh + ky) * k.kw +
                               kx] += in.at(ic, iy, ix) * g;
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

}  // namespace

ActivationTensor forward_slice(const SlicedNetwork& net, const ActivationTensor& input,
                               int from_layer, int to_layer) {
    const int n = net.num_layers();
    if (from_layer < 0 || to_layer > n || from_layer > to_layer)
        throw ConfigError("forward_slice: bad layer range [" + std::to_string(from_layer) +
                          ", " + std::to_string(to_layer) + "]");
    if (net.exec_counts.size() != net.layers.size()) net.reset_exec_counts();
    ActivationTensor h = input;
    for (int j = from_layer; j < to_layer; ++j) {
        h = apply_layer(net.layers[j], h);
        ++net.exec_counts[j];
    }
    return h;
}

GradientTape forward_record(const SlicedNetwork& net, const ActivationTensor& input) {
    if (net.exec_counts.size() != net.layers.size()) net.reset_exec_counts();
    GradientTape tape;
    tape.activations.reserve(net.layers.size() + 1);
    tape.activations.push_back(input);
    for (std::size_t j = 0; j < net.layers.size(); ++j) {
        tape.activations.push_back(apply_layer(net.layers[j], tape.activations.back()));
        ++net.exec_counts[j];
    }
    tape.recorded = true;
    return tape;
}

void backward(const SlicedNetwork& net, GradientTape& tape, const ActivationTensor& loss_grad,
              const std::map<int, ActivationTensor>* extra_layer_grads) {
    if (!tape.recorded) throw StateError("backward: no recorded forward pass");
    const int n = net.num_layers();
    if (!loss_grad.same_shape(tape.activations[n]))
        throw ConfigError("backward: loss_grad shape does not match network output");

    tape.weight_grads.assign(net.layers.size(), {});
    tape.bias_grads.assign(net.layers.size(), {});

    ActivationTensor g = loss_grad;
    if (extra_layer_grads) {
        auto it = extra_layer_grads->find(n);
        if (it != extra_layer_grads->end())
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += it->second.data[i];
    }
    for (int j = n; j >= 1; --j) {
        g = layer_backward(net.layers[j - 1], tape.activations[j - 1], tape.activations[j], g,
                           tape.weight_grads[j - 1], tape.bias_grads[j - 1]);
        if (extra_layer_grads) {
            auto it = extra_layer_grads->find(j - 1);
            if (it != extra_layer_grads->end()) {
                if (!it->second.same_shape(g))
                    throw ConfigError("backward: extra grad shape mismatch at layer " +
                                      std::to_string(j - 1));
                for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += it->second.data[i];
            }
        }
    }
    tape.input_grad = g;
    tape.have_grads = true;
}

double softmax_cross_entropy(const ActivationTensor& logits,
                             const std::vector<std::uint8_t>& labels, ActivationTensor& grad,
                             const BinaryMask* exclude) {
    const int C = logits.channels;
    const std::size_t total = static_cast<std::size_t>(logits.height) * logits.width;
    if (labels.size() != total)
        throw ConfigError("softmax_cross_entropy: label count does not match dims");
    if (exclude && (exclude->height != logits.height || exclude->width != logits.width))
        throw ConfigError("softmax_cross_entropy: exclude mask dims do not match");
    std::size_t npix = total;
    if (exclude) {
        npix = 0;
        for (std::uint8_t m : exclude->data) npix += (m == 0);
    }
    grad = ActivationTensor(C, logits.height, logits.width);
    if (npix == 0) return 0.0;
    double loss = 0.0;
    std::vector<double> p(C);
    for (int i = 0; i < logits.height; ++i) {
        for (int j = 0; j < logits.width; ++j) {
            if (exclude && exclude->at(i, j)) continue;
            double mx = logits.at(0, i, j);
            for (int c = 1; c < C; ++c) mx = std::max(mx, logits.at(c, i, j));
            double sum = 0.0;
            for (int c = 0; c < C; ++c) {
                p[c] = std::exp(logits.at(c, i, j) - mx);
                sum += p[c];
            }
            const int y = labels[static_cast<std::size_t>(i) * logits.width + j];
            if (y >= C) throw DataError("softmax_cross_entropy: label out of range");
            for (int c = 0; c < C; ++c) {
                p[c] /= sum;
                grad.at(c, i, j) = (p[c] - (c == y ? 1.0 : 0.0)) / static_cast<double>(npix);
            }
            loss -= std::log(std::max(p[y], 1e-300));
        }
    }
    return loss / static_cast<double>(npix);
}

std::vector<std::uint8_t> argmax_labels(const ActivationTensor& logits) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(logits.height) * logits.width);
    for (int i = 0; i < logits.height; ++i) {
        for (int j = 0; j < logits.width; ++j) {
            int best = 0;
            for (int c = 1; c < logits.channels; ++c)
                if (logits.at(c, i, j) > logits.at(best, i, j)) best = c;
            out[static_cast<std::size_t>(i) * logits.width + j] = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

double pixel_accuracy(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw ConfigError("pixel_accuracy: size mismatch or empty");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gt[i];
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

namespace {

Layer make_conv(Rng& rng, int in_c, int out_c, int k, int stride, int pad, bool relu) {
    Layer layer;
    layer.kind = LayerKind::Conv;
    layer.kernel = ConvKernel(out_c, in_c, k, k);
    layer.bias.assign(out_c, 0.0);
    layer.stride = stride;
    layer.padding = pad;
    layer.relu = relu;
    const double bound = std::sqrt(6.0 / (in_c * k * k));
    for (double& v : layer.kernel.w) v = f32(rng.uniform(-bound, bound));
    return layer;
}

}  // namespace

SlicedNetwork make_toy_net(int class_count, std::uint64_t seed) {
    if (class_count < 2) throw ConfigError("make_toy_net: class_count must be >= 2");
    Rng rng(derive_seed(seed, 0x11));
    SlicedNetwork net;
    net.class_count = class_count;
    net.layers.push_back(make_conv(rng, 3, 16, 3, 1, 1, true));
    net.layers.push_back(make_conv(rng, 16, 32, 3, 2, 1, true));
    net.layers.push_back(make_conv(rng, 32, 32, 3, 2, 1, true));
    net.layers.push_back(make_conv(rng, 32, class_count, 1, 1, 0, false));
    Layer up;
    up.kind = LayerKind::Upsample;
    up.scale = 4;
    net.layers.push_back(up);
    net.reset_exec_counts();
    return net;
}

SlicedNetwork train_toy_model(std::uint64_t seed, int epochs, double lr,
                              const ToyTrainOptions& opts) {
    if (epochs < 1) throw ConfigError("train_toy_model: epochs must be >= 1");
    SlicedNetwork net = make_toy_net(opts.class_count, seed);

    SceneSpec scene;
    scene.seed = derive_seed(seed, 0x22);
    scene.frame_h = opts.frame_h;
    scene.frame_w = opts.frame_w;
    scene.class_count = opts.class_count;
    scene.scroll_speed = opts.scroll_speed;
    scene.noise_sigma = opts.noise_sigma;

    std::vector<LabeledFrame> frames(opts.num_frames);
    for (int k = 0; k < opts.num_frames; ++k) frames[k] = render_frame(scene, k);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (const LabeledFrame& f : frames) {
            GradientTape tape = forward_record(net, f.image);
            ActivationTensor lg;
            const double loss = softmax_cross_entropy(tape.activations.back(), f.labels, lg);
            if (!std::isfinite(loss))
                throw TrainingError("train_toy_model: loss diverged");
            backward(net, tape, lg);
            for (std::size_t j = 0; j < net.layers.size(); ++j) {
                Layer& layer = net.layers[j];
                if (layer.kind != LayerKind::Conv) continue;
                for (std::size_t i = 0; i < layer.kernel.w.size(); ++i)
                    layer.kernel.w[i] = f32(layer.kernel.w[i] - lr * tape.weight_grads[j][i]);
                for (std::size_t i = 0; i < layer.bias.size(); ++i)
                    layer.bias[i] = f32(layer.bias[i] - lr * tape.bias_grads[j][i]);
            }
        }
    }
    net.reset_exec_counts();
    return net;
}

namespace {

constexpr char kMagic[7] = {'A', 'C', 'A', 'T', 'W', '1', '\0'};

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put_f32(std::ostream& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) throw FormatError(path + ": truncated weight file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f32(std::istream& in, const std::string& path) {
    const std::uint32_t bits = get_u32(in, path);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

}  // namespace

void save_weights(const SlicedNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    put_u32(out, static_cast<std::uint32_t>(net.class_count));
    for (const Layer& layer : net.layers) {
        out.put(static_cast<char>(layer.kind));
        if (layer.kind == LayerKind::Conv) {
            put_u32(out, static_cast<std::uint32_t>(layer.kernel.out_c));
            put_u32(out, static_cast<std::uint32_t>(layer.kernel.in_c));
            put_u32(out, static_cast<std::uint32_t>(layer.kernel.kh));
            put_u32(out, static_cast<std::uint32_t>(layer.kernel.kw));
            put_u32(out, static_cast<std::uint32_t>(layer.stride));
            put_u32(out, static_cast<std::uint32_t>(layer.padding));
            put_u32(out, layer.relu ? 1 : 0);
            for (double v : layer.kernel.w) put_f32(out, v);
            for (double v : layer.bias) put_f32(out, v);
        } else {
            put_u32(out, static_cast<std::uint32_t>(layer.scale));
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

SlicedNetwork load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic)) throw FormatError(path + ": truncated magic");
    for (std::size_t i = 0; i < sizeof(kMagic); ++i)
        if (magic[i] != kMagic[i])
            throw FormatError(path + ": bad magic byte at offset " + std::to_string(i));

    SlicedNetwork net;
    const std::uint32_t num_layers = get_u32(in, path);
    net.class_count = static_cast<int>(get_u32(in, path));
    if (num_layers > 1000) throw FormatError(path + ": implausible layer count");
    for (std::uint32_t j = 0; j < num_layers; ++j) {
        const int kind = in.get();
        if (kind == EOF) throw FormatError(path + ": truncated layer header");
        Layer layer;
        if (kind == static_cast<int>(LayerKind::Conv)) {
            layer.kind = LayerKind::Conv;
            const int oc = static_cast<int>(get_u32(in, path));
            const int ic = static_cast<int>(get_u32(in, path));
            const int kh = static_cast<int>(get_u32(in, path));
            const int kw = static_cast<int>(get_u32(in, path));
            layer.stride = static_cast<int>(get_u32(in, path));
            layer.padding = static_cast<int>(get_u32(in, path));
            layer.relu = get_u32(in, path) != 0;
            if (oc < 1 || ic < 1 || kh < 1 || kw < 1 || layer.stride < 1 || layer.padding < 0)
                throw FormatError(path + ": bad conv dims");
            layer.kernel = ConvKernel(oc, ic, kh, kw);
            for (double& v : layer.kernel.w) v = get_f32(in, path);
            layer.bias.assign(oc, 0.0);
            for (double& v : layer.bias) v = get_f32(in, path);
        } else if (kind == static_cast<int>(LayerKind::Upsample)) {
            layer.kind = LayerKind::Upsample;
            layer.scale = static_cast<int>(get_u32(in, path));
            if (layer.scale < 1) throw FormatError(path + ": bad upsample scale");
        } else {
            throw FormatError(path + ": unknown layer kind " + std::to_string(kind));
        }
        net.layers.push_back(std::move(layer));
    }
    net.reset_exec_counts();
    return net;
}

}  // namespace acat
