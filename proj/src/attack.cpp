#include "acat/attack.hpp"

#include <cmath>
#include <fstream>

#include "acat/errors.hpp"
#include "acat/image_io.hpp"

namespace acat {

MotionParams default_motion(int frame_h, int frame_w) {
    MotionParams m;
    m.a_x = 500.0 * frame_w / 2048.0;
    m.a_y = 300.0 * frame_h / 1024.0;
    m.a_s = 0.3;
    m.alpha_x = m.alpha_y = m.alpha_s = 0.05;
    m.c_x = frame_w / 2.0;
    m.c_y = frame_h / 2.0;
    return m;
}

namespace {

struct PasteGeometry {
    int scaled_h, scaled_w;
    int top, left;
};

PasteGeometry paste_geometry(const AdversarialPatch& patch, const Placement& placement) {
    PasteGeometry g;
    g.scaled_h = std::max(1, static_cast<int>(std::llround(placement.s * patch.height())));
    g.scaled_w = std::max(1, static_cast<int>(std::llround(placement.s * patch.width())));
    g.top = static_cast<int>(std::llround(placement.y_pos - g.scaled_h / 2.0));
    g.left = static_cast<int>(std::llround(placement.x_pos - g.scaled_w / 2.0));
    return g;
}

}  // namespace

PasteResult paste_patch(const ActivationTensor& frame, const AdversarialPatch& patch,
                        const Placement& placement) {
    if (placement.s <= 0.0) throw PlacementError("paste_patch: scale must be > 0");
    const PasteGeometry g = paste_geometry(patch, placement);

    PasteResult out;
    out.frame = frame;
    out.covered = BinaryMask(frame.height, frame.width);
    long covered = 0;
    for (int r = 0; r < g.scaled_h; ++r) {
        const int fy = g.top + r;
        if (fy < 0 || fy >= frame.height) continue;
        const int py = static_cast<int>(static_cast<long long>(r) * patch.height() / g.scaled_h);
        for (int c = 0; c < g.scaled_w; ++c) {
            const int fx = g.left + c;
            if (fx < 0 || fx >= frame.width) continue;
            const int px = static_cast<int>(static_cast<long long>(c) * patch.width() / g.scaled_w);
            for (int ch = 0; ch < 3; ++ch)
                out.frame.at(ch, fy, fx) = patch.pixels.at(ch, py, px);
            out.covered.at(fy, fx) = 1;
            ++covered;
        }
    }
    if (covered == 0)
        throw PlacementError("paste_patch: placement does not intersect the frame");
    return out;
}

Placement patch_trajectory(const MotionParams& p, int k) {
    Placement pl;
    pl.x_pos = p.c_x + p.a_x * std::sin(p.alpha_x * k + p.omega_x);
    pl.y_pos = p.c_y + p.a_y * std::sin(p.alpha_y * k + p.omega_y);
    pl.s = 1.0 + p.a_s * std::sin(p.alpha_s * k + p.omega_s);
    return pl;
}

Placement sample_transform(Rng& rng, int frame_h, int frame_w, double s_min, double s_max) {
    Placement pl;
    pl.x_pos = rng.uniform(0.0, frame_w);
    pl.y_pos = rng.uniform(0.0, frame_h);
    pl.s = rng.uniform(s_min, s_max);
    return pl;
}

AdversarialPatch random_patch(int height, int width, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x77));
    AdversarialPatch patch;
    patch.pixels = ActivationTensor(3, height, width);
    for (double& v : patch.pixels.data) v = quantize8(rng.uniform());
    return patch;
}

namespace {

// Gradient at the network output for the adversarial term, already scaled by
// beta. Patch-covered pixels are excluded from the loss: the attacker cares
// about corrupting predictions it does not already own. Returns L_adv.
double adversarial_grad(const ActivationTensor& logits, const std::vector<std::uint8_t>& labels,
                        const BinaryMask& covered, const AttackConfig& cfg,
                        ActivationTensor& grad) {
    double loss;
    if (cfg.targeted) {
        const std::vector<std::uint8_t> target(labels.size(),
                                               static_cast<std::uint8_t>(cfg.target_class));
        loss = softmax_cross_entropy(logits, target, grad, &covered);
    } else {
        loss = -softmax_cross_entropy(logits, labels, grad, &covered);
        for (double& v : grad.data) v = -v;
    }
    for (double& v : grad.data) v *= cfg.beta;
    return loss;
}

// Activation-energy term at one layer: mean of h^2 over patch-covered
// positions (all channels). Fills grad with d(L_act)/dh scaled by weight.
double activation_energy_grad(const ActivationTensor& h, const BinaryMask& covered_at_layer,
                              double weight, ActivationTensor* grad) {
    const long spatial = covered_at_layer.count_ones();
    if (spatial == 0) return 0.0;
    const double n = static_cast<double>(spatial) * h.channels;
    double energy = 0.0;
    if (grad) *grad = ActivationTensor(h.channels, h.height, h.width);
    for (int c = 0; c < h.channels; ++c) {
        for (int i = 0; i < h.height; ++i) {
            for (int j = 0; j < h.width; ++j) {
                if (!covered_at_layer.at(i, j)) continue;
                const double v = h.at(c, i, j);
                energy += v * v;
                if (grad) grad->at(c, i, j) = weight * 2.0 * v / n;
            }
        }
    }
    return energy / n;
}

}  // namespace

AdversarialPatch optimize_patch(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                                const AttackConfig& cfg, const AdversarialPatch& initial,
                                std::uint64_t seed) {
    if (images.empty()) throw ConfigError("optimize_patch: empty image set");
    if (cfg.beta < 0.0 || cfg.beta > 1.0)
        throw ConfigError("optimize_patch: beta must be in [0,1]");
    if (cfg.eot_samples < 1) throw ConfigError("optimize_patch: eot_samples must be >= 1");

    Rng rng(derive_seed(seed, 0x88));
    AdversarialPatch patch = initial;
    const int ph = patch.height(), pw = patch.width();

    for (int step = 0; step < cfg.steps; ++step) {
        ActivationTensor grad(3, ph, pw);
        for (int s = 0; s < cfg.eot_samples; ++s) {
            const LabeledFrame& img = images[rng.uniform_index(images.size())];
            const Placement pl = sample_transform(rng, img.image.height, img.image.width,
                                                  cfg.s_min, cfg.s_max);
            PasteResult pasted;
            try {
                pasted = paste_patch(img.image, patch, pl);
            } catch (const PlacementError&) {
                continue;  // degenerate draw; skip it
            }

            GradientTape tape = forward_record(net, pasted.frame);
            ActivationTensor out_grad(net.class_count, img.image.height, img.image.width);
            double ladv = 0.0;
            if (cfg.beta > 0.0)
                ladv = adversarial_grad(tape.activations.back(), img.labels, pasted.covered,
                                        cfg, out_grad);
            if (!std::isfinite(ladv)) throw AttackError("optimize_patch: non-finite loss");

            std::map<int, ActivationTensor> extra;
            if (cfg.beta < 1.0) {
                for (int l : cfg.monitored_layers) {
                    const ActivationTensor& h = tape.activations.at(l);
                    const BinaryMask region = resize_mask(pasted.covered, h.height, h.width);
                    ActivationTensor g;
                    activation_energy_grad(h, region, 1.0 - cfg.beta, &g);
                    if (g.size() > 0) extra.emplace(l, std::move(g));
                }
            }
            backward(net, tape, out_grad, extra.empty() ? nullptr : &extra);

            // Scatter frame-pixel gradients back onto patch pixels through the
            // same nearest-neighbor map used by paste_patch.
            const PasteGeometry g = paste_geometry(patch, pl);
            for (int r = 0; r < g.scaled_h; ++r) {
                const int fy = g.top + r;
                if (fy < 0 || fy >= img.image.height) continue;
                const int py = static_cast<int>(static_cast<long long>(r) * ph / g.scaled_h);
                for (int c = 0; c < g.scaled_w; ++c) {
                    const int fx = g.left + c;
                    if (fx < 0 || fx >= img.image.width) continue;
                    const int px = static_cast<int>(static_cast<long long>(c) * pw / g.scaled_w);
                    for (int ch = 0; ch < 3; ++ch)
                        grad.at(ch, py, px) += tape.input_grad.at(ch, fy, fx);
                }
            }
        }

        for (std::size_t i = 0; i < patch.pixels.data.size(); ++i) {
            const double g = grad.data[i];
            const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
            double v = patch.pixels.data[i] - cfg.step_size * sign;
            patch.pixels.data[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
    }
    return patch;
}

double patch_activation_energy(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                               const AdversarialPatch& patch,
                               const std::vector<Placement>& placements, int layer) {
    if (placements.empty()) throw ConfigError("patch_activation_energy: no placements");
    double total = 0.0;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const LabeledFrame& img = images[i % images.size()];
        const PasteResult pasted = paste_patch(img.image, patch, placements[i]);
        const ActivationTensor h = forward_slice(net, pasted.frame, 0, layer);
        const BinaryMask region = resize_mask(pasted.covered, h.height, h.width);
        total += activation_energy_grad(h, region, 0.0, nullptr);
    }
    return total / static_cast<double>(placements.size());
}

double patch_adversarial_loss(const SlicedNetwork& net, const std::vector<LabeledFrame>& images,
                              const AdversarialPatch& patch,
                              const std::vector<Placement>& placements, const AttackConfig& cfg) {
    if (placements.empty()) throw ConfigError("patch_adversarial_loss: no placements");
    double total = 0.0;
    for (std::size_t i = 0; i < placements.size(); ++i) {
        const LabeledFrame& img = images[i % images.size()];
        const PasteResult pasted = paste_patch(img.image, patch, placements[i]);
        const ActivationTensor out = forward(net, pasted.frame);
        ActivationTensor unused;
        if (cfg.targeted) {
            const std::vector<std::uint8_t> target(img.labels.size(),
                                                   static_cast<std::uint8_t>(cfg.target_class));
            total += softmax_cross_entropy(out, target, unused, &pasted.covered);
        } else {
            total += -softmax_cross_entropy(out, img.labels, unused, &pasted.covered);
        }
    }
    return total / static_cast<double>(placements.size());
}

void save_patch(const AdversarialPatch& patch, const std::string& ppm_path,
                const std::string& meta_path, const AttackConfig& cfg) {
    write_ppm(ppm_path, patch.pixels);
    std::ofstream meta(meta_path);
    if (!meta) throw IoError("cannot open for writing: " + meta_path);
    meta << "height=" << patch.height() << "\n"
         << "width=" << patch.width() << "\n"
         << "beta=" << cfg.beta << "\n"
         << "steps=" << cfg.steps << "\n"
         << "step_size=" << cfg.step_size << "\n"
         << "eot_samples=" << cfg.eot_samples << "\n"
         << "s_min=" << cfg.s_min << "\n"
         << "s_max=" << cfg.s_max << "\n"
         << "targeted=" << (cfg.targeted ? 1 : 0) << "\n"
         << "target_class=" << cfg.target_class << "\n";
    meta << "monitored_layers=";
    for (std::size_t i = 0; i < cfg.monitored_layers.size(); ++i)
        meta << (i ? "," : "") << cfg.monitored_layers[i];
    meta << "\n";
}

AdversarialPatch load_patch(const std::string& ppm_path) {
    AdversarialPatch patch;
    patch.pixels = read_ppm(ppm_path);
    return patch;
}

}  // namespace acat
