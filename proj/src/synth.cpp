#include "acat/synth.hpp"

#include <cmath>

#include "acat/errors.hpp"
#include "acat/image_io.hpp"
#include "acat/rng.hpp"

namespace acat {

namespace {

struct Shape {
    int kind;  // 0 = rectangle, 1 = disc
    int cls;
    double cx, cy;   // center at frame 0
    double half_w, half_h, radius;
    double r, g, b;
};

// Distinct base hues per class; background is class 0.
const double kPalette[][3] = {
    {0.20, 0.24, 0.30},  // background
    {0.80, 0.22, 0.20},
    {0.22, 0.72, 0.28},
    {0.85, 0.78, 0.20},
    {0.55, 0.30, 0.75},
    {0.20, 0.65, 0.75},
    {0.85, 0.45, 0.15},
    {0.70, 0.70, 0.70},
};
constexpr int kPaletteSize = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));

std::vector<Shape> make_shapes(const SceneSpec& spec) {
    Rng rng(derive_seed(spec.seed, 0xACE));
    std::vector<Shape> shapes(spec.num_shapes);
    for (int i = 0; i < spec.num_shapes; ++i) {
        Shape& s = shapes[i];
        s.kind = static_cast<int>(rng.uniform_index(2));
        s.cls = 1 + i % (spec.class_count - 1);
        s.cx = rng.uniform(0.0, spec.frame_w);
        s.cy = rng.uniform(0.0, spec.frame_h);
        s.half_w = rng.uniform(0.10, 0.22) * spec.frame_w;
        s.half_h = rng.uniform(0.10, 0.22) * spec.frame_h;
        s.radius = rng.uniform(0.08, 0.18) * spec.frame_h;
        const double* base = kPalette[s.cls % kPaletteSize];
        const double jitter = 0.08;
        s.r = base[0] + rng.uniform(-jitter, jitter);
        s.g = base[1] + rng.uniform(-jitter, jitter);
        s.b = base[2] + rng.uniform(-jitter, jitter);
    }
    return shapes;
}

double wrap(double x, double period) {
    x = std::fmod(x, period);
    return x < 0 ? x + period : x;
}

}  // namespace

LabeledFrame render_frame(const SceneSpec& spec, int frame_index) {
    if (spec.class_count < 2) throw ConfigError("render_frame: need at least 2 classes");
    if (spec.class_count > kPaletteSize)
        throw ConfigError("render_frame: class_count exceeds palette size");

    const auto shapes = make_shapes(spec);
    const int h = spec.frame_h, w = spec.frame_w;

    LabeledFrame out;
    out.image = ActivationTensor(3, h, w);
    out.labels.assign(static_cast<std::size_t>(h) * w, 0);

    const double* bg = kPalette[0];
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            out.image.at(0, i, j) = bg[0];
            out.image.at(1, i, j) = bg[1];
            out.image.at(2, i, j) = bg[2];
        }
    }

    const double shift = spec.scroll_speed * frame_index;
    for (const Shape& s : shapes) {
        const double cx = wrap(s.cx + shift, w);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                // Evaluate against the wrapped center and its two neighbors so
                // shapes re-enter smoothly at the frame edge.
                bool inside = false;
                for (int rep = -1; rep <= 1 && !inside; ++rep) {
                    const double dx = j - (cx + rep * w);
                    const double dy = i - s.cy;
                    if (s.kind == 0)
                        inside = std::abs(dx) <= s.half_w && std::abs(dy) <= s.half_h;
                    else
                        inside = dx * dx + dy * dy <= s.radius * s.radius;
                }
                if (inside) {
                    out.image.at(0, i, j) = s.r;
                    out.image.at(1, i, j) = s.g;
                    out.image.at(2, i, j) = s.b;
                    out.labels[static_cast<std::size_t>(i) * w + j] =
                        static_cast<std::uint8_t>(s.cls);
                }
            }
        }
    }

    if (spec.noise_sigma > 0.0) {
        Rng noise(derive_seed(spec.seed, 0xF00D + static_cast<std::uint64_t>(frame_index)));
        for (double& v : out.image.data) v += spec.noise_sigma * noise.normal();
    }
    // 8-bit grid so disk round-trips are exact.
    for (double& v : out.image.data) v = quantize8(v);
    return out;
}

}  // namespace acat
