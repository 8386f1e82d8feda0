#include "acat/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "acat/errors.hpp"

namespace acat {

ActivationTensor::ActivationTensor(int c, int h, int w, double fill)
    : channels(c), height(h), width(w),
      data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c < 0 || h < 0 || w < 0)
        throw ConfigError("ActivationTensor: negative dimension");
}

Heatmap::Heatmap(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

BinaryMask::BinaryMask(int h, int w, std::uint8_t fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

BinaryMask BinaryMask::complement() const {
    BinaryMask out(height, width);
    for (std::size_t i = 0; i < data.size(); ++i)
        out.data[i] = static_cast<std::uint8_t>(1 - data[i]);
    return out;
}

long BinaryMask::count_ones() const {
    long n = 0;
    for (std::uint8_t v : data) n += v;
    return n;
}

long BinaryMask::count_zeros() const {
    return static_cast<long>(data.size()) - count_ones();
}

ConvKernel::ConvKernel(int oc, int ic, int h, int w_, double fill)
    : out_c(oc), in_c(ic), kh(h), kw(w_),
      w(static_cast<std::size_t>(oc) * ic * h * w_, fill) {}

ActivationTensor conv2d(const ActivationTensor& input, const ConvKernel& kernel,
                        const std::vector<double>& bias, int stride, int padding) {
    if (kernel.in_c != input.channels)
        throw ConfigError("conv2d: kernel expects " + std::to_string(kernel.in_c) +
                          " input channels, got " + std::to_string(input.channels));
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
    if (static_cast<int>(bias.size()) != kernel.out_c)
        throw ConfigError("conv2d: bias size does not match output channels");

    const int out_h = (input.height + 2 * padding - kernel.kh) / stride + 1;
    const int out_w = (input.width + 2 * padding - kernel.kw) / stride + 1;
    if (input.height + 2 * padding < kernel.kh || input.width + 2 * padding < kernel.kw ||
        out_h < 1 || out_w < 1)
        throw ConfigError("conv2d: output dimensions would be empty");

    ActivationTensor out(kernel.out_c, out_h, out_w);
    for (int oc = 0; oc < kernel.out_c; ++oc) {
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double acc = bias[oc];
                const int base_y = oy * stride - padding;
                const int base_x = ox * stride - padding;
                for (int ic = 0; ic < kernel.in_c; ++ic) {
                    for (int ky = 0; ky < kernel.kh; ++ky) {
                        const int iy = base_y + ky;
                        if (iy < 0 || iy >= input.height) continue;
                        for (int kx = 0; kx < kernel.kw; ++kx) {
                            const int ix = base_x + kx;
                            if (ix < 0 || ix >= input.width) continue;
                            acc += kernel.at(oc, ic, ky, kx) * input.at(ic, iy, ix);
                        }
                    }
                }
                out.at(oc, oy, ox) = acc;
            }
        }
    }
    check_finite(out, "conv2d");
    return out;
}

namespace {

std::vector<double> gaussian_weights(int kernel_size, double sigma) {
    std::vector<double> w(kernel_size);
    const double c = (kernel_size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < kernel_size; ++i) {
        const double d = i - c;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

Heatmap gaussian_filter(const Heatmap& map, int kernel_size, double sigma_override) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("gaussian_filter: kernel_size must be odd and >= 1, got " +
                          std::to_string(kernel_size));
    if (kernel_size == 1) return map;

    const double sigma = sigma_override > 0.0 ? sigma_override : kernel_size / 4.0;
    const std::vector<double> w = gaussian_weights(kernel_size, sigma);
    const int r = kernel_size / 2;
    const int h = map.height, wd = map.width;

    Heatmap tmp(h, wd);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int jj = std::clamp(j + k, 0, wd - 1);
                acc += w[k + r] * map.at(i, jj);
            }
            tmp.at(i, j) = acc;
        }
    }
    Heatmap out(h, wd);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < wd; ++j) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int ii = std::clamp(i + k, 0, h - 1);
                acc += w[k + r] * tmp.at(ii, j);
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

BinaryMask expand_mask(const BinaryMask& adversarial_region, int kernel_size,
                       double bin_threshold, bool normalized) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw ConfigError("expand_mask: kernel_size must be odd and >= 1, got " +
                          std::to_string(kernel_size));
    const int r = kernel_size / 2;
    const int h = adversarial_region.height, w = adversarial_region.width;
    const double norm = normalized ? 1.0 / (kernel_size * kernel_size) : 1.0;

    BinaryMask out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int di = -r; di <= r; ++di) {
                const int ii = i + di;
                if (ii < 0 || ii >= h) continue;
                for (int dj = -r; dj <= r; ++dj) {
                    const int jj = j + dj;
                    if (jj < 0 || jj >= w) continue;
                    acc += adversarial_region.at(ii, jj);
                }
            }
            out.at(i, j) = acc * norm > bin_threshold ? 1 : 0;
        }
    }
    return out;
}

BinaryMask resize_mask(const BinaryMask& mask, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1)
        throw ConfigError("resize_mask: target dims must be >= 1");
    BinaryMask out(target_h, target_w);
    for (int i = 0; i < target_h; ++i) {
        const int si = static_cast<int>(static_cast<long long>(i) * mask.height / target_h);
        for (int j = 0; j < target_w; ++j) {
            const int sj = static_cast<int>(static_cast<long long>(j) * mask.width / target_w);
            out.at(i, j) = mask.at(si, sj);
        }
    }
    return out;
}

double percentile(std::vector<double> values, double v) {
    if (values.empty()) throw DataError("percentile: empty sequence");
    std::sort(values.begin(), values.end());
    const double p = (values.size() - 1) * v / 100.0;
    const std::size_t lo = static_cast<std::size_t>(std::floor(p));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(p));
    if (lo == hi) return values[lo];
    const double frac = p - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ActivationTensor spatial_mask_apply(const ActivationTensor& features, const BinaryMask& mask) {
    if (mask.height != features.height || mask.width != features.width)
        throw ConfigError("spatial_mask_apply: mask dims do not match features");
    ActivationTensor out = features;
    for (int c = 0; c < out.channels; ++c)
        for (int i = 0; i < out.height; ++i)
            for (int j = 0; j < out.width; ++j)
                out.at(c, i, j) *= mask.at(i, j);
    return out;
}

void check_finite(const ActivationTensor& t, const char* what) {
    for (double v : t.data)
        if (!std::isfinite(v))
            throw DataError(std::string(what) + ": non-finite value");
}

}  // namespace acat
