#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace acat {

// Rank-3 value (channels x height x width), row-major within each channel.
// Holds both images (3 x H x W, values in [0,1]) and layer features.
struct ActivationTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    ActivationTensor() = default;
    ActivationTensor(int c, int h, int w, double fill = 0.0);

    double& at(int c, int i, int j) {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    double at(int c, int i, int j) const {
        return data[(static_cast<std::size_t>(c) * height + i) * width + j];
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const ActivationTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Spatial map at one layer's resolution.
struct Heatmap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Heatmap() = default;
    Heatmap(int h, int w, double fill = 0.0);

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }
};

// H x W {0,1} map. The defense convention follows the paper: 0 marks
// adversarial pixels, 1 marks clean ones. Some call sites instead carry an
// adversarial-indicator map (1 = adversarial); each such site says so.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0);

    std::uint8_t& at(int i, int j) { return data[static_cast<std::size_t>(i) * width + j]; }
    std::uint8_t at(int i, int j) const { return data[static_cast<std::size_t>(i) * width + j]; }

    BinaryMask complement() const;
    long count_ones() const;
    long count_zeros() const;
    bool operator==(const BinaryMask& o) const = default;
};

// Rank-4 convolution weights [outC x inC x kH x kW].
struct ConvKernel {
    int out_c = 0;
    int in_c = 0;
    int kh = 0;
    int kw = 0;
    std::vector<double> w;

    ConvKernel() = default;
    ConvKernel(int oc, int ic, int h, int w_, double fill = 0.0);

    double& at(int oc, int ic, int y, int x) {
        return w[((static_cast<std::size_t>(oc) * in_c + ic) * kh + y) * kw + x];
    }
    double at(int oc, int ic, int y, int x) const {
        return w[((static_cast<std::size_t>(oc) * in_c + ic) * kh + y) * kw + x];
    }
};

// Cross-correlation with zero padding.
// out dims = floor((in + 2*padding - k) / stride) + 1.
ActivationTensor conv2d(const ActivationTensor& input, const ConvKernel& kernel,
                        const std::vector<double>& bias, int stride, int padding);

// Separable normalized Gaussian blur, replicate-edge padding.
// sigma defaults to kernel_size / 4; pass sigma_override > 0 to change it.
Heatmap gaussian_filter(const Heatmap& map, int kernel_size, double sigma_override = 0.0);

// Dilates an adversarial-indicator map (input 1 = adversarial): convolve with
// a kernel_size^2 all-ones kernel (zero padding) and mark 1 where the sum
// exceeds bin_threshold. Output 1 = excluded. With normalized = true the
// kernel is averaged instead (the paper's alternative reading).
BinaryMask expand_mask(const BinaryMask& adversarial_region, int kernel_size,
                       double bin_threshold = 0.5, bool normalized = false);

// Nearest-neighbor resize; src index = floor(dst * src_dim / dst_dim).
BinaryMask resize_mask(const BinaryMask& mask, int target_h, int target_w);

// Linear-interpolation percentile, v in [0, 100]. Copies and sorts.
double percentile(std::vector<double> values, double v);

// Multiplies every channel elementwise by the mask (broadcast over channels).
ActivationTensor spatial_mask_apply(const ActivationTensor& features, const BinaryMask& mask);

// Throws DataError if any value is NaN/Inf.
void check_finite(const ActivationTensor& t, const char* what);

}  // namespace acat
