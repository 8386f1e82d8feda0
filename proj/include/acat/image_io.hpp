#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acat/tensor.hpp"

namespace acat {

// Binary PPM (P6, 8-bit RGB). Images are 3 x H x W tensors in [0,1];
// pixel values map linearly, quantized with round(v * 255).
void write_ppm(const std::string& path, const ActivationTensor& image);
ActivationTensor read_ppm(const std::string& path);

// Binary PGM (P5, 8-bit) defense masks: 0 = adversarial, 255 = clean.
// The in-memory mask uses the paper convention (0 = adversarial).
void write_pgm_mask(const std::string& path, const BinaryMask& mask);
BinaryMask read_pgm_mask(const std::string& path);

// Raw 8-bit class-index maps (one class id per pixel).
void write_pgm_labels(const std::string& path, const std::vector<std::uint8_t>& labels,
                      int height, int width);
std::vector<std::uint8_t> read_pgm_labels(const std::string& path, int& height, int& width);

// Debug export: heatmap min-max scaled to [0,255].
void write_heatmap_pgm(const std::string& path, const Heatmap& map);

// Quantize a [0,1] value onto the 8-bit grid used by the PPM writer, so that
// in-memory tensors round-trip through disk exactly.
inline double quantize8(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<double>(static_cast<int>(v * 255.0 + 0.5)) / 255.0;
}

}  // namespace acat
