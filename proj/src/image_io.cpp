#include "acat/image_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "acat/errors.hpp"

namespace acat {

namespace {

void skip_ws_and_comments(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

int read_pnm_int(std::istream& in, const std::string& path) {
    skip_ws_and_comments(in);
    int v = -1;
    if (!(in >> v) || v < 0) throw FormatError(path + ": bad PNM header field");
    return v;
}

struct PnmHeader {
    int width, height, maxval;
};

PnmHeader read_pnm_header(std::istream& in, const std::string& path, const char* magic) {
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != magic[0] || m1 != magic[1])
        throw FormatError(path + ": expected " + magic + " magic");
    PnmHeader h{};
    h.width = read_pnm_int(in, path);
    h.height = read_pnm_int(in, path);
    h.maxval = read_pnm_int(in, path);
    if (h.maxval != 255) throw FormatError(path + ": only maxval 255 supported");
    in.get();  // single whitespace before raster
    return h;
}

std::uint8_t to_byte(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<std::uint8_t>(v * 255.0 + 0.5);
}

void write_raster(const std::string& path, const std::string& header,
                  const std::vector<std::uint8_t>& raster) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << header;
    out.write(reinterpret_cast<const char*>(raster.data()),
              static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::uint8_t> read_raster(std::istream& in, std::size_t n, const std::string& path) {
    std::vector<std::uint8_t> raster(n);
    in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw FormatError(path + ": truncated raster");
    return raster;
}

}  // namespace

void write_ppm(const std::string& path, const ActivationTensor& image) {
    if (image.channels != 3) throw ConfigError("write_ppm: image must have 3 channels");
    std::ostringstream hdr;
    hdr << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<std::uint8_t> raster;
    raster.reserve(static_cast<std::size_t>(image.height) * image.width * 3);
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j)
            for (int c = 0; c < 3; ++c)
                raster.push_back(to_byte(image.at(c, i, j)));
    write_raster(path, hdr.str(), raster);
}

ActivationTensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    const PnmHeader h = read_pnm_header(in, path, "P6");
    const auto raster =
        read_raster(in, static_cast<std::size_t>(h.height) * h.width * 3, path);
    ActivationTensor img(3, h.height, h.width);
    std::size_t p = 0;
    for (int i = 0; i < h.height; ++i)
        for (int j = 0; j < h.width; ++j)
            for (int c = 0; c < 3; ++c)
                img.at(c, i, j) = raster[p++] / 255.0;
    return img;
}

void write_pgm_mask(const std::string& path, const BinaryMask& mask) {
    std::ostringstream hdr;
    hdr << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<std::uint8_t> raster(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        raster[i] = mask.data[i] ? 255 : 0;
    write_raster(path, hdr.str(), raster);
}

BinaryMask read_pgm_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    const PnmHeader h = read_pnm_header(in, path, "P5");
    const auto raster = read_raster(in, static_cast<std::size_t>(h.height) * h.width, path);
    BinaryMask mask(h.height, h.width);
    for (std::size_t i = 0; i < raster.size(); ++i)
        mask.data[i] = raster[i] >= 128 ? 1 : 0;
    return mask;
}

void write_pgm_labels(const std::string& path, const std::vector<std::uint8_t>& labels,
                      int height, int width) {
    if (labels.size() != static_cast<std::size_t>(height) * width)
        throw ConfigError("write_pgm_labels: label count does not match dims");
    std::ostringstream hdr;
    hdr << "P5\n" << width << " " << height << "\n255\n";
    write_raster(path, hdr.str(), labels);
}

std::vector<std::uint8_t> read_pgm_labels(const std::string& path, int& height, int& width) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    const PnmHeader h = read_pnm_header(in, path, "P5");
    height = h.height;
    width = h.width;
    return read_raster(in, static_cast<std::size_t>(h.height) * h.width, path);
}

void write_heatmap_pgm(const std::string& path, const Heatmap& map) {
    double lo = map.data.empty() ? 0.0 : map.data[0];
    double hi = lo;
    for (double v : map.data) {
        lo = v < lo ? v : lo;
        hi = v > hi ? v : hi;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ostringstream hdr;
    hdr << "P5\n" << map.width << " " << map.height << "\n255\n";
    std::vector<std::uint8_t> raster(map.data.size());
    for (std::size_t i = 0; i < map.data.size(); ++i)
        raster[i] = static_cast<std::uint8_t>((map.data[i] - lo) / span * 255.0 + 0.5);
    write_raster(path, hdr.str(), raster);
}

}  // namespace acat
