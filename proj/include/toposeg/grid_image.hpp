#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace toposeg {

/// 2D grayscale image, row-major, origin top-left, (x, y) = (column, row).
/// Values are 64-bit reals; images loaded from files are normalized to [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // size == width * height
    bool normalized = false;     // when set, every value lies in [0, 1]

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);

    // Validates finiteness and derives the normalized flag from the data.
    static GrayImage make(int w, int h, std::vector<double> vals);

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
    bool same_shape(const GrayImage& o) const { return width == o.width && height == o.height; }
};

/// Thresholded mask companion to GrayImage.
struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;  // 0 or 1, row-major

    BinaryImage() = default;
    BinaryImage(int w, int h, bool fill = false) : width(w), height(h) {
        if (w < 0 || h < 0) throw std::invalid_argument("negative image dimensions");
        bits.assign(static_cast<size_t>(w) * h, fill ? 1 : 0);
    }

    bool at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t size() const { return bits.size(); }
};

/// Reads an 8- or 16-bit grayscale PNG or PGM (P2/P5) and scales values to
/// [0, 1] by the format maximum. Rejects multi-channel images.
GrayImage load_image(const std::string& path);

/// Writes an 8-bit grayscale PNG; value v is stored as round(v * 255),
/// half-up. Requires a normalized image.
void save_image(const GrayImage& img, const std::string& path);

/// Writes raw 16-bit grayscale PNG from integer labels (no scaling).
void save_label_png(const std::vector<uint32_t>& labels, int width, int height,
                    const std::string& path);

/// bit = (value >= threshold)
BinaryImage binarize(const GrayImage& img, double threshold);

/// v -> 1 - v. Requires a normalized image.
GrayImage invert(const GrayImage& img);

}  // namespace toposeg
