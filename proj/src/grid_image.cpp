#include "toposeg/grid_image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace toposeg {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 0 || h < 0) throw std::invalid_argument("negative image dimensions");
    values.assign(static_cast<size_t>(w) * h, fill);
}

GrayImage GrayImage::make(int w, int h, std::vector<double> vals) {
    if (w <= 0 || h <= 0) throw std::invalid_argument("image dimensions must be positive");
    if (vals.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("value count does not match width*height");
    bool in_unit = true;
    for (double v : vals) {
        if (!std::isfinite(v)) throw std::invalid_argument("image values must be finite");
        if (v < 0.0 || v > 1.0) in_unit = false;
    }
    GrayImage img;
    img.width = w;
    img.height = h;
    img.values = std::move(vals);
    img.normalized = in_unit;
    return img;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

GrayImage load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> data;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    if (color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("not grayscale: " + path);
    }
    if (bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        bit_depth = 8;
    }
    if (bit_depth == 16) png_set_swap(png);  // wire format is big-endian
    png_read_update_info(png, info);

    const size_t stride = png_get_rowbytes(png, info);
    data.resize(stride * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = data.data() + y * stride;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        for (png_uint_32 x = 0; x < w; ++x) {
            double raw;
            if (bit_depth == 16) {
                uint16_t px;
                std::memcpy(&px, data.data() + y * stride + 2 * x, 2);
                raw = px;
            } else {
                raw = data[y * stride + x];
            }
            img.at(static_cast<int>(x), static_cast<int>(y)) = raw / maxval;
        }
    }
    img.normalized = true;
    return img;
}

void skip_pgm_junk(std::istream& in) {
    // whitespace and '#' comment lines
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P2" && magic != "P5") throw std::runtime_error("unsupported format: " + path);

    long w = 0, h = 0, maxval = 0;
    for (long* field : {&w, &h, &maxval}) {
        skip_pgm_junk(in);
        if (!(in >> *field)) throw std::runtime_error("malformed PGM header: " + path);
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("malformed PGM header: " + path);

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    const size_t n = img.size();
    if (magic == "P2") {
        for (size_t i = 0; i < n; ++i) {
            long v;
            if (!(in >> v) || v < 0 || v > maxval)
                throw std::runtime_error("malformed PGM data: " + path);
            img.values[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    } else {
        in.get();  // single whitespace after maxval
        if (maxval < 256) {
            std::vector<uint8_t> buf(n);
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
            if (static_cast<size_t>(in.gcount()) != n)
                throw std::runtime_error("truncated PGM data: " + path);
            for (size_t i = 0; i < n; ++i)
                img.values[i] = buf[i] / static_cast<double>(maxval);
        } else {
            std::vector<uint8_t> buf(2 * n);
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(2 * n));
            if (in.gcount() != static_cast<std::streamsize>(2 * n))
                throw std::runtime_error("truncated PGM data: " + path);
            for (size_t i = 0; i < n; ++i) {
                const int v = (buf[2 * i] << 8) | buf[2 * i + 1];  // P5 16-bit samples are big-endian
                img.values[i] = v / static_cast<double>(maxval);
            }
        }
    }
    img.normalized = true;
    return img;
}

}  // namespace

GrayImage load_image(const std::string& path) {
    if (has_png_signature(path)) return load_png(path);
    return load_pgm(path);
}

void save_image(const GrayImage& img, const std::string& path) {
    if (!img.normalized) throw std::invalid_argument("save_image requires a normalized image");
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("empty image");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write file: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_byte> row(static_cast<size_t>(img.width));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // round half-up: 0.5 -> 128
            const double v = img.at(x, y) * 255.0;
            row[static_cast<size_t>(x)] = static_cast<png_byte>(std::floor(v + 0.5));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_label_png(const std::vector<uint32_t>& labels, int width, int height,
                    const std::string& path) {
    if (labels.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("label count does not match dimensions");
    for (uint32_t v : labels)
        if (v > 65535) throw std::invalid_argument("label exceeds 16-bit range");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write file: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_byte> row(static_cast<size_t>(width) * 2);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const uint16_t v = static_cast<uint16_t>(labels[static_cast<size_t>(y) * width + x]);
            row[2 * x] = static_cast<png_byte>(v >> 8);  // big-endian wire format
            row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

BinaryImage binarize(const GrayImage& img, double threshold) {
    BinaryImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) out.bits[i] = img.values[i] >= threshold ? 1 : 0;
    return out;
}

GrayImage invert(const GrayImage& img) {
    if (!img.normalized) throw std::invalid_argument("invert requires a normalized image");
    GrayImage out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) out.values[i] = 1.0 - img.values[i];
    out.normalized = true;
    return out;
}

}  // namespace toposeg
