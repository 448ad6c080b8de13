#include "toposeg/tiny_segmenter.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace toposeg {

namespace {

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TinySegmenter TinySegmenter::random_init(Rng& rng) {
    TinySegmenter model;
    for (double& p : model.params_) p = rng.uniform() * 0.2 - 0.1;
    return model;
}

void TinySegmenter::conv_hidden(const GrayImage& img, std::vector<double>& z1) const {
    const int w = img.width, h = img.height;
    const int r = kKernel / 2;
    z1.assign(static_cast<size_t>(kFilters) * w * h, 0.0);
    for (int f = 0; f < kFilters; ++f) {
        const double* wf = w1() + f * kKernel * kKernel;
        double* zf = z1.data() + static_cast<size_t>(f) * w * h;
        const double bias = b1()[f];
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = bias;
                for (int ky = 0; ky < kKernel; ++ky) {
                    const int yy = reflect_index(y + ky - r, h);
                    for (int kx = 0; kx < kKernel; ++kx)
                        acc += wf[ky * kKernel + kx] * img.at(reflect_index(x + kx - r, w), yy);
                }
                zf[y * w + x] = acc;
            }
        }
    }
}

GrayImage TinySegmenter::forward(const GrayImage& img) const {
    if (!img.normalized) throw std::invalid_argument("forward: input must be normalized");
    const int w = img.width, h = img.height;
    std::vector<double> z1;
    conv_hidden(img, z1);
    GrayImage out(w, h);
    for (int i = 0; i < w * h; ++i) {
        double acc = b2();
        for (int f = 0; f < kFilters; ++f) {
            const double z = z1[static_cast<size_t>(f) * w * h + i];
            if (z > 0.0) acc += w2()[f] * z;
        }
        out.values[i] = logistic(acc);
    }
    out.normalized = true;
    return out;
}

std::array<double, TinySegmenter::kParamCount> TinySegmenter::backward(
    const GrayImage& img, const GrayImage& grad_f) const {
    if (!img.same_shape(grad_f)) throw std::invalid_argument("backward: dimension mismatch");
    const int w = img.width, h = img.height;
    const int r = kKernel / 2;

    std::vector<double> z1;
    conv_hidden(img, z1);

    // dL/dz2 = grad_f * sigma'(z2) with sigma' = f(1-f)
    std::vector<double> dz2(static_cast<size_t>(w) * h);
    for (int i = 0; i < w * h; ++i) {
        double acc = b2();
        for (int f = 0; f < kFilters; ++f) {
            const double z = z1[static_cast<size_t>(f) * w * h + i];
            if (z > 0.0) acc += w2()[f] * z;
        }
        const double fv = logistic(acc);
        dz2[i] = grad_f.values[i] * fv * (1.0 - fv);
    }

    std::array<double, kParamCount> grads{};
    double* gw1 = grads.data();
    double* gb1 = grads.data() + kFilters * kKernel * kKernel;
    double* gw2 = gb1 + kFilters;
    double* gb2 = gw2 + kFilters;

    for (int i = 0; i < w * h; ++i) *gb2 += dz2[i];

    for (int f = 0; f < kFilters; ++f) {
        const double* zf = z1.data() + static_cast<size_t>(f) * w * h;
        const double wf2 = w2()[f];
        double* gwf = gw1 + f * kKernel * kKernel;
        double gw2f = 0.0, gb1f = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int i = y * w + x;
                const double z = zf[i];
                if (z <= 0.0) continue;  // rectifier gate
                gw2f += dz2[i] * z;
                const double dz1 = dz2[i] * wf2;
                gb1f += dz1;
                for (int ky = 0; ky < kKernel; ++ky) {
                    const int yy = reflect_index(y + ky - r, h);
                    for (int kx = 0; kx < kKernel; ++kx)
                        gwf[ky * kKernel + kx] +=
                            dz1 * img.at(reflect_index(x + kx - r, w), yy);
                }
            }
        }
        gw2[f] = gw2f;
        gb1[f] = gb1f;
    }
    return grads;
}

namespace {

constexpr char kMagic[4] = {'T', 'S', 'E', 'G'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

}  // namespace

void TinySegmenter::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(kMagic, 4);
    write_pod<uint16_t>(out, 1);  // version
    write_pod<uint16_t>(out, kFilters);
    write_pod<uint16_t>(out, kKernel);
    write_pod<uint16_t>(out, 1);  // input channels
    write_pod<uint32_t>(out, kParamCount);
    for (double p : params_) write_pod(out, p);
    if (!out) throw std::runtime_error("write failed: " + path);
}

TinySegmenter TinySegmenter::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a model checkpoint: " + path);
    const auto version = read_pod<uint16_t>(in);
    const auto filters = read_pod<uint16_t>(in);
    const auto kernel = read_pod<uint16_t>(in);
    const auto channels = read_pod<uint16_t>(in);
    const auto count = read_pod<uint32_t>(in);
    if (version != 1 || filters != kFilters || kernel != kKernel || channels != 1 ||
        count != kParamCount)
        throw std::runtime_error("incompatible checkpoint layout: " + path);
    TinySegmenter model;
    for (double& p : model.params_) p = read_pod<double>(in);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return model;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               long long t, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace toposeg
