#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "toposeg/grid_image.hpp"
#include "toposeg/rng.hpp"

namespace toposeg {

/// Two-layer convolutional segmenter: 8 filters of 5x5 with rectifier, then
/// a 1x1 combination with logistic output. Same-size output via mirror
/// padding, so the likelihood map matches the input dimensions and lies in
/// (0, 1). Parameters flatten (conv1 weights, conv1 bias, conv2 weights,
/// conv2 bias) in that order.
class TinySegmenter {
public:
    static constexpr int kFilters = 8;
    static constexpr int kKernel = 5;
    static constexpr int kParamCount = kFilters * kKernel * kKernel + kFilters + kFilters + 1;

    TinySegmenter() : params_{} {}

    /// Uniform init in [-0.1, 0.1].
    static TinySegmenter random_init(Rng& rng);

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }

    GrayImage forward(const GrayImage& img) const;

    /// Gradient of sum(grad_f . f) with respect to every parameter.
    std::array<double, kParamCount> backward(const GrayImage& img, const GrayImage& grad_f) const;

    void save(const std::string& path) const;
    static TinySegmenter load(const std::string& path);

private:
    // layout: w1[f*25 + ky*5 + kx], b1[f], w2[f], b2
    std::array<double, kParamCount> params_;

    const double* w1() const { return params_.data(); }
    const double* b1() const { return params_.data() + kFilters * kKernel * kKernel; }
    const double* w2() const { return b1() + kFilters; }
    double b2() const { return *(w2() + kFilters); }

    void conv_hidden(const GrayImage& img, std::vector<double>& z1) const;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// Standard Adam update with bias correction; t is the 1-based step index.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               long long t, const AdamConfig& cfg);

}  // namespace toposeg
