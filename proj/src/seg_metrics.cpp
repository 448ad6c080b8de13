#include "toposeg/seg_metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "toposeg/cubical_persistence.hpp"
#include "toposeg/rng.hpp"

namespace toposeg {

ConfusionCounts confusion(const BinaryImage& pred, const BinaryImage& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw std::invalid_argument("confusion: dimension mismatch");
    ConfusionCounts c;
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.bits[i] != 0, g = gt.bits[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

namespace {

double safe_ratio(long long num, long long den, int& degenerate) {
    if (den == 0) {
        ++degenerate;
        return 1.0;  // perfect-empty convention
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

RatioMetrics ratio_metrics(const ConfusionCounts& c) {
    RatioMetrics m;
    m.accuracy = safe_ratio(c.tp + c.tn, c.total(), m.degenerate_forms);
    m.dice = safe_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, m.degenerate_forms);
    m.completeness = safe_ratio(c.tp, c.tp + c.fn, m.degenerate_forms);
    m.correctness = safe_ratio(c.tp, c.tp + c.fp, m.degenerate_forms);
    m.quality = safe_ratio(c.tp, c.tp + c.fp + c.fn, m.degenerate_forms);
    return m;
}

double betti_error(const GrayImage& pred, const GrayImage& gt, int patch, int n, uint64_t seed,
                   double bin_threshold) {
    if (!pred.same_shape(gt)) throw std::invalid_argument("betti_error: dimension mismatch");
    if (patch <= 0 || patch > std::min(pred.width, pred.height))
        throw std::invalid_argument("betti_error: patch larger than image");
    if (n < 1) throw std::invalid_argument("betti_error: need at least one patch");

    Rng rng(seed);
    const int max_x = pred.width - patch;
    const int max_y = pred.height - patch;

    auto patch_betti = [&](const GrayImage& img, int cx, int cy) {
        BinaryImage mask(patch, patch);
        for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x)
                mask.set(x, y, img.at(cx + x, cy + y) >= bin_threshold);
        return betti_numbers(mask);
    };

    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const int cx = static_cast<int>(rng.below(static_cast<uint64_t>(max_x) + 1));
        const int cy = static_cast<int>(rng.below(static_cast<uint64_t>(max_y) + 1));
        const BettiPair bp = patch_betti(pred, cx, cy);
        const BettiPair bg = patch_betti(gt, cx, cy);
        sum += std::abs(bp.beta0 - bg.beta0) + std::abs(bp.beta1 - bg.beta1);
    }
    return sum / n;
}

MetricReport evaluate(const GrayImage& pred, const GrayImage& gt, int patch, int n, uint64_t seed,
                      double bin_threshold) {
    MetricReport r;
    const RatioMetrics m = ratio_metrics(confusion(binarize(pred, bin_threshold),
                                                   binarize(gt, bin_threshold)));
    r.accuracy = m.accuracy;
    r.dice = m.dice;
    r.completeness = m.completeness;
    r.correctness = m.correctness;
    r.quality = m.quality;
    r.degenerate_forms = m.degenerate_forms;
    r.betti_error = betti_error(pred, gt, patch, n, seed, bin_threshold);
    r.betti_patch_size = patch;
    r.betti_n_patches = n;
    r.rng_seed = seed;
    return r;
}

}  // namespace toposeg
