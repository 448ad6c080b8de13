#pragma once

#include <cstdint>

#include "toposeg/grid_image.hpp"

namespace toposeg {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    long long total() const { return tp + fp + fn + tn; }
};

struct RatioMetrics {
    double accuracy = 0.0;
    double dice = 0.0;
    double completeness = 0.0;  // recall
    double correctness = 0.0;   // precision
    double quality = 0.0;
    int degenerate_forms = 0;  // how many 0/0 ratios evaluated to 1
};

struct MetricReport {
    double accuracy = 0.0;
    double dice = 0.0;
    double completeness = 0.0;
    double correctness = 0.0;
    double quality = 0.0;
    double betti_error = 0.0;
    int betti_patch_size = 64;
    int betti_n_patches = 100;
    uint64_t rng_seed = 0;
    int degenerate_forms = 0;
};

ConfusionCounts confusion(const BinaryImage& pred, const BinaryImage& gt);

/// accuracy, dice, completeness=TP/(TP+FN), correctness=TP/(TP+FP),
/// quality=TP/(TP+FP+FN); every 0/0 form evaluates to 1.
RatioMetrics ratio_metrics(const ConfusionCounts& c);

/// Mean over n seeded random patches of |d beta0| + |d beta1| between the
/// binarized prediction and ground truth; the same corners are used for both.
double betti_error(const GrayImage& pred, const GrayImage& gt, int patch, int n, uint64_t seed,
                   double bin_threshold);

/// Convenience bundle: ratio metrics at bin_threshold plus the Betti error.
MetricReport evaluate(const GrayImage& pred, const GrayImage& gt, int patch, int n, uint64_t seed,
                      double bin_threshold);

}  // namespace toposeg
