#pragma once

#include <string>
#include <utility>
#include <vector>

#include "toposeg/cubical_persistence.hpp"
#include "toposeg/grid_image.hpp"
#include "toposeg/rng.hpp"
#include "toposeg/seg_metrics.hpp"
#include "toposeg/tiny_segmenter.hpp"
#include "toposeg/topo_loss.hpp"

namespace toposeg {

struct TrainConfig {
    int patch = 64;
    int batch = 1;
    int epochs = 100;
    AdamConfig adam;
    double lambda = kDefaultLambda;
    uint64_t seed = 0;
    HomologyDims dims;
    FiltrationKind filtration = FiltrationKind::Superlevel;
    int warmup_epochs = 0;  // epochs trained with plain BCE before the topo term kicks in
    // validation Betti-error sampling
    int betti_patch = 32;
    int betti_n = 50;
    uint64_t betti_seed = 7;
    double bin_threshold = 0.5;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double bce = 0.0;
    double topo = 0.0;
    double total = 0.0;
    MetricReport validation;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;

    /// CSV: epoch,bce,topo,total,accuracy,dice,completeness,correctness,quality,betti_error
    std::string to_csv() const;
};

struct TrainResult {
    TrainHistory history;
    TinySegmenter model;
};

/// Random patch with independent 50% horizontal/vertical flips, applied
/// identically to image and mask. Draw order: corner x, corner y, hflip,
/// vflip.
std::pair<GrayImage, GrayImage> sample_patch(const GrayImage& img, const GrayImage& mask,
                                             int patch, Rng& rng);

/// One `NNN_img.png` / `NNN_mask.png` pair.
struct DatasetEntry {
    std::string image_path;
    std::string mask_path;
};

/// Scans a dataset directory and pairs files by their shared stem; sorted by
/// filename. Throws on unpaired files or an empty directory.
std::vector<DatasetEntry> scan_dataset(const std::string& dir);

/// Full training loop: 80:20 split by sorted filename, one patch per
/// training image per epoch at batch size 1, Adam updates, per-epoch
/// validation metrics. Deterministic given the seed.
TrainResult train(const std::string& dataset_dir, const TrainConfig& cfg);

enum class SynthKind { Rings, Blobs };

/// Writes n synthetic image/mask pairs into dir. Rings: 1-4 bright annuli on
/// a dark background with Gaussian noise (sigma 0.05), mask = the annuli.
/// Blobs: 2-6 dark disks on a light background with 1% salt noise, mask =
/// the disks. Deterministic given the seed.
void synth_dataset(SynthKind kind, int n, int size, uint64_t seed, const std::string& dir);

/// In-memory variant used by tests; returns (image, mask, n_objects) tuples.
struct SynthSample {
    GrayImage image;
    GrayImage mask;
    int n_objects = 0;
};
SynthSample synth_sample(SynthKind kind, int size, Rng& rng);

}  // namespace toposeg
