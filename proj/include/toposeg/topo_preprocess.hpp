#pragma once

#include <utility>

#include "toposeg/cubical_persistence.hpp"
#include "toposeg/grid_image.hpp"

namespace toposeg {

struct PreprocessConfig {
    int smooth_k = 3;       // odd window size; 1 = no smoothing
    int border_d = 2;       // border ring width; 0 = untouched
    FiltrationKind filtration = FiltrationKind::Sublevel;
    bool invert_input = false;  // flip bright-object images to dark-object
    int min_components = 1;
};

/// Integer label per pixel, 0 = background; each nonzero label region is
/// 4-connected and regions are pairwise disjoint.
struct ComponentLabeling {
    int width = 0;
    int height = 0;
    std::vector<uint32_t> labels;
    int n_components = 0;
    int n_significant = 0;   // finite dim-0 lifetimes above the threshold
    double threshold = 0.0;  // selected lifetime threshold
    int dropped = 0;         // diagram points whose seed was already consumed

    uint32_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

/// k x k mean filter with mirror (edge-duplicating reflect) padding.
GrayImage smooth(const GrayImage& img, int k);

/// Pixels with Chebyshev distance < d from the image edge are set to the
/// global minimum; d = 0 is the identity.
GrayImage modify_border(const GrayImage& img, int d);

/// Widest-gap lifetime threshold: sort finite non-essential lifetimes
/// descending, append a 0 sentinel, split at the largest consecutive gap
/// (smallest index on ties) and return the gap midpoint together with the
/// number of lifetimes above it.
std::pair<double, int> select_threshold(const PersistenceDiagram& diagram);

/// Mark significant components: dim-0 points with finite lifetime above the
/// threshold plus the capped essential, processed by decreasing death. Each
/// point floods 4-connected pixels of value < death from its birth pixel;
/// pixels already labeled are skipped. The essential class never dies, so it
/// floods up to the minimum death of the selected points, i.e. its own region
/// just before it first absorbs a significant structure (fallbacks: largest
/// finite dim-0 death, then the cap); flooding to the cap itself would
/// swallow the whole image and consume every other seed.
ComponentLabeling mark_components(const GrayImage& img, const PersistenceDiagram& diagram,
                                  double threshold);

/// Labeled pixels keep their values; every background pixel becomes the
/// inverse-distance-squared weighted mean of the 8 nearest labeled pixels.
GrayImage interpolate_background(const GrayImage& img, const ComponentLabeling& labeling);

/// invert? -> smooth -> modify_border -> persistence (sublevel, cap 1.0) ->
/// select_threshold (dim-0 candidates) -> mark_components ->
/// interpolate_background.
std::pair<GrayImage, ComponentLabeling> preprocess_pipeline(const GrayImage& img,
                                                            const PreprocessConfig& cfg);

}  // namespace toposeg
