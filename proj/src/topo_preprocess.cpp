#include "toposeg/topo_preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace toposeg {

namespace {

// scipy-style reflect: index -1 maps to 0, index n maps to n-1.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

GrayImage smooth(const GrayImage& img, int k) {
    if (k < 1 || k % 2 == 0) throw std::invalid_argument("smooth: window size must be odd");
    if (k == 1) return img;
    const int r = k / 2;
    const int w = img.width, h = img.height;
    GrayImage out(w, h);
    const double window = static_cast<double>(k) * k;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = reflect_index(y + dy, h);
                for (int dx = -r; dx <= r; ++dx) sum += img.at(reflect_index(x + dx, w), yy);
            }
            out.at(x, y) = sum / window;
        }
    }
    out.normalized = img.normalized;
    return out;
}

GrayImage modify_border(const GrayImage& img, int d) {
    if (d < 0) throw std::invalid_argument("modify_border: d must be nonnegative");
    if (d == 0) return img;
    if (2 * d >= std::min(img.width, img.height))
        throw std::invalid_argument("modify_border: no interior remains");
    const double lo = *std::min_element(img.values.begin(), img.values.end());
    GrayImage out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int edge_dist = std::min(std::min(x, img.width - 1 - x),
                                           std::min(y, img.height - 1 - y));
            if (edge_dist < d) out.at(x, y) = lo;
        }
    }
    return out;
}

std::pair<double, int> select_threshold(const PersistenceDiagram& diagram) {
    std::vector<double> lifetimes;
    for (const auto& p : diagram.points)
        if (!p.essential && !std::isinf(p.death)) lifetimes.push_back(p.lifetime());
    if (lifetimes.empty())
        throw std::invalid_argument("select_threshold: no finite-lifetime points");
    std::sort(lifetimes.begin(), lifetimes.end(), std::greater<>());
    lifetimes.push_back(0.0);  // sentinel

    size_t best = 0;
    double best_gap = -1.0;
    for (size_t i = 0; i + 1 < lifetimes.size(); ++i) {
        const double gap = lifetimes[i] - lifetimes[i + 1];
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    const double threshold = 0.5 * (lifetimes[best] + lifetimes[best + 1]);
    return {threshold, static_cast<int>(best) + 1};
}

ComponentLabeling mark_components(const GrayImage& img, const PersistenceDiagram& diagram,
                                  double threshold) {
    if (threshold <= 0.0) throw std::invalid_argument("mark_components: threshold must be > 0");
    if (!diagram.essential_cap)
        throw std::invalid_argument("mark_components: diagram must have capped essentials");

    // Flood bound for the never-dying essential: the level just before it
    // first absorbs a selected component (their minimum death). Without
    // selected points fall back to the latest finite dim-0 death, and for a
    // featureless diagram to the cap. Bounding by later deaths would let the
    // essential climb over the background plateau and swallow every seed.
    double max_finite = 0.0, min_selected = 0.0;
    bool any_finite = false, any_selected = false;
    for (const auto& p : diagram.points) {
        if (p.dim != 0 || p.essential || std::isinf(p.death)) continue;
        max_finite = any_finite ? std::max(max_finite, p.death) : p.death;
        any_finite = true;
        if (p.lifetime() > threshold) {
            min_selected = any_selected ? std::min(min_selected, p.death) : p.death;
            any_selected = true;
        }
    }
    const double essential_bound = any_selected ? min_selected
                                   : any_finite ? max_finite
                                                : *diagram.essential_cap;

    struct Seedpoint {
        double sort_death;   // ordering key
        double flood_bound;  // strict upper bound for member values
        PixelCoord seed;
    };
    std::vector<Seedpoint> seeds;
    int n_significant = 0;
    for (const auto& p : diagram.points) {
        if (p.dim != 0) continue;
        if (p.essential) {
            seeds.push_back({p.death, essential_bound, p.birth_pixel});
        } else if (p.lifetime() > threshold) {
            seeds.push_back({p.death, p.death, p.birth_pixel});
            ++n_significant;
        }
    }
    std::sort(seeds.begin(), seeds.end(), [](const Seedpoint& a, const Seedpoint& b) {
        if (a.sort_death != b.sort_death) return a.sort_death > b.sort_death;
        if (a.seed.y != b.seed.y) return a.seed.y < b.seed.y;
        return a.seed.x < b.seed.x;
    });

    ComponentLabeling out;
    out.width = img.width;
    out.height = img.height;
    out.threshold = threshold;
    out.n_significant = n_significant;
    out.labels.assign(img.size(), 0);

    const int w = img.width, h = img.height;
    std::vector<uint8_t> seen(img.size());
    std::vector<int> stack;
    const int dx[4] = {-1, 1, 0, 0};
    const int dy[4] = {0, 0, -1, 1};

    for (const auto& sp : seeds) {
        const int seed_idx = sp.seed.y * w + sp.seed.x;
        if (out.labels[seed_idx] != 0 || img.values[seed_idx] >= sp.flood_bound) {
            ++out.dropped;
            continue;
        }
        const uint32_t label = static_cast<uint32_t>(++out.n_components);
        std::fill(seen.begin(), seen.end(), 0);
        stack.clear();
        stack.push_back(seed_idx);
        seen[seed_idx] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            if (out.labels[p] == 0) out.labels[p] = label;
            const int px = p % w, py = p / w;
            for (int k = 0; k < 4; ++k) {
                const int qx = px + dx[k], qy = py + dy[k];
                if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
                const int q = qy * w + qx;
                if (seen[q] || img.values[q] >= sp.flood_bound) continue;
                seen[q] = 1;
                stack.push_back(q);
            }
        }
    }
    return out;
}

namespace {

struct LabeledPixel {
    int x, y;
    double value;
};

}  // namespace

GrayImage interpolate_background(const GrayImage& img, const ComponentLabeling& labeling) {
    if (img.width != labeling.width || img.height != labeling.height)
        throw std::invalid_argument("interpolate_background: dimension mismatch");

    std::vector<LabeledPixel> sources;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (labeling.at(x, y) != 0) sources.push_back({x, y, img.at(x, y)});
    if (sources.empty()) return img;

    // Bucket the labeled pixels on a coarse grid and search expanding rings
    // of buckets until the K nearest are certain.
    const int cell = 8;
    const int gw = (img.width + cell - 1) / cell;
    const int gh = (img.height + cell - 1) / cell;
    std::vector<std::vector<int>> buckets(static_cast<size_t>(gw) * gh);
    for (size_t i = 0; i < sources.size(); ++i)
        buckets[static_cast<size_t>(sources[i].y / cell) * gw + sources[i].x / cell].push_back(
            static_cast<int>(i));

    // Chebyshev distance from each cell to the nearest non-empty cell, so a
    // pixel's ring search can start where candidates first appear instead of
    // sweeping empty rings.
    std::vector<int> cell_dist(buckets.size(), -1);
    {
        std::vector<int> frontier;
        for (size_t c = 0; c < buckets.size(); ++c)
            if (!buckets[c].empty()) {
                cell_dist[c] = 0;
                frontier.push_back(static_cast<int>(c));
            }
        std::vector<int> next;
        for (int d = 1; !frontier.empty(); ++d) {
            next.clear();
            for (int c : frontier) {
                const int cx = c % gw, cy = c / gw;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || nx >= gw || ny < 0 || ny >= gh) continue;
                        const int nc = ny * gw + nx;
                        if (cell_dist[nc] < 0) {
                            cell_dist[nc] = d;
                            next.push_back(nc);
                        }
                    }
                }
            }
            frontier.swap(next);
        }
    }

    const size_t k_nearest = std::min<size_t>(8, sources.size());
    GrayImage out = img;

    struct Candidate {
        double d2;
        int idx;
    };
    // ties at equal distance resolve row-major for determinism
    auto closer = [&](const Candidate& a, const Candidate& b) {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        if (sources[a.idx].y != sources[b.idx].y) return sources[a.idx].y < sources[b.idx].y;
        return sources[a.idx].x < sources[b.idx].x;
    };
    std::vector<Candidate> best(k_nearest);

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (labeling.at(x, y) != 0) continue;
            size_t kept = 0;
            auto offer = [&](Candidate c) {
                if (kept < k_nearest) {
                    size_t i = kept++;
                    while (i > 0 && closer(c, best[i - 1])) {
                        best[i] = best[i - 1];
                        --i;
                    }
                    best[i] = c;
                } else if (closer(c, best[k_nearest - 1])) {
                    size_t i = k_nearest - 1;
                    while (i > 0 && closer(c, best[i - 1])) {
                        best[i] = best[i - 1];
                        --i;
                    }
                    best[i] = c;
                }
            };
            const int cgx = x / cell, cgy = y / cell;
            const int max_ring = std::max(gw, gh);
            const int first_ring = cell_dist[static_cast<size_t>(cgy) * gw + cgx];
            for (int ring = first_ring; ring <= max_ring; ++ring) {
                // cells at Chebyshev ring distance `ring`
                for (int gy = cgy - ring; gy <= cgy + ring; ++gy) {
                    if (gy < 0 || gy >= gh) continue;
                    for (int gx = cgx - ring; gx <= cgx + ring; ++gx) {
                        if (gx < 0 || gx >= gw) continue;
                        if (std::max(std::abs(gx - cgx), std::abs(gy - cgy)) != ring) continue;
                        for (int si : buckets[static_cast<size_t>(gy) * gw + gx]) {
                            const double ddx = sources[si].x - x, ddy = sources[si].y - y;
                            offer({ddx * ddx + ddy * ddy, si});
                        }
                    }
                }
                if (kept == k_nearest) {
                    // Sources in rings beyond this one are at least
                    // (ring*cell - cell + 1) away in one axis; stop once that
                    // floor exceeds the current k-th distance.
                    const double floor_dist = static_cast<double>(ring) * cell - cell + 1;
                    if (floor_dist > 0 && floor_dist * floor_dist > best[k_nearest - 1].d2)
                        break;
                }
            }
            double wsum = 0.0, vsum = 0.0;
            for (size_t i = 0; i < kept; ++i) {
                const double wgt = 1.0 / best[i].d2;
                wsum += wgt;
                vsum += wgt * sources[best[i].idx].value;
            }
            out.at(x, y) = vsum / wsum;
        }
    }
    return out;
}

std::pair<GrayImage, ComponentLabeling> preprocess_pipeline(const GrayImage& img,
                                                            const PreprocessConfig& cfg) {
    GrayImage work = img;
    // Superlevel analysis of bright structures is realized as a single
    // inversion in front of the sublevel machinery.
    if (cfg.invert_input != (cfg.filtration == FiltrationKind::Superlevel)) work = invert(work);
    work = smooth(work, cfg.smooth_k);
    work = modify_border(work, cfg.border_d);

    const auto full = compute_persistence(work, FiltrationKind::Sublevel, 1.0);
    PersistenceDiagram dim0 = full;
    std::erase_if(dim0.points, [](const PersistencePoint& p) { return p.dim != 0; });

    auto [threshold, n_significant] = select_threshold(dim0);
    (void)n_significant;
    ComponentLabeling labeling = mark_components(work, dim0, threshold);
    GrayImage processed = interpolate_background(work, labeling);
    return {std::move(processed), std::move(labeling)};
}

}  // namespace toposeg
