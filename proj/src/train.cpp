#include "toposeg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace toposeg {

namespace {

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string TrainHistory::to_csv() const {
    std::ostringstream out;
    out << "epoch,bce,topo,total,accuracy,dice,completeness,correctness,quality,betti_error\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << fmt9(e.bce) << ',' << fmt9(e.topo) << ',' << fmt9(e.total) << ','
            << fmt9(e.validation.accuracy) << ',' << fmt9(e.validation.dice) << ','
            << fmt9(e.validation.completeness) << ',' << fmt9(e.validation.correctness) << ','
            << fmt9(e.validation.quality) << ',' << fmt9(e.validation.betti_error) << '\n';
    }
    return out.str();
}

std::pair<GrayImage, GrayImage> sample_patch(const GrayImage& img, const GrayImage& mask,
                                             int patch, Rng& rng) {
    if (!img.same_shape(mask)) throw std::invalid_argument("sample_patch: dimension mismatch");
    if (patch <= 0 || patch > img.width || patch > img.height)
        throw std::invalid_argument("sample_patch: patch too large");

    const int cx = static_cast<int>(rng.below(static_cast<uint64_t>(img.width - patch) + 1));
    const int cy = static_cast<int>(rng.below(static_cast<uint64_t>(img.height - patch) + 1));
    const bool hflip = rng.coin();
    const bool vflip = rng.coin();

    auto cut = [&](const GrayImage& src) {
        GrayImage out(patch, patch);
        for (int y = 0; y < patch; ++y) {
            const int sy = cy + (vflip ? patch - 1 - y : y);
            for (int x = 0; x < patch; ++x) {
                const int sx = cx + (hflip ? patch - 1 - x : x);
                out.at(x, y) = src.at(sx, sy);
            }
        }
        out.normalized = src.normalized;
        return out;
    };
    return {cut(img), cut(mask)};
}

std::vector<DatasetEntry> scan_dataset(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    std::map<std::string, DatasetEntry> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const auto img_pos = name.rfind("_img.");
        const auto mask_pos = name.rfind("_mask.");
        if (img_pos != std::string::npos)
            stems[name.substr(0, img_pos)].image_path = entry.path().string();
        else if (mask_pos != std::string::npos)
            stems[name.substr(0, mask_pos)].mask_path = entry.path().string();
    }
    std::vector<DatasetEntry> out;
    for (auto& [stem, e] : stems) {
        if (e.image_path.empty() || e.mask_path.empty())
            throw std::runtime_error("unpaired dataset file for stem: " + stem);
        out.push_back(std::move(e));
    }
    if (out.empty()) throw std::runtime_error("empty dataset: " + dir);
    return out;  // std::map already sorted by stem
}

namespace {

struct LoadedPair {
    GrayImage image;
    GrayImage mask;
};

MetricReport validation_report(const TinySegmenter& model, const std::vector<LoadedPair>& val,
                               const TrainConfig& cfg) {
    MetricReport report;
    report.betti_patch_size = cfg.betti_patch;
    report.betti_n_patches = cfg.betti_n;
    report.rng_seed = cfg.betti_seed;
    if (val.empty()) return report;

    ConfusionCounts pooled;
    double betti_sum = 0.0;
    for (const auto& pair : val) {
        const GrayImage pred = model.forward(pair.image);
        const ConfusionCounts c = confusion(binarize(pred, cfg.bin_threshold),
                                            binarize(pair.mask, cfg.bin_threshold));
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
        pooled.tn += c.tn;
        betti_sum += betti_error(pred, pair.mask, cfg.betti_patch, cfg.betti_n, cfg.betti_seed,
                                 cfg.bin_threshold);
    }
    const RatioMetrics m = ratio_metrics(pooled);
    report.accuracy = m.accuracy;
    report.dice = m.dice;
    report.completeness = m.completeness;
    report.correctness = m.correctness;
    report.quality = m.quality;
    report.degenerate_forms = m.degenerate_forms;
    report.betti_error = betti_sum / static_cast<double>(val.size());
    return report;
}

}  // namespace

TrainResult train(const std::string& dataset_dir, const TrainConfig& cfg) {
    if (cfg.patch < 8) throw std::invalid_argument("train: patch must be at least 8");
    if (cfg.lambda < 0.0) throw std::invalid_argument("train: lambda must be nonnegative");

    const auto entries = scan_dataset(dataset_dir);
    std::vector<LoadedPair> data;
    data.reserve(entries.size());
    for (const auto& e : entries) data.push_back({load_image(e.image_path), load_image(e.mask_path)});

    const size_t n_train = std::max<size_t>(1, data.size() * 4 / 5);
    if (n_train >= data.size())
        throw std::runtime_error("train: dataset too small for an 80:20 split");
    const std::vector<LoadedPair> val(data.begin() + static_cast<long>(n_train), data.end());
    data.resize(n_train);

    Rng rng(cfg.seed);
    TinySegmenter model = TinySegmenter::random_init(rng);
    AdamState adam(TinySegmenter::kParamCount);
    long long step = 0;

    TrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lambda = epoch <= cfg.warmup_epochs ? 0.0 : cfg.lambda;
        double bce_sum = 0.0, topo_sum = 0.0, total_sum = 0.0;
        for (const auto& pair : data) {
            auto [img, mask] = sample_patch(pair.image, pair.mask, cfg.patch, rng);
            const GrayImage pred = model.forward(img);
            const LossReport loss = total_loss(pred, mask, lambda, cfg.dims, cfg.filtration);
            const auto grads = model.backward(img, loss.grad_f);
            adam_step(model.params(), grads, adam, ++step, cfg.adam);
            bce_sum += loss.bce;
            topo_sum += loss.topo;
            total_sum += loss.total;
        }
        EpochRecord record;
        record.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(data.size());
        record.bce = bce_sum * inv;
        record.topo = topo_sum * inv;
        record.total = total_sum * inv;
        record.validation = validation_report(model, val, cfg);
        result.history.epochs.push_back(std::move(record));
    }
    result.model = model;
    return result;
}

namespace {

struct Disk {
    double cx, cy, r_outer, r_inner;  // r_inner = 0 for solid disks
};

// Rejection-places non-overlapping disks/annuli away from the border.
std::vector<Disk> place_disks(int size, int count, double r_lo, double r_hi, bool annuli,
                              Rng& rng) {
    std::vector<Disk> disks;
    int attempts = 0;
    while (static_cast<int>(disks.size()) < count && attempts < 400) {
        ++attempts;
        const double r = r_lo + rng.uniform() * (r_hi - r_lo);
        const double margin = r + 3.0;
        if (2.0 * margin >= size) continue;
        const double cx = margin + rng.uniform() * (size - 2.0 * margin);
        const double cy = margin + rng.uniform() * (size - 2.0 * margin);
        bool ok = true;
        for (const auto& d : disks) {
            const double dx = d.cx - cx, dy = d.cy - cy;
            if (std::sqrt(dx * dx + dy * dy) < d.r_outer + r + 4.0) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        const double width = annuli ? 1.6 + rng.uniform() * 1.0 : 0.0;
        disks.push_back({cx, cy, r, annuli ? std::max(1.5, r - width) : 0.0});
    }
    return disks;
}

}  // namespace

SynthSample synth_sample(SynthKind kind, int size, Rng& rng) {
    if (size < 32) throw std::invalid_argument("synth_sample: size must be at least 32");
    SynthSample out;
    out.image = GrayImage(size, size);
    out.mask = GrayImage(size, size);
    out.mask.normalized = true;

    if (kind == SynthKind::Rings) {
        // thin, low-contrast annuli: fine-scale structures where single-pixel
        // mistakes change the topology
        const int want = static_cast<int>(rng.range(1, 4));
        const auto rings = place_disks(size, want, 6.0, std::min(12.0, size / 4.0), true, rng);
        out.n_objects = static_cast<int>(rings.size());
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                bool on_ring = false;
                for (const auto& d : rings) {
                    const double dx = x - d.cx, dy = y - d.cy;
                    const double dist = std::sqrt(dx * dx + dy * dy);
                    if (dist <= d.r_outer && dist >= d.r_inner) {
                        on_ring = true;
                        break;
                    }
                }
                out.mask.at(x, y) = on_ring ? 1.0 : 0.0;
                const double base = on_ring ? 0.7 : 0.3;
                out.image.at(x, y) = std::clamp(base + 0.05 * rng.gaussian(), 0.0, 1.0);
            }
        }
    } else {
        const int want = static_cast<int>(rng.range(2, 6));
        const auto disks = place_disks(size, want, 4.0, std::min(8.0, size / 6.0), false, rng);
        out.n_objects = static_cast<int>(disks.size());
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                bool in_disk = false;
                for (const auto& d : disks) {
                    const double dx = x - d.cx, dy = y - d.cy;
                    if (dx * dx + dy * dy <= d.r_outer * d.r_outer) {
                        in_disk = true;
                        break;
                    }
                }
                out.mask.at(x, y) = in_disk ? 1.0 : 0.0;
                out.image.at(x, y) = in_disk ? 0.1 : 0.9;
            }
        }
        // 1% salt
        const int n_salt = size * size / 100;
        for (int i = 0; i < n_salt; ++i) {
            const int x = static_cast<int>(rng.below(static_cast<uint64_t>(size)));
            const int y = static_cast<int>(rng.below(static_cast<uint64_t>(size)));
            out.image.at(x, y) = 1.0;
        }
    }
    out.image.normalized = true;
    return out;
}

void synth_dataset(SynthKind kind, int n, int size, uint64_t seed, const std::string& dir) {
    if (n < 1) throw std::invalid_argument("synth_dataset: n must be positive");
    fs::create_directories(dir);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        const SynthSample sample = synth_sample(kind, size, rng);
        char stem[16];
        std::snprintf(stem, sizeof stem, "%03d", i);
        save_image(sample.image, (fs::path(dir) / (std::string(stem) + "_img.png")).string());
        save_image(sample.mask, (fs::path(dir) / (std::string(stem) + "_mask.png")).string());
    }
}

}  // namespace toposeg
