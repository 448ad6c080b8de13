// Command-line front end: every pipeline stage as a subcommand emitting
// machine-parseable JSON/CSV on stdout (prose goes to stderr).
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "toposeg/cubical_persistence.hpp"
#include "toposeg/grid_image.hpp"
#include "toposeg/rng.hpp"
#include "toposeg/seg_metrics.hpp"
#include "toposeg/tiny_segmenter.hpp"
#include "toposeg/topo_loss.hpp"
#include "toposeg/topo_preprocess.hpp"
#include "toposeg/train.hpp"

using json = nlohmann::ordered_json;
using namespace toposeg;

namespace {

// All numeric output carries 9 significant digits for stable golden files.
double round9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

FiltrationKind parse_filtration(const std::string& name) {
    if (name == "sub" || name == "sublevel") return FiltrationKind::Sublevel;
    if (name == "super" || name == "superlevel") return FiltrationKind::Superlevel;
    throw CLI::ValidationError("--filtration must be sub or super");
}

HomologyDims parse_dims(const std::string& list) {
    HomologyDims dims{false, false};
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "0")
            dims.dim0 = true;
        else if (item == "1")
            dims.dim1 = true;
        else
            throw CLI::ValidationError("--dims entries must be 0 or 1");
    }
    if (!dims.dim0 && !dims.dim1) throw CLI::ValidationError("--dims must name a dimension");
    return dims;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump() << '\n';
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write file: " + out_path);
        out << j.dump() << '\n';
    }
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write file: " + out_path);
        out << text;
    }
}

json metric_report_json(const MetricReport& r) {
    json j;
    j["accuracy"] = round9(r.accuracy);
    j["dice"] = round9(r.dice);
    j["completeness"] = round9(r.completeness);
    j["correctness"] = round9(r.correctness);
    j["quality"] = round9(r.quality);
    j["betti_error"] = round9(r.betti_error);
    j["betti_patch_size"] = r.betti_patch_size;
    j["betti_n_patches"] = r.betti_n_patches;
    j["rng_seed"] = r.rng_seed;
    j["degenerate_forms"] = r.degenerate_forms;
    return j;
}

std::string matching_signature(const DiagramMatching& m) {
    std::ostringstream out;
    for (const auto& pr : m.pairs) {
        out << pr.dim << ':';
        auto side = [&](const std::optional<PersistencePoint>& p) {
            if (!p) {
                out << 'd';
                return;
            }
            out << p->birth_pixel.x << ',' << p->birth_pixel.y << '/';
            if (p->death_pixel) out << p->death_pixel->x << ',' << p->death_pixel->y;
        };
        side(pr.from_f);
        out << '|';
        side(pr.from_g);
        out << ';';
    }
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"topological segmentation toolkit"};
    app.require_subcommand(1);

    // ---- persist ----
    auto* persist = app.add_subcommand("persist", "persistence diagram of an image");
    std::string persist_image, persist_filt = "sub", persist_out;
    double persist_cap = std::nan("");
    persist->add_option("--image", persist_image, "grayscale PNG or PGM")->required();
    persist->add_option("--filtration", persist_filt, "sub or super");
    persist->add_option("--cap", persist_cap,
                        "replace the essential infinite death by this value");
    persist->add_option("--out", persist_out, "output CSV path (default stdout)");

    // ---- betti ----
    auto* betti = app.add_subcommand("betti", "Betti numbers of a thresholded image");
    std::string betti_image, betti_out, betti_curve_arg, betti_filt = "sub";
    double betti_threshold = 0.5;
    betti->add_option("--image", betti_image)->required();
    betti->add_option("--threshold", betti_threshold, "mask = value >= threshold");
    betti->add_option("--curve", betti_curve_arg,
                      "comma-separated thresholds; emits a CSV curve instead");
    betti->add_option("--filtration", betti_filt, "curve mode: sub or super");
    betti->add_option("--out", betti_out);

    // ---- loss ----
    auto* loss = app.add_subcommand("loss", "BCE + topological loss between two images");
    std::string loss_f, loss_g, loss_filt = "super", loss_dims = "0,1", loss_out, loss_grad_out;
    double loss_lambda = kDefaultLambda;
    loss->add_option("--f", loss_f, "likelihood image")->required();
    loss->add_option("--g", loss_g, "ground-truth image (0/1 valued)")->required();
    loss->add_option("--lambda", loss_lambda, "topology weight (default 1/12000)");
    loss->add_option("--dims", loss_dims, "homology dimensions, e.g. 0,1");
    loss->add_option("--filtration", loss_filt);
    loss->add_option("--grad-out", loss_grad_out, "CSV of nonzero gradient entries");
    loss->add_option("--out", loss_out);

    // ---- gradcheck ----
    auto* gradcheck = app.add_subcommand("gradcheck",
                                         "finite-difference check of the topo gradient");
    uint64_t gc_seed = 0;
    int gc_width = 16, gc_height = 16;
    std::string gc_filt = "super", gc_out;
    gradcheck->add_option("--seed", gc_seed)->required();
    gradcheck->add_option("--width", gc_width);
    gradcheck->add_option("--height", gc_height);
    gradcheck->add_option("--filtration", gc_filt);
    gradcheck->add_option("--out", gc_out);

    // ---- preprocess ----
    auto* preprocess = app.add_subcommand("preprocess", "topological input-image processing");
    std::string pre_image, pre_out, pre_labels, pre_sidecar, pre_filt = "sub";
    int pre_k = 3, pre_d = 2;
    bool pre_invert = false;
    preprocess->add_option("--image", pre_image)->required();
    preprocess->add_option("--out", pre_out, "processed image PNG")->required();
    preprocess->add_option("--labels", pre_labels, "16-bit label PNG");
    preprocess->add_option("--sidecar", pre_sidecar, "JSON sidecar path");
    preprocess->add_option("--smooth-k", pre_k, "odd mean-filter window");
    preprocess->add_option("--border-d", pre_d, "border ring width");
    preprocess->add_flag("--invert", pre_invert, "invert before analysis");
    preprocess->add_option("--filtration", pre_filt);

    // ---- metrics ----
    auto* metrics = app.add_subcommand("metrics", "segmentation metrics incl. Betti error");
    std::string met_pred, met_gt, met_out;
    uint64_t met_seed = 0;
    int met_patch = 64, met_n = 100;
    double met_bin = 0.5;
    bool met_csv = false;
    metrics->add_option("--pred", met_pred)->required();
    metrics->add_option("--gt", met_gt)->required();
    metrics->add_option("--seed", met_seed, "Betti-error sampling seed")->required();
    metrics->add_option("--patch", met_patch);
    metrics->add_option("--n", met_n);
    metrics->add_option("--bin-threshold", met_bin);
    metrics->add_flag("--csv", met_csv, "emit a CSV row instead of JSON");
    metrics->add_option("--out", met_out);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the demo segmenter");
    std::string tr_data, tr_out, tr_ckpt, tr_filt = "super", tr_dims = "0,1";
    TrainConfig tr_cfg;
    uint64_t tr_seed = 0;
    train_cmd->add_option("--data", tr_data, "directory of NNN_img.png/NNN_mask.png")->required();
    train_cmd->add_option("--seed", tr_seed)->required();
    train_cmd->add_option("--epochs", tr_cfg.epochs);
    train_cmd->add_option("--patch", tr_cfg.patch);
    train_cmd->add_option("--lambda", tr_cfg.lambda);
    train_cmd->add_option("--lr", tr_cfg.adam.lr);
    train_cmd->add_option("--warmup-epochs", tr_cfg.warmup_epochs);
    train_cmd->add_option("--dims", tr_dims);
    train_cmd->add_option("--filtration", tr_filt);
    train_cmd->add_option("--betti-patch", tr_cfg.betti_patch);
    train_cmd->add_option("--betti-n", tr_cfg.betti_n);
    train_cmd->add_option("--betti-seed", tr_cfg.betti_seed);
    train_cmd->add_option("--out", tr_out, "history CSV path (default stdout)");
    train_cmd->add_option("--checkpoint", tr_ckpt, "model checkpoint path");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string sy_kind, sy_dir;
    int sy_n = 0, sy_size = 64;
    uint64_t sy_seed = 0;
    synth->add_option("--kind", sy_kind, "rings or blobs")->required();
    synth->add_option("--n", sy_n, "number of image/mask pairs")->required();
    synth->add_option("--size", sy_size, "image side length");
    synth->add_option("--seed", sy_seed)->required();
    synth->add_option("--out", sy_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        // every command resolves its flags before touching files
        if (*persist) {
            const auto kind = parse_filtration(persist_filt);
            std::optional<double> cap;
            if (!std::isnan(persist_cap)) cap = persist_cap;
            const auto img = load_image(persist_image);
            const auto d = compute_persistence(img, kind, cap);
            emit_text(diagram_to_csv(d), persist_out);
        } else if (*betti) {
            const auto kind = parse_filtration(betti_filt);
            std::vector<double> thresholds;
            if (!betti_curve_arg.empty()) {
                std::stringstream ss(betti_curve_arg);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    try {
                        size_t used = 0;
                        thresholds.push_back(std::stod(item, &used));
                        if (used != item.size()) throw std::invalid_argument(item);
                    } catch (const std::exception&) {
                        throw CLI::ValidationError("--curve entries must be numbers");
                    }
                }
            }
            const auto img = load_image(betti_image);
            if (!thresholds.empty()) {
                const auto curve = betti_curve(img, kind, thresholds);
                std::ostringstream out;
                out << "threshold,beta0,beta1\n";
                for (size_t i = 0; i < curve.size(); ++i)
                    out << fmt9(thresholds[i]) << ',' << curve[i].beta0 << ',' << curve[i].beta1
                        << '\n';
                emit_text(out.str(), betti_out);
            } else {
                const auto b = betti_numbers(binarize(img, betti_threshold));
                json j;
                j["beta0"] = b.beta0;
                j["beta1"] = b.beta1;
                j["threshold"] = round9(betti_threshold);
                emit(j, betti_out);
            }
        } else if (*loss) {
            const auto dims = parse_dims(loss_dims);
            const auto kind = parse_filtration(loss_filt);
            const auto f = load_image(loss_f);
            const auto g = load_image(loss_g);
            const auto report = total_loss(f, g, loss_lambda, dims, kind);
            json j;
            j["bce"] = round9(report.bce);
            j["topo"] = round9(report.topo);
            j["lambda"] = round9(report.lambda);
            j["total"] = round9(report.total);
            j["n_pairs_dim0"] = report.matching.pairs_in_dim(0);
            j["n_pairs_dim1"] = report.matching.pairs_in_dim(1);
            emit(j, loss_out);
            if (!loss_grad_out.empty()) {
                std::ofstream out(loss_grad_out);
                if (!out) throw std::runtime_error("cannot write file: " + loss_grad_out);
                out << "x,y,value\n";
                for (int y = 0; y < report.grad_f.height; ++y)
                    for (int x = 0; x < report.grad_f.width; ++x)
                        if (report.grad_f.at(x, y) != 0.0)
                            out << x << ',' << y << ',' << fmt9(report.grad_f.at(x, y)) << '\n';
            }
        } else if (*gradcheck) {
            Rng rng(gc_seed);
            auto random_image = [&](int w, int h) {
                GrayImage img(w, h);
                for (auto& v : img.values) v = 0.05 + 0.9 * rng.uniform();
                img.normalized = true;
                return img;
            };
            const auto f = random_image(gc_width, gc_height);
            const auto g = random_image(gc_width, gc_height);
            const auto kind = parse_filtration(gc_filt);
            const HomologyDims dims;
            const double h = 1e-5;
            const auto [base, base_m] = topo_loss(f, g, dims, kind);
            (void)base;
            const std::string base_sig = matching_signature(base_m);
            const auto grad = topo_loss_grad(f, g, dims, kind);
            double max_rel = 0.0;
            int checked = 0, skipped = 0;
            for (size_t i = 0; i < f.size(); ++i) {
                bool tie = false;
                for (size_t j = 0; j < f.size(); ++j)
                    if (j != i && std::abs(f.values[j] - f.values[i]) < 2 * h) tie = true;
                if (tie) {
                    ++skipped;
                    continue;
                }
                GrayImage fp = f, fm = f;
                fp.values[i] += h;
                fm.values[i] -= h;
                const auto [lp, mp] = topo_loss(fp, g, dims, kind);
                const auto [lm, mm] = topo_loss(fm, g, dims, kind);
                if (matching_signature(mp) != base_sig || matching_signature(mm) != base_sig) {
                    ++skipped;
                    continue;
                }
                const double fd = (lp - lm) / (2 * h);
                max_rel = std::max(max_rel, std::abs(grad.values[i] - fd) /
                                                std::max(1.0, std::abs(grad.values[i])));
                ++checked;
            }
            json j;
            j["max_rel_deviation"] = round9(max_rel);
            j["pixels_checked"] = checked;
            j["pixels_skipped"] = skipped;
            j["seed"] = gc_seed;
            emit(j, gc_out);
        } else if (*preprocess) {
            PreprocessConfig cfg;
            cfg.smooth_k = pre_k;
            cfg.border_d = pre_d;
            cfg.invert_input = pre_invert;
            cfg.filtration = parse_filtration(pre_filt);
            if (pre_k < 1 || pre_k % 2 == 0)
                throw CLI::ValidationError("--smooth-k must be odd and positive");
            if (pre_d < 0) throw CLI::ValidationError("--border-d must be nonnegative");
            const auto img = load_image(pre_image);
            auto [processed, labeling] = preprocess_pipeline(img, cfg);
            save_image(processed, pre_out);
            if (!pre_labels.empty())
                save_label_png(labeling.labels, labeling.width, labeling.height, pre_labels);
            if (!pre_sidecar.empty()) {
                json j;
                j["threshold"] = round9(labeling.threshold);
                j["n_significant"] = labeling.n_significant;
                j["n_components"] = labeling.n_components;
                j["dropped_points"] = labeling.dropped;
                emit(j, pre_sidecar);
            }
        } else if (*metrics) {
            if (met_patch < 1) throw CLI::ValidationError("--patch must be positive");
            if (met_n < 1) throw CLI::ValidationError("--n must be positive");
            const auto pred = load_image(met_pred);
            const auto gt = load_image(met_gt);
            const auto report = evaluate(pred, gt, met_patch, met_n, met_seed, met_bin);
            if (met_csv) {
                std::ostringstream out;
                out << "accuracy,dice,completeness,correctness,quality,betti_error\n"
                    << fmt9(report.accuracy) << ',' << fmt9(report.dice) << ','
                    << fmt9(report.completeness) << ',' << fmt9(report.correctness) << ','
                    << fmt9(report.quality) << ',' << fmt9(report.betti_error) << '\n';
                emit_text(out.str(), met_out);
            } else {
                emit(metric_report_json(report), met_out);
            }
        } else if (*train_cmd) {
            tr_cfg.seed = tr_seed;
            tr_cfg.dims = parse_dims(tr_dims);
            tr_cfg.filtration = parse_filtration(tr_filt);
            const auto result = train(tr_data, tr_cfg);
            emit_text(result.history.to_csv(), tr_out);
            if (!tr_ckpt.empty()) result.model.save(tr_ckpt);
        } else if (*synth) {
            SynthKind kind;
            if (sy_kind == "rings")
                kind = SynthKind::Rings;
            else if (sy_kind == "blobs")
                kind = SynthKind::Blobs;
            else
                throw CLI::ValidationError("--kind must be rings or blobs");
            synth_dataset(kind, sy_n, sy_size, sy_seed, sy_dir);
            json j;
            j["n"] = sy_n;
            j["size"] = sy_size;
            j["seed"] = sy_seed;
            j["dir"] = sy_dir;
            emit(j, "");
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
