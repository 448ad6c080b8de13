#include "toposeg/topo_loss.hpp"

#include <algorithm>
#include <cmath>

namespace toposeg {

namespace {

// Matching sort: decreasing lifetime, ties by decreasing birth, then
// row-major birth pixel.
bool match_order(const PersistencePoint& a, const PersistencePoint& b) {
    const double la = a.lifetime(), lb = b.lifetime();
    if (la != lb) return la > lb;
    if (a.birth != b.birth) return a.birth > b.birth;
    if (a.birth_pixel.y != b.birth_pixel.y) return a.birth_pixel.y < b.birth_pixel.y;
    return a.birth_pixel.x < b.birth_pixel.x;
}

std::vector<PersistencePoint> dim_slice(const PersistenceDiagram& d, int dim) {
    std::vector<PersistencePoint> out;
    for (const auto& p : d.points)
        if (p.dim == dim) out.push_back(p);
    std::sort(out.begin(), out.end(), match_order);
    return out;
}

double diagonal_coordinate(const PersistencePoint& p) { return 0.5 * (p.birth + p.death); }

}  // namespace

int DiagramMatching::pairs_in_dim(int d) const {
    int n = 0;
    for (const auto& pr : pairs)
        if (pr.dim == d) ++n;
    return n;
}

DiagramMatching match_diagrams(const PersistenceDiagram& df, const PersistenceDiagram& dg,
                               HomologyDims dims) {
    if (df.has_infinite_death() || dg.has_infinite_death())
        throw std::invalid_argument("match_diagrams: uncapped infinite death present");
    if (df.filtration != dg.filtration)
        throw std::invalid_argument("match_diagrams: filtration kinds differ");

    DiagramMatching m;
    m.dims_used = dims;
    for (int dim = 0; dim <= 1; ++dim) {
        if (!dims.contains(dim)) continue;
        const auto fs = dim_slice(df, dim);
        const auto gs = dim_slice(dg, dim);
        const size_t n = std::max(fs.size(), gs.size());
        for (size_t k = 0; k < n; ++k) {
            MatchedPair pair;
            pair.dim = dim;
            if (k < fs.size()) pair.from_f = fs[k];
            if (k < gs.size()) pair.from_g = gs[k];
            m.pairs.push_back(std::move(pair));
        }
    }
    return m;
}

double matching_loss(const DiagramMatching& matching) {
    double loss = 0.0;
    for (const auto& pr : matching.pairs) {
        double bf, df_, bg, dg_;
        if (pr.from_f && pr.from_g) {
            bf = pr.from_f->birth;
            df_ = pr.from_f->death;
            bg = pr.from_g->birth;
            dg_ = pr.from_g->death;
        } else {
            const PersistencePoint& p = pr.from_f ? *pr.from_f : *pr.from_g;
            bf = p.birth;
            df_ = p.death;
            bg = dg_ = diagonal_coordinate(p);
        }
        loss += (bf - bg) * (bf - bg) + (df_ - dg_) * (df_ - dg_);
    }
    return loss;
}

std::pair<double, DiagramMatching> topo_loss(const GrayImage& f, const GrayImage& g,
                                             HomologyDims dims, FiltrationKind kind) {
    if (!f.same_shape(g)) throw std::invalid_argument("topo_loss: dimension mismatch");
    const auto df = compute_persistence(f, kind, 1.0);
    const auto dg = compute_persistence(g, kind, 1.0);
    auto m = match_diagrams(df, dg, dims);
    return {matching_loss(m), std::move(m)};
}

GrayImage matching_gradient(const DiagramMatching& matching, int width, int height) {
    GrayImage grad(width, height, 0.0);
    for (const auto& pr : matching.pairs) {
        if (!pr.from_f) continue;  // g is constant, its points carry no gradient
        const PersistencePoint& p = *pr.from_f;
        double tb, td;
        if (pr.from_g) {
            tb = pr.from_g->birth;
            td = pr.from_g->death;
        } else {
            tb = td = diagonal_coordinate(p);
        }
        grad.at(p.birth_pixel.x, p.birth_pixel.y) += 2.0 * (p.birth - tb);
        // A capped essential death is a constant of the filtration, not a
        // pixel value, so it contributes no gradient.
        if (!p.essential && p.death_pixel)
            grad.at(p.death_pixel->x, p.death_pixel->y) += 2.0 * (p.death - td);
    }
    return grad;
}

GrayImage topo_loss_grad(const GrayImage& f, const GrayImage& g, HomologyDims dims,
                         FiltrationKind kind) {
    auto [loss, matching] = topo_loss(f, g, dims, kind);
    (void)loss;
    return matching_gradient(matching, f.width, f.height);
}

namespace {

constexpr double kBceEps = 1e-7;

BceResult bce_impl(const GrayImage& f, const double* gvals, size_t n) {
    BceResult out;
    out.grad = GrayImage(f.width, f.height, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double g = gvals[i];
        if (g != 0.0 && g != 1.0)
            throw std::invalid_argument("bce_loss: ground truth value outside {0,1}");
        const double raw = f.values[i];
        const double ft = std::clamp(raw, kBceEps, 1.0 - kBceEps);
        sum += -(g * std::log(ft) + (1.0 - g) * std::log(1.0 - ft));
        // clamped coordinates are flat: no gradient flows through them
        if (raw > kBceEps && raw < 1.0 - kBceEps)
            out.grad.values[i] = (ft - g) / (ft * (1.0 - ft)) * inv_n;
    }
    out.loss = sum * inv_n;
    return out;
}

}  // namespace

BceResult bce_loss(const GrayImage& f, const GrayImage& g) {
    if (!f.same_shape(g)) throw std::invalid_argument("bce_loss: dimension mismatch");
    if (!f.normalized) throw std::invalid_argument("bce_loss: f must be normalized");
    return bce_impl(f, g.values.data(), f.size());
}

BceResult bce_loss(const GrayImage& f, const BinaryImage& g) {
    if (f.width != g.width || f.height != g.height)
        throw std::invalid_argument("bce_loss: dimension mismatch");
    if (!f.normalized) throw std::invalid_argument("bce_loss: f must be normalized");
    std::vector<double> gv(g.bits.begin(), g.bits.end());
    return bce_impl(f, gv.data(), f.size());
}

LossReport total_loss(const GrayImage& f, const GrayImage& g, double lambda, HomologyDims dims,
                      FiltrationKind kind) {
    if (lambda < 0.0) throw std::invalid_argument("total_loss: lambda must be nonnegative");
    LossReport report;
    auto bce = bce_loss(f, g);
    auto [topo, matching] = topo_loss(f, g, dims, kind);
    report.bce = bce.loss;
    report.topo = topo;
    report.lambda = lambda;
    report.total = bce.loss + lambda * topo;
    report.matching = std::move(matching);
    report.grad_f = std::move(bce.grad);
    if (lambda != 0.0) {
        const GrayImage tg = matching_gradient(report.matching, f.width, f.height);
        for (size_t i = 0; i < report.grad_f.size(); ++i)
            report.grad_f.values[i] += lambda * tg.values[i];
    }
    return report;
}

}  // namespace toposeg
