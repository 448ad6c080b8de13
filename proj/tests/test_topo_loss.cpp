#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "toposeg/rng.hpp"
#include "toposeg/topo_loss.hpp"

using namespace toposeg;

namespace {

PersistencePoint pp(int dim, double b, double d, PixelCoord bp = {0, 0}, PixelCoord dp = {1, 0},
                    bool essential = false) {
    PersistencePoint p;
    p.dim = dim;
    p.birth = b;
    p.death = d;
    p.birth_pixel = bp;
    p.death_pixel = dp;
    p.essential = essential;
    return p;
}

PersistenceDiagram diagram(std::vector<PersistencePoint> points,
                           FiltrationKind kind = FiltrationKind::Sublevel) {
    PersistenceDiagram d;
    d.points = std::move(points);
    d.filtration = kind;
    d.essential_cap = 1.0;
    return d;
}

GrayImage random_image(int w, int h, Rng& rng, double lo = 0.05, double hi = 0.95) {
    std::vector<double> vals(static_cast<size_t>(w) * h);
    for (auto& v : vals) v = lo + rng.uniform() * (hi - lo);
    return GrayImage::make(w, h, std::move(vals));
}

// Identifies the matching structure by critical pixels so finite-difference
// probes can detect (and skip) rank flips.
std::string matching_signature(const DiagramMatching& m) {
    std::ostringstream out;
    for (const auto& pr : m.pairs) {
        out << pr.dim << ':';
        auto side = [&](const std::optional<PersistencePoint>& p) {
            if (!p) {
                out << "diag";
                return;
            }
            out << p->birth_pixel.x << ',' << p->birth_pixel.y;
            if (p->death_pixel) out << '/' << p->death_pixel->x << ',' << p->death_pixel->y;
        };
        side(pr.from_f);
        out << '|';
        side(pr.from_g);
        out << ';';
    }
    return out.str();
}

}  // namespace

TEST_CASE("identical diagrams match point for point") {
    const auto df = diagram({pp(0, 0.1, 1.0, {0, 0}, {3, 3}, true), pp(0, 0.3, 0.8, {2, 1}),
                             pp(1, 0.2, 0.6, {1, 2})});
    const auto m = match_diagrams(df, df, HomologyDims{});
    CHECK(m.pairs.size() == 3);
    for (const auto& pr : m.pairs) {
        REQUIRE(pr.from_f.has_value());
        REQUIRE(pr.from_g.has_value());
        CHECK(pr.from_f->birth == pr.from_g->birth);
        CHECK(pr.from_f->death == pr.from_g->death);
    }
}

TEST_CASE("rank-by-lifetime pairs the singles and sends surplus to the diagonal") {
    const auto df = diagram({pp(0, 0.2, 0.8, {0, 0}), pp(0, 0.4, 0.5, {1, 1})});
    const auto dg = diagram({pp(0, 0.1, 0.9, {2, 2})});
    const auto m = match_diagrams(df, dg, HomologyDims{true, false});
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0].from_f->birth == 0.2);
    CHECK(m.pairs[0].from_g->birth == 0.1);
    CHECK(m.pairs[1].from_f->birth == 0.4);
    CHECK(!m.pairs[1].from_g.has_value());
}

TEST_CASE("matching honors the dimension subset") {
    const auto df = diagram({pp(0, 0.1, 0.9, {0, 0}), pp(1, 0.2, 0.6, {1, 1})});
    const auto dg = diagram({pp(0, 0.2, 0.8, {2, 2}), pp(1, 0.3, 0.5, {3, 3})});

    const auto only0 = match_diagrams(df, dg, HomologyDims{true, false});
    REQUIRE(only0.pairs.size() == 1);
    CHECK(only0.pairs[0].dim == 0);

    const auto only1 = match_diagrams(df, dg, HomologyDims{false, true});
    REQUIRE(only1.pairs.size() == 1);
    CHECK(only1.pairs[0].dim == 1);
    CHECK(only1.pairs[0].from_f->birth == 0.2);
}

TEST_CASE("matching rejects uncapped or mismatched diagrams") {
    auto inf_d = diagram({pp(0, 0.1, std::numeric_limits<double>::infinity())});
    const auto ok = diagram({pp(0, 0.1, 0.9)});
    CHECK_THROWS_AS(match_diagrams(inf_d, ok, HomologyDims{}), std::invalid_argument);

    auto super = diagram({pp(0, 0.9, 0.1)}, FiltrationKind::Superlevel);
    CHECK_THROWS_AS(match_diagrams(ok, super, HomologyDims{}), std::invalid_argument);
}

TEST_CASE("matching is symmetric in its arguments") {
    Rng rng(41);
    const auto f = random_image(8, 8, rng);
    const auto g = random_image(8, 8, rng);
    const auto df = compute_persistence(f, FiltrationKind::Sublevel, 1.0);
    const auto dg = compute_persistence(g, FiltrationKind::Sublevel, 1.0);
    const auto ab = match_diagrams(df, dg, HomologyDims{});
    const auto ba = match_diagrams(dg, df, HomologyDims{});
    REQUIRE(ab.pairs.size() == ba.pairs.size());
    CHECK(matching_loss(ab) == matching_loss(ba));
    for (size_t i = 0; i < ab.pairs.size(); ++i) {
        const auto& x = ab.pairs[i];
        const auto& y = ba.pairs[i];
        CHECK(x.from_f.has_value() == y.from_g.has_value());
        if (x.from_f) CHECK(x.from_f->birth == y.from_g->birth);
        if (x.from_g) CHECK(x.from_g->birth == y.from_f->birth);
    }
}

TEST_CASE("worked loss values") {
    // single matched pair (0.2,0.8) vs (0.1,0.9)
    const auto m1 = match_diagrams(diagram({pp(0, 0.2, 0.8)}), diagram({pp(0, 0.1, 0.9)}),
                                   HomologyDims{true, false});
    CHECK(matching_loss(m1) == doctest::Approx(0.02).epsilon(1e-12));

    // lone point against the empty diagram: (d-b)^2 / 2
    const auto m2 = match_diagrams(diagram({pp(0, 0.4, 0.5)}), diagram({}),
                                   HomologyDims{true, false});
    CHECK(matching_loss(m2) == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("topo loss vanishes on equal images and is nonnegative") {
    Rng rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        const auto f = random_image(10, 10, rng);
        const auto [self, m] = topo_loss(f, f, HomologyDims{}, FiltrationKind::Superlevel);
        (void)m;
        CHECK(self == 0.0);

        const auto g = random_image(10, 10, rng);
        const auto [cross, m2] = topo_loss(f, g, HomologyDims{}, FiltrationKind::Sublevel);
        (void)m2;
        CHECK(cross >= 0.0);
    }
}

TEST_CASE("worked gradient example from a hand-built matching") {
    DiagramMatching m;
    MatchedPair pair;
    pair.dim = 0;
    pair.from_f = pp(0, 0.2, 0.8, {1, 1}, {2, 0});
    pair.from_g = pp(0, 0.1, 0.9, {0, 0}, {0, 1});
    m.pairs.push_back(pair);
    const GrayImage grad = matching_gradient(m, 4, 4);
    CHECK(grad.at(1, 1) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(grad.at(2, 0) == doctest::Approx(-0.2).epsilon(1e-12));
    int nonzero = 0;
    for (double v : grad.values) nonzero += v != 0.0;
    CHECK(nonzero == 2);
}

TEST_CASE("gradient is zero for identical images and sparse in general") {
    Rng rng(67);
    const auto f = random_image(12, 12, rng);
    const auto zero = topo_loss_grad(f, f, HomologyDims{}, FiltrationKind::Superlevel);
    for (double v : zero.values) CHECK(v == 0.0);

    const auto g = random_image(12, 12, rng);
    const auto df = compute_persistence(f, FiltrationKind::Sublevel, 1.0);
    const auto grad = topo_loss_grad(f, g, HomologyDims{}, FiltrationKind::Sublevel);
    int nonzero = 0;
    for (double v : grad.values) nonzero += v != 0.0;
    CHECK(nonzero <= 2 * static_cast<int>(df.points.size()));
}

namespace {

void finite_difference_check(FiltrationKind kind, uint64_t seed, int checks_wanted) {
    Rng rng(seed);
    const auto f = random_image(16, 16, rng);
    const auto g = random_image(16, 16, rng);
    const double h = 1e-5;

    const auto [base_loss, base_match] = topo_loss(f, g, HomologyDims{}, kind);
    (void)base_loss;
    const std::string base_sig = matching_signature(base_match);
    const GrayImage grad = topo_loss_grad(f, g, HomologyDims{}, kind);

    int checked = 0;
    for (int i = 0; i < static_cast<int>(f.size()) && checked < checks_wanted; ++i) {
        // skip pixels with a value-order tie closer than the probe step
        bool tie = false;
        for (size_t j = 0; j < f.size(); ++j)
            if (j != static_cast<size_t>(i) && std::abs(f.values[j] - f.values[i]) < 2 * h)
                tie = true;
        if (tie) continue;

        GrayImage fp = f, fm = f;
        fp.values[i] += h;
        fm.values[i] -= h;
        const auto [lp, mp] = topo_loss(fp, g, HomologyDims{}, kind);
        const auto [lm, mm] = topo_loss(fm, g, HomologyDims{}, kind);
        if (matching_signature(mp) != base_sig || matching_signature(mm) != base_sig)
            continue;  // the probe crossed a rank tie
        const double fd = (lp - lm) / (2 * h);
        const double analytic = grad.values[i];
        CHECK(std::abs(analytic - fd) / std::max(1.0, std::abs(analytic)) <= 1e-4);
        ++checked;
    }
    CHECK(checked >= checks_wanted / 2);  // the guard must not skip everything
}

}  // namespace

TEST_CASE("analytic gradient agrees with central differences (sublevel)") {
    finite_difference_check(FiltrationKind::Sublevel, 101, 64);
}

TEST_CASE("analytic gradient agrees with central differences (superlevel)") {
    finite_difference_check(FiltrationKind::Superlevel, 202, 64);
}

TEST_CASE("bce matches closed forms") {
    const auto half = GrayImage::make(2, 2, std::vector<double>(4, 0.5));
    const auto g = GrayImage::make(2, 2, {1.0, 0.0, 1.0, 0.0});
    CHECK(bce_loss(half, g).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const auto exact = GrayImage::make(2, 1, {0.0, 1.0});
    CHECK(bce_loss(exact, exact).loss <= 1.2e-7);

    const auto f1 = GrayImage::make(1, 1, {0.8});
    const auto g1 = GrayImage::make(1, 1, {1.0});
    const auto r = bce_loss(f1, g1);
    CHECK(r.loss == doctest::Approx(-std::log(0.8)).epsilon(1e-12));
    CHECK(r.grad.values[0] == doctest::Approx(-1.25).epsilon(1e-12));

    CHECK_THROWS_AS(bce_loss(f1, GrayImage::make(1, 1, {0.5})), std::invalid_argument);
    CHECK_THROWS_AS(bce_loss(f1, GrayImage::make(2, 1, {0.0, 1.0})), std::invalid_argument);
}

TEST_CASE("bce gradient agrees with central differences") {
    Rng rng(303);
    const auto f = random_image(6, 6, rng, 0.1, 0.9);
    GrayImage g(6, 6);
    for (auto& v : g.values) v = rng.coin() ? 1.0 : 0.0;
    g.normalized = true;
    const auto r = bce_loss(f, g);
    const double h = 1e-7;
    for (size_t i = 0; i < f.size(); ++i) {
        GrayImage fp = f, fm = f;
        fp.values[i] += h;
        fm.values[i] -= h;
        const double fd = (bce_loss(fp, g).loss - bce_loss(fm, g).loss) / (2 * h);
        CHECK(r.grad.values[i] == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("total loss composes as bce + lambda * topo") {
    Rng rng(404);
    const auto f = random_image(10, 10, rng);
    GrayImage g(10, 10);
    for (auto& v : g.values) v = rng.coin() ? 1.0 : 0.0;
    g.normalized = true;

    for (double lambda : {0.0, kDefaultLambda, 1.0}) {
        const auto report = total_loss(f, g, lambda, HomologyDims{}, FiltrationKind::Superlevel);
        CHECK(report.total == doctest::Approx(report.bce + lambda * report.topo).epsilon(1e-12));
        if (lambda == 0.0) {
            const auto bce = bce_loss(f, g);
            CHECK(report.total == bce.loss);
            for (size_t i = 0; i < f.size(); ++i)
                CHECK(report.grad_f.values[i] == bce.grad.values[i]);
        }
    }

    // f = g exactly (binary): both terms vanish up to the clamp epsilon
    const auto report = total_loss(g, g, kDefaultLambda, HomologyDims{},
                                   FiltrationKind::Superlevel);
    CHECK(report.topo == 0.0);
    CHECK(report.total <= 1.2e-7);
}

TEST_CASE("default lambda is 1/12000") {
    CHECK(kDefaultLambda == doctest::Approx(8.3333333e-5).epsilon(1e-6));
    CHECK(kDefaultLambda * 12000.0 == 1.0);
}

TEST_CASE("affine rescaling scales organic pair coordinates and loss by alpha^2") {
    Rng rng(505);
    const auto f = random_image(10, 10, rng, 0.05, 0.95);
    const auto g = random_image(10, 10, rng, 0.05, 0.95);
    const double alpha = 0.5, beta = 0.25;
    auto map_img = [&](const GrayImage& src) {
        GrayImage out = src;
        for (auto& v : out.values) v = alpha * v + beta;
        out.normalized = true;
        return out;
    };
    const auto [base, base_m] = topo_loss(f, g, HomologyDims{}, FiltrationKind::Sublevel);
    (void)base;
    const auto [mapped, mapped_m] =
        topo_loss(map_img(f), map_img(g), HomologyDims{}, FiltrationKind::Sublevel);
    (void)mapped;
    REQUIRE(base_m.pairs.size() == mapped_m.pairs.size());

    // organic (non-essential) coordinate differences scale exactly by alpha
    double organic_base = 0.0, organic_mapped = 0.0;
    for (size_t i = 0; i < base_m.pairs.size(); ++i) {
        const auto& a = base_m.pairs[i];
        const auto& b = mapped_m.pairs[i];
        REQUIRE(a.from_f.has_value() == b.from_f.has_value());
        if (a.from_f && b.from_f) {
            CHECK(a.from_f->birth_pixel == b.from_f->birth_pixel);
            CHECK(b.from_f->birth == doctest::Approx(alpha * a.from_f->birth + beta).epsilon(1e-12));
        }
        const bool capped_f = a.from_f && a.from_f->essential;
        const bool capped_g = a.from_g && a.from_g->essential;
        if (capped_f || capped_g) continue;
        auto contribution = [](const MatchedPair& pr) {
            const double bf = pr.from_f ? pr.from_f->birth
                                        : 0.5 * (pr.from_g->birth + pr.from_g->death);
            const double df = pr.from_f ? pr.from_f->death
                                        : 0.5 * (pr.from_g->birth + pr.from_g->death);
            const double bg = pr.from_g ? pr.from_g->birth
                                        : 0.5 * (pr.from_f->birth + pr.from_f->death);
            const double dg = pr.from_g ? pr.from_g->death
                                        : 0.5 * (pr.from_f->birth + pr.from_f->death);
            return (bf - bg) * (bf - bg) + (df - dg) * (df - dg);
        };
        organic_base += contribution(a);
        organic_mapped += contribution(b);
    }
    CHECK(organic_mapped == doctest::Approx(alpha * alpha * organic_base).epsilon(1e-9));
}
