#include "toposeg/cubical_persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace toposeg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Union-find with roots carrying the creator pixel of their component.
// The creator is the first pixel of the component in sweep order, so
// comparing creator sweep ranks implements the elder rule including
// row-major tie-breaking between equal birth values.
struct SweepForest {
    std::vector<int> parent;
    std::vector<int> creator;  // sweep rank of the component's creator

    explicit SweepForest(int n) : parent(n, -1), creator(n, -1) {}

    void make_set(int i, int creator_rank) {
        parent[i] = i;
        creator[i] = creator_rank;
    }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
};

int argmax_pixel(const GrayImage& img) {
    int best = 0;
    for (size_t i = 1; i < img.size(); ++i)
        if (img.values[i] > img.values[best]) best = static_cast<int>(i);
    return best;
}

PersistenceDiagram sublevel_persistence(const GrayImage& img,
                                        std::optional<double> essential_cap) {
    const int w = img.width, h = img.height;
    const int n = w * h;
    const auto& val = img.values;

    // Sweep order: value ascending, ties by row-major index (smaller index
    // enters first). rank_of[i] = position of pixel i in the sweep.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (val[a] != val[b]) return val[a] < val[b];
        return a < b;
    });
    std::vector<int> rank_of(n);
    for (int r = 0; r < n; ++r) rank_of[order[r]] = r;

    PersistenceDiagram diagram;
    diagram.filtration = FiltrationKind::Sublevel;
    diagram.essential_cap = essential_cap;

    auto coord = [&](int i) { return PixelCoord{i % w, i / w}; };

    // dim 0: merge 4-adjacent pixels in sweep order; a merge at pixel p kills
    // the younger component at val[p].
    {
        SweepForest uf(n);
        const int dx[4] = {-1, 1, 0, 0};
        const int dy[4] = {0, 0, -1, 1};
        for (int r = 0; r < n; ++r) {
            const int p = order[r];
            const int px = p % w, py = p / w;
            uf.make_set(p, r);
            for (int k = 0; k < 4; ++k) {
                const int qx = px + dx[k], qy = py + dy[k];
                if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
                const int q = qy * w + qx;
                if (rank_of[q] > r) continue;  // not yet in the sublevel set
                const int a = uf.find(p), b = uf.find(q);
                if (a == b) continue;
                const int elder = uf.creator[a] < uf.creator[b] ? a : b;
                const int younger = elder == a ? b : a;
                const int ypix = order[uf.creator[younger]];
                if (val[ypix] < val[p]) {
                    diagram.points.push_back({0, val[ypix], val[p], coord(ypix), coord(p), false});
                }
                uf.parent[younger] = elder;
            }
        }
        const int root = uf.find(0);
        const int bpix = order[uf.creator[root]];
        PersistencePoint essential{0, val[bpix], kInf, coord(bpix), std::nullopt, true};
        if (essential_cap) {
            essential.death = *essential_cap;
            essential.death_pixel = coord(argmax_pixel(img));
        }
        diagram.points.push_back(essential);
    }

    // dim 1 via the complement sweep: run dim 0 over pixels sorted by value
    // descending with 8-connectivity plus a virtual outside node adjacent to
    // border pixels. A complement component born at m (its max pixel) that
    // merges at value v yields the sublevel loop (birth v, death m).
    {
        std::vector<int> corder(n);
        std::iota(corder.begin(), corder.end(), 0);
        std::sort(corder.begin(), corder.end(), [&](int a, int b) {
            if (val[a] != val[b]) return val[a] > val[b];
            return a < b;
        });
        std::vector<int> crank(n);
        for (int r = 0; r < n; ++r) crank[corder[r]] = r;

        const int outside = n;
        SweepForest uf(n + 1);
        uf.make_set(outside, -1);  // eldest of all, never dies

        auto merge_at = [&](int p, int q_root_holder) {
            const int a = uf.find(p), b = uf.find(q_root_holder);
            if (a == b) return;
            const int elder = uf.creator[a] < uf.creator[b] ? a : b;
            const int younger = elder == a ? b : a;
            const int ypix = corder[uf.creator[younger]];
            if (val[ypix] > val[p]) {
                diagram.points.push_back({1, val[p], val[ypix], PixelCoord{p % w, p / w},
                                          PixelCoord{ypix % w, ypix / w}, false});
            }
            uf.parent[younger] = elder;
        };

        for (int r = 0; r < n; ++r) {
            const int p = corder[r];
            const int px = p % w, py = p / w;
            uf.make_set(p, r);
            if (px == 0 || px == w - 1 || py == 0 || py == h - 1) merge_at(p, outside);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int qx = px + dx, qy = py + dy;
                    if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
                    const int q = qy * w + qx;
                    if (crank[q] > r) continue;
                    merge_at(p, q);
                }
            }
        }
    }

    return diagram;
}

void sort_diagram(PersistenceDiagram& d) {
    std::sort(d.points.begin(), d.points.end(),
              [](const PersistencePoint& a, const PersistencePoint& b) {
                  if (a.dim != b.dim) return a.dim < b.dim;
                  if (a.birth != b.birth) return a.birth < b.birth;
                  if (a.death != b.death) return a.death < b.death;
                  if (a.birth_pixel.y != b.birth_pixel.y) return a.birth_pixel.y < b.birth_pixel.y;
                  return a.birth_pixel.x < b.birth_pixel.x;
              });
}

}  // namespace

double PersistencePoint::lifetime() const {
    if (std::isinf(death)) return kInf;
    return std::abs(death - birth);
}

bool PersistenceDiagram::has_infinite_death() const {
    for (const auto& p : points)
        if (std::isinf(p.death)) return true;
    return false;
}

PersistenceDiagram compute_persistence(const GrayImage& img, FiltrationKind kind,
                                       std::optional<double> essential_cap) {
    if (img.width <= 0 || img.height <= 0 || img.values.empty())
        throw std::invalid_argument("compute_persistence: empty image");

    if (kind == FiltrationKind::Sublevel) {
        PersistenceDiagram d = sublevel_persistence(img, essential_cap);
        sort_diagram(d);
        return d;
    }

    PersistenceDiagram d = sublevel_persistence(invert(img), essential_cap);
    d.filtration = FiltrationKind::Superlevel;
    for (auto& p : d.points) {
        // Map back by reading the original image at the critical pixels, so
        // birth/death equal image values exactly (1-(1-v) can be off by an
        // ulp). Only the capped essential death is arithmetic: 1 - cap.
        p.birth = img.at(p.birth_pixel.x, p.birth_pixel.y);
        if (p.essential) {
            if (essential_cap) p.death = 1.0 - *essential_cap;
        } else {
            p.death = img.at(p.death_pixel->x, p.death_pixel->y);
        }
    }
    sort_diagram(d);
    return d;
}

namespace {

// Flood fill over a predicate; returns component count and whether each
// component touches the border (via the visitor).
template <typename Keep, typename OnComponent>
void flood_components(int w, int h, bool eight_conn, Keep keep, OnComponent on_component) {
    std::vector<uint8_t> seen(static_cast<size_t>(w) * h, 0);
    std::vector<int> stack;
    for (int start = 0; start < w * h; ++start) {
        if (seen[start] || !keep(start)) continue;
        bool touches_border = false;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int px = p % w, py = p / w;
            if (px == 0 || px == w - 1 || py == 0 || py == h - 1) touches_border = true;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (!eight_conn && dx != 0 && dy != 0) continue;
                    const int qx = px + dx, qy = py + dy;
                    if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
                    const int q = qy * w + qx;
                    if (seen[q] || !keep(q)) continue;
                    seen[q] = 1;
                    stack.push_back(q);
                }
            }
        }
        on_component(touches_border);
    }
}

}  // namespace

BettiPair betti_numbers(const BinaryImage& img) {
    BettiPair out;
    flood_components(
        img.width, img.height, /*eight_conn=*/false,
        [&](int p) { return img.bits[static_cast<size_t>(p)] != 0; },
        [&](bool) { ++out.beta0; });
    flood_components(
        img.width, img.height, /*eight_conn=*/true,
        [&](int p) { return img.bits[static_cast<size_t>(p)] == 0; },
        [&](bool touches_border) {
            if (!touches_border) ++out.beta1;
        });
    return out;
}

long long euler_characteristic(const BinaryImage& img) {
    const int w = img.width, h = img.height;
    long long v = 0, e = 0, f = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!img.at(x, y)) continue;
            ++v;
            if (x + 1 < w && img.at(x + 1, y)) ++e;
            if (y + 1 < h && img.at(x, y + 1)) ++e;
            if (x + 1 < w && y + 1 < h && img.at(x + 1, y) && img.at(x, y + 1) &&
                img.at(x + 1, y + 1))
                ++f;
        }
    }
    return v - e + f;
}

std::vector<BettiPair> betti_curve(const GrayImage& img, FiltrationKind kind,
                                   const std::vector<double>& thresholds) {
    for (size_t i = 1; i < thresholds.size(); ++i)
        if (thresholds[i - 1] > thresholds[i])
            throw std::invalid_argument("betti_curve: thresholds must be sorted ascending");
    std::vector<BettiPair> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        BinaryImage mask(img.width, img.height);
        for (size_t i = 0; i < img.size(); ++i) {
            const bool in = kind == FiltrationKind::Sublevel ? img.values[i] <= t
                                                             : img.values[i] >= t;
            mask.bits[i] = in ? 1 : 0;
        }
        out.push_back(betti_numbers(mask));
    }
    return out;
}

bool point_alive_at(const PersistencePoint& p, double t, FiltrationKind kind) {
    if (kind == FiltrationKind::Sublevel) return p.birth <= t && (std::isinf(p.death) || t < p.death);
    return t <= p.birth && (std::isinf(p.death) || p.death < t);
}

namespace {

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string diagram_to_csv(const PersistenceDiagram& diagram) {
    std::ostringstream out;
    out << "dim,birth,death,birth_x,birth_y,death_x,death_y\n";
    for (const auto& p : diagram.points) {
        out << p.dim << ',' << fmt9(p.birth) << ',';
        if (std::isinf(p.death)) {
            out << "inf," << p.birth_pixel.x << ',' << p.birth_pixel.y << ",,\n";
        } else {
            out << fmt9(p.death) << ',' << p.birth_pixel.x << ',' << p.birth_pixel.y << ','
                << p.death_pixel->x << ',' << p.death_pixel->y << '\n';
        }
    }
    return out.str();
}

void write_diagram_csv(const PersistenceDiagram& diagram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << diagram_to_csv(diagram);
}

PersistenceDiagram parse_diagram_csv(std::istream& in, FiltrationKind kind,
                                     std::optional<double> essential_cap) {
    PersistenceDiagram d;
    d.filtration = kind;
    d.essential_cap = essential_cap;
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim,birth,death", 0) != 0)
        throw std::runtime_error("diagram CSV: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        while (fields.size() < 7) fields.emplace_back();
        PersistencePoint p;
        p.dim = std::stoi(fields[0]);
        p.birth = std::stod(fields[1]);
        p.birth_pixel = {std::stoi(fields[3]), std::stoi(fields[4])};
        if (fields[2] == "inf") {
            p.death = kInf;
            p.essential = true;
        } else {
            p.death = std::stod(fields[2]);
            p.death_pixel = PixelCoord{std::stoi(fields[5]), std::stoi(fields[6])};
        }
        d.points.push_back(p);
    }
    // Restore the essential flag of a capped diagram: the dim-0 point of
    // minimal birth whose death equals the cap (in sweep coordinates).
    if (essential_cap && !d.has_infinite_death()) {
        const double target = kind == FiltrationKind::Sublevel ? *essential_cap
                                                               : 1.0 - *essential_cap;
        PersistencePoint* best = nullptr;
        for (auto& p : d.points)
            if (p.dim == 0 && p.death == target && (!best || p.birth < best->birth)) best = &p;
        if (best) best->essential = true;
    }
    return d;
}

PersistenceDiagram read_diagram_csv(const std::string& path, FiltrationKind kind,
                                    std::optional<double> essential_cap) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return parse_diagram_csv(in, kind, essential_cap);
}

}  // namespace toposeg
