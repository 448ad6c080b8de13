#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toposeg/grid_image.hpp"

namespace toposeg {

enum class FiltrationKind { Sublevel, Superlevel };

struct PixelCoord {
    int x = 0;
    int y = 0;
    bool operator==(const PixelCoord&) const = default;
};

/// One feature of the filtration. Coordinates are in the filtration's own
/// scale: sublevel points satisfy birth <= death, superlevel points
/// birth >= death (both map to the original pixel values at the critical
/// pixels). An uncapped essential class stores death = +infinity.
struct PersistencePoint {
    int dim = 0;  // 0 = component, 1 = loop
    double birth = 0.0;
    double death = 0.0;
    PixelCoord birth_pixel;
    std::optional<PixelCoord> death_pixel;
    bool essential = false;

    double lifetime() const;  // |death - birth|, +inf for uncapped essentials
};

struct PersistenceDiagram {
    std::vector<PersistencePoint> points;
    FiltrationKind filtration = FiltrationKind::Sublevel;
    std::optional<double> essential_cap;

    bool has_infinite_death() const;
};

struct BettiPair {
    int beta0 = 0;
    int beta1 = 0;
    bool operator==(const BettiPair&) const = default;
};

/// Exact persistence diagram (dims 0 and 1) of the cubical complex whose
/// vertices are pixels, edges join 4-adjacent pixels, and squares fill 2x2
/// blocks, with cell value = max of its vertices. Superlevel is computed as
/// sublevel of the inverted image with points mapped back by
/// (b, d) -> (1-b, 1-d), pixels preserved. Zero-persistence pairs are
/// dropped. With essential_cap set, the single essential dim-0 class gets
/// death = cap (in the sweep's own coordinates before mapping back) and its
/// death pixel is the arg-max pixel of the swept image, row-major ties.
PersistenceDiagram compute_persistence(const GrayImage& img, FiltrationKind kind,
                                       std::optional<double> essential_cap);

/// beta0 = 4-connected components of true pixels; beta1 = 8-connected
/// components of false pixels that do not touch the image border.
BettiPair betti_numbers(const BinaryImage& img);

/// V - E + F over the cells spanned by true pixels.
long long euler_characteristic(const BinaryImage& img);

/// Betti numbers of the sublevel (value <= t) or superlevel (value >= t)
/// mask at each threshold. Thresholds must be sorted ascending.
std::vector<BettiPair> betti_curve(const GrayImage& img, FiltrationKind kind,
                                   const std::vector<double>& thresholds);

/// True when the point is alive at threshold t: sublevel birth <= t < death,
/// superlevel death < t <= birth (essentials never die).
bool point_alive_at(const PersistencePoint& p, double t, FiltrationKind kind);

/// CSV with header dim,birth,death,birth_x,birth_y,death_x,death_y; an
/// infinite death is written as the literal `inf` with empty coordinates;
/// rows sorted by (dim, birth, death); 9 significant digits.
std::string diagram_to_csv(const PersistenceDiagram& diagram);
void write_diagram_csv(const PersistenceDiagram& diagram, const std::string& path);
PersistenceDiagram parse_diagram_csv(std::istream& in, FiltrationKind kind,
                                     std::optional<double> essential_cap);
PersistenceDiagram read_diagram_csv(const std::string& path, FiltrationKind kind,
                                    std::optional<double> essential_cap);

}  // namespace toposeg
