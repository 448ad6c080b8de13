#pragma once

#include <optional>
#include <utility>

#include "toposeg/cubical_persistence.hpp"
#include "toposeg/grid_image.hpp"

namespace toposeg {

/// Homology dimensions participating in matching and loss.
struct HomologyDims {
    bool dim0 = true;
    bool dim1 = true;

    bool contains(int d) const { return d == 0 ? dim0 : dim1; }
};

/// A pair of the rank-by-lifetime matching. A missing side means the present
/// point is matched to its diagonal projection ((b+d)/2, (b+d)/2).
struct MatchedPair {
    int dim = 0;
    std::optional<PersistencePoint> from_f;
    std::optional<PersistencePoint> from_g;
};

struct DiagramMatching {
    std::vector<MatchedPair> pairs;
    HomologyDims dims_used;

    int pairs_in_dim(int d) const;
};

/// Per dimension independently: sort each diagram's points by decreasing
/// lifetime (ties by decreasing birth, then row-major birth pixel) and pair
/// rank-k with rank-k; surplus points go to the diagonal. Both diagrams must
/// be finite (essentials capped) and share the filtration kind.
DiagramMatching match_diagrams(const PersistenceDiagram& df, const PersistenceDiagram& dg,
                               HomologyDims dims);

/// Squared-distance diagram loss over the rank matching: sum of
/// (birth(p)-birth(p'))^2 + (death(p)-death(p'))^2, a diagonal-matched point
/// contributing (d-b)^2/2. Diagrams are computed with essential cap 1.0.
std::pair<double, DiagramMatching> topo_loss(const GrayImage& f, const GrayImage& g,
                                             HomologyDims dims, FiltrationKind kind);

/// Loss over an already-computed matching (no persistence recomputation).
double matching_loss(const DiagramMatching& matching);

/// Exact gradient of topo_loss with respect to f. Nonzero only at critical
/// pixels of D(f): 2*(birth - target) at each birth pixel and
/// 2*(death - target) at each organic death pixel; capped essential deaths
/// are constants and contribute nothing. Contributions accumulate.
GrayImage topo_loss_grad(const GrayImage& f, const GrayImage& g, HomologyDims dims,
                         FiltrationKind kind);

/// Gradient accumulated from a matching (f-side points drive the pixels).
GrayImage matching_gradient(const DiagramMatching& matching, int width, int height);

struct BceResult {
    double loss = 0.0;
    GrayImage grad;  // d(mean BCE)/df per pixel
};

/// Mean binary cross entropy with clamp epsilon 1e-7; g must be 0/1-valued.
BceResult bce_loss(const GrayImage& f, const GrayImage& g);
BceResult bce_loss(const GrayImage& f, const BinaryImage& g);

struct LossReport {
    double bce = 0.0;
    double topo = 0.0;
    double lambda = 0.0;
    double total = 0.0;  // bce + lambda * topo
    GrayImage grad_f;
    DiagramMatching matching;
};

/// Default topology weight: 1/12000.
inline constexpr double kDefaultLambda = 1.0 / 12000.0;

LossReport total_loss(const GrayImage& f, const GrayImage& g, double lambda, HomologyDims dims,
                      FiltrationKind kind);

}  // namespace toposeg
