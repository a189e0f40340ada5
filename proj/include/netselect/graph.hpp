#pragma once

#include <functional>
#include <string>
#include <vector>

#include "netselect/numerics.hpp"

namespace netselect {

struct Coord {
    double lat = 0.0;
    double lon = 0.0;
};

// Weighted undirected graph over the sensors. Adjacency has a zero diagonal,
// nonnegative symmetric weights, and the graph is connected.
struct SensorGraph {
    std::vector<Coord> coords;
    SymMatrix adjacency;
    std::size_t edge_count = 0;

    Index size() const { return adjacency.size(); }

    // Validates the invariants above; throws GraphError on violation.
    static SensorGraph from_adjacency(const Matrix& adjacency, std::vector<Coord> coords = {});
};

struct KnnOptions {
    // Floor on pairwise distances so coincident stations get a usable local
    // scale. Zero disables the floor; 1e-9 is the recommended value.
    double distance_floor = 0.0;
};

// Self-tuning kNN graph: each node links to its k0 nearest neighbours with
// weight exp(-d^2 / (sigma_i sigma_j)), sigma_j being the distance from j to
// its k1-th nearest neighbour. Directed assignments merge by elementwise max.
// Distances are Euclidean on raw (lat, lon); neighbour ties go to the lower index.
SensorGraph build_knn_graph(const std::vector<Coord>& coords, int k0, int k1, KnnOptions opts = {});

// Connected components as sorted node lists, ordered by their smallest node.
std::vector<std::vector<Index>> connected_components(const Matrix& adjacency);

SymMatrix combinatorial_laplacian(const SensorGraph& g);

// D^{-1/2} L D^{-1/2}.
SymMatrix normalized_laplacian(const SensorGraph& g);

struct GraphSpectrum {
    SymMatrix laplacian;
    EigenPair eig;

    // Eigenvalues with |lambda| <= this count as zero.
    double zero_tolerance() const;
};

// Eigen-decomposes a Laplacian and checks lambda_0 = 0 with multiplicity one.
GraphSpectrum make_spectrum(const SymMatrix& laplacian);

// Spectral map r(lambda) for the Laplacian kernel Phi r(Lambda) Phi^T.
class SpectralMap {
public:
    enum class Kind { PseudoInverse, Diffusion, Identity, Custom };

    static SpectralMap pseudo_inverse() { return SpectralMap(Kind::PseudoInverse, 0.0); }
    static SpectralMap diffusion(double beta) { return SpectralMap(Kind::Diffusion, beta); }
    static SpectralMap identity() { return SpectralMap(Kind::Identity, 0.0); }
    static SpectralMap custom(std::string name, std::function<double(double)> fn);
    // Parses "pinv", "identity", "diffusion:<beta>".
    static SpectralMap parse(const std::string& tag);

    Kind kind() const { return kind_; }
    double beta() const { return beta_; }
    std::string tag() const;

    // zero_tol decides which eigenvalues count as the null space.
    double operator()(double lambda, double zero_tol) const;

private:
    SpectralMap(Kind k, double beta) : kind_(k), beta_(beta) {}
    Kind kind_;
    double beta_;
    std::string name_;
    std::function<double(double)> fn_;
};

// K = Phi r(Lambda) Phi^T. Throws InputError if r is negative on the spectrum.
SymMatrix laplacian_kernel(const GraphSpectrum& spectrum,
                           const SpectralMap& r = SpectralMap::pseudo_inverse());

// Gram blocks of the spatial-temporal product kernel on a node subset:
// K(l) = K_g|subset * exp(-gamma l^2), l = 0..H, and the assembled
// (H+1)x(H+1) block matrix whose (r, c) block is K(|c - r|).
struct StGram {
    std::vector<Matrix> blocks;
    Matrix assembled;
};

StGram st_gram_blocks(const SymMatrix& kernel, double gamma, int H, const std::vector<Index>& subset);

}  // namespace netselect
