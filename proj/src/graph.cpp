#include "netselect/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace netselect {

SensorGraph SensorGraph::from_adjacency(const Matrix& adjacency, std::vector<Coord> coords) {
    SensorGraph g;
    g.adjacency = SymMatrix(adjacency);
    const Index n = g.adjacency.size();
    if (!coords.empty() && static_cast<Index>(coords.size()) != n) {
        throw GraphError("SensorGraph: coordinate count does not match adjacency size");
    }
    for (Index i = 0; i < n; ++i) {
        if (g.adjacency(i, i) != 0.0) {
            throw GraphError("SensorGraph: adjacency diagonal must be zero");
        }
        for (Index j = i + 1; j < n; ++j) {
            if (g.adjacency(i, j) < 0.0) {
                throw GraphError("SensorGraph: negative edge weight");
            }
            if (g.adjacency(i, j) > 0.0) {
                ++g.edge_count;
            }
        }
    }
    const auto comps = connected_components(g.adjacency.mat());
    if (comps.size() > 1) {
        std::ostringstream os;
        os << "graph is disconnected: " << comps.size() << " components";
        for (const auto& c : comps) {
            os << " {";
            for (std::size_t k = 0; k < c.size(); ++k) {
                os << (k ? "," : "") << c[k];
            }
            os << "}";
        }
        throw GraphError(os.str());
    }
    g.coords = std::move(coords);
    return g;
}

std::vector<std::vector<Index>> connected_components(const Matrix& adjacency) {
    const Index n = adjacency.rows();
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    std::vector<std::vector<Index>> comps;
    for (Index s = 0; s < n; ++s) {
        if (label[s] >= 0) {
            continue;
        }
        const int id = static_cast<int>(comps.size());
        comps.emplace_back();
        std::vector<Index> stack{s};
        label[s] = id;
        while (!stack.empty()) {
            const Index u = stack.back();
            stack.pop_back();
            comps[id].push_back(u);
            for (Index v = 0; v < n; ++v) {
                if (label[v] < 0 && adjacency(u, v) > 0.0) {
                    label[v] = id;
                    stack.push_back(v);
                }
            }
        }
        std::sort(comps[id].begin(), comps[id].end());
    }
    return comps;
}

SensorGraph build_knn_graph(const std::vector<Coord>& coords, int k0, int k1, KnnOptions opts) {
    const auto n = static_cast<Index>(coords.size());
    if (k1 < 1 || k0 < k1 || n <= k0) {
        throw InputError("build_knn_graph: require n > k0 >= k1 >= 1");
    }
    for (const auto& c : coords) {
        if (!std::isfinite(c.lat) || !std::isfinite(c.lon)) {
            throw InputError("build_knn_graph: non-finite coordinate");
        }
    }

    Matrix dist(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double dl = coords[i].lat - coords[j].lat;
            const double dn = coords[i].lon - coords[j].lon;
            double d = std::sqrt(dl * dl + dn * dn);
            if (i != j && opts.distance_floor > 0.0) {
                d = std::max(d, opts.distance_floor);
            }
            dist(i, j) = d;
        }
    }

    // neighbours[i] = other nodes sorted by (distance, index)
    std::vector<std::vector<Index>> neighbours(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        auto& nb = neighbours[i];
        nb.reserve(static_cast<std::size_t>(n - 1));
        for (Index j = 0; j < n; ++j) {
            if (j != i) {
                nb.push_back(j);
            }
        }
        std::stable_sort(nb.begin(), nb.end(), [&](Index a, Index b) { return dist(i, a) < dist(i, b); });
    }

    Vector sigma(n);
    for (Index j = 0; j < n; ++j) {
        sigma(j) = dist(j, neighbours[j][static_cast<std::size_t>(k1 - 1)]);
        if (!(sigma(j) > 0.0)) {
            std::ostringstream os;
            os << "build_knn_graph: degenerate local scale at node " << j
               << " (coincident coordinates); enable the distance floor";
            throw GraphError(os.str());
        }
    }

    Matrix adj = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (int s = 0; s < k0; ++s) {
            const Index j = neighbours[i][static_cast<std::size_t>(s)];
            const double d = dist(i, j);
            const double w = std::exp(-d * d / (sigma(i) * sigma(j)));
            adj(i, j) = std::max(adj(i, j), w);
            adj(j, i) = std::max(adj(j, i), w);
        }
    }
    return SensorGraph::from_adjacency(adj, coords);
}

SymMatrix combinatorial_laplacian(const SensorGraph& g) {
    const Matrix& a = g.adjacency.mat();
    Matrix l = -a;
    l.diagonal() = a.rowwise().sum();
    return SymMatrix(l);
}

SymMatrix normalized_laplacian(const SensorGraph& g) {
    const Matrix& a = g.adjacency.mat();
    const Vector deg = a.rowwise().sum();
    for (Index i = 0; i < deg.size(); ++i) {
        if (!(deg(i) > 0.0)) {
            std::ostringstream os;
            os << "normalized_laplacian: node " << i << " has zero degree";
            throw GraphError(os.str());
        }
    }
    const Vector inv_sqrt = deg.array().rsqrt();
    Matrix l = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
    l.diagonal().setOnes();
    return SymMatrix(l);
}

double GraphSpectrum::zero_tolerance() const {
    const double top = eig.values.size() ? std::abs(eig.values(eig.values.size() - 1)) : 0.0;
    return 1e-8 * std::max(1.0, top);
}

GraphSpectrum make_spectrum(const SymMatrix& laplacian) {
    GraphSpectrum s{laplacian, sym_eig(laplacian)};
    const double tol = s.zero_tolerance();
    int zeros = 0;
    for (Index k = 0; k < s.eig.values.size(); ++k) {
        if (s.eig.values(k) < -tol) {
            throw GraphError("make_spectrum: Laplacian has a negative eigenvalue");
        }
        if (std::abs(s.eig.values(k)) <= tol) {
            ++zeros;
        }
    }
    if (zeros != 1) {
        std::ostringstream os;
        os << "make_spectrum: expected exactly one zero eigenvalue, found " << zeros;
        throw GraphError(os.str());
    }
    return s;
}

SpectralMap SpectralMap::custom(std::string name, std::function<double(double)> fn) {
    SpectralMap m(Kind::Custom, 0.0);
    m.name_ = std::move(name);
    m.fn_ = std::move(fn);
    return m;
}

SpectralMap SpectralMap::parse(const std::string& tag) {
    if (tag == "pinv") {
        return pseudo_inverse();
    }
    if (tag == "identity") {
        return identity();
    }
    const std::string prefix = "diffusion:";
    if (tag.rfind(prefix, 0) == 0) {
        try {
            return diffusion(std::stod(tag.substr(prefix.size())));
        } catch (const std::exception&) {
        }
    }
    throw InputError("unknown spectral map '" + tag + "' (expected pinv, identity, diffusion:<beta>)");
}

std::string SpectralMap::tag() const {
    switch (kind_) {
        case Kind::PseudoInverse: return "pinv";
        case Kind::Identity: return "identity";
        case Kind::Diffusion: {
            std::ostringstream os;
            os << "diffusion:" << beta_;
            return os.str();
        }
        case Kind::Custom: return name_;
    }
    return "unknown";
}

double SpectralMap::operator()(double lambda, double zero_tol) const {
    switch (kind_) {
        case Kind::PseudoInverse: return std::abs(lambda) <= zero_tol ? 0.0 : 1.0 / lambda;
        case Kind::Diffusion: return std::exp(-beta_ * lambda);
        case Kind::Identity: return 1.0;
        case Kind::Custom: return fn_(lambda);
    }
    return 0.0;
}

SymMatrix laplacian_kernel(const GraphSpectrum& spectrum, const SpectralMap& r) {
    const auto& vals = spectrum.eig.values;
    const double tol = spectrum.zero_tolerance();
    Vector mapped(vals.size());
    for (Index k = 0; k < vals.size(); ++k) {
        mapped(k) = r(vals(k), tol);
        if (!std::isfinite(mapped(k)) || mapped(k) < 0.0) {
            std::ostringstream os;
            os << "laplacian_kernel: spectral map '" << r.tag() << "' is negative or non-finite at eigenvalue "
               << vals(k);
            throw InputError(os.str());
        }
    }
    const Matrix& phi = spectrum.eig.vectors;
    return SymMatrix(phi * mapped.asDiagonal() * phi.transpose());
}

StGram st_gram_blocks(const SymMatrix& kernel, double gamma, int H, const std::vector<Index>& subset) {
    if (gamma < 0.0 || H < 0) {
        throw InputError("st_gram_blocks: require gamma >= 0 and H >= 0");
    }
    for (Index i : subset) {
        if (i < 0 || i >= kernel.size()) {
            throw InputError("st_gram_blocks: subset index out of range");
        }
    }
    const Matrix base = take(kernel.mat(), subset, subset);
    const Index m = base.rows();
    StGram out;
    for (int l = 0; l <= H; ++l) {
        out.blocks.push_back(base * std::exp(-gamma * static_cast<double>(l) * l));
    }
    out.assembled.resize(m * (H + 1), m * (H + 1));
    for (int r = 0; r <= H; ++r) {
        for (int c = 0; c <= H; ++c) {
            out.assembled.block(r * m, c * m, m, m) = out.blocks[static_cast<std::size_t>(std::abs(c - r))];
        }
    }
    return out;
}

}  // namespace netselect
