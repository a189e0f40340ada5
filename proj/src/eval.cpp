#include "netselect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace netselect {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; one normal per call.
double normal(std::mt19937_64& rng) {
    double u = 0.0;
    do {
        u = uniform01(rng);
    } while (u <= 0.0);
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * uniform01(rng));
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
    return {{"method", method},
            {"selected", selected},
            {"selected_ids", selected_ids},
            {"test_mse", test_mse},
            {"validation_mse", validation_mse},
            {"baseline_mean", baseline_mean},
            {"baseline_draws", baseline_draws},
            {"baseline_skipped", baseline_skipped},
            {"hyperparams", hyperparams},
            {"seed", seed},
            {"flags", flags}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.method = j.at("method").get<std::string>();
        r.selected = j.at("selected").get<std::vector<Index>>();
        r.selected_ids = j.value("selected_ids", std::vector<std::string>{});
        r.test_mse = j.at("test_mse").get<double>();
        r.validation_mse = j.value("validation_mse", 0.0);
        r.baseline_mean = j.at("baseline_mean").get<double>();
        r.baseline_draws = j.at("baseline_draws").get<int>();
        r.baseline_skipped = j.value("baseline_skipped", 0);
        r.hyperparams = j.value("hyperparams", nlohmann::json::object());
        r.seed = j.value("seed", std::uint64_t{0});
        r.flags = j.value("flags", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("eval report json: ") + e.what());
    }
    if (r.test_mse < 0.0 || r.baseline_mean < 0.0 || r.baseline_draws < 0) {
        throw InputError("eval report json: negative error or draw count");
    }
    return r;
}

double test_mse(const Reconstructor& rec, const Matrix& x, const std::vector<Index>& turned_off, const Split& split) {
    split.validate(x.cols());
    if (rec.turned_off() != turned_off) {
        throw InputError("test_mse: reconstructor was fitted for a different turned-off set");
    }
    if (split.test_size() < 1) {
        throw InputError("test_mse: empty test interval");
    }
    return reconstruction_mse(rec, x, split.t0, split.t1);
}

std::vector<Index> random_subset(Index n, int p, std::uint64_t seed, int draw) {
    if (p < 1 || p > n) {
        throw InputError("random_subset: require 1 <= p <= N");
    }
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(draw))));
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    for (int k = 0; k < p; ++k) {
        const auto span = static_cast<std::uint64_t>(n - k);
        const auto j = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng() % span);
        std::swap(all[static_cast<std::size_t>(k)], all[j]);
    }
    std::vector<Index> out(all.begin(), all.begin() + p);
    std::sort(out.begin(), out.end());
    return out;
}

BaselineResult random_baseline(const ReconstructorFactory& factory, const Matrix& x, const Split& split, int p,
                               int draws, std::uint64_t seed, int threads) {
    if (draws < 1) {
        throw InputError("random_baseline: need at least one draw");
    }
    split.validate(x.cols());
    const Index n = x.rows();
    if (p < 1 || p >= n) {
        throw InputError("random_baseline: require 1 <= p < N");
    }
    std::vector<double> values(static_cast<std::size_t>(draws), std::numeric_limits<double>::quiet_NaN());
    parallel_for(static_cast<std::size_t>(draws), threads, [&](std::size_t d) {
        const auto subset = random_subset(n, p, seed, static_cast<int>(d));
        try {
            const auto rec = factory(subset);
            values[d] = test_mse(*rec, x, subset, split);
        } catch (const InputError&) {
            throw;
        } catch (const Error&) {
            // left as NaN and counted as skipped
        }
    });
    BaselineResult r;
    r.draws = draws;
    for (double v : values) {
        if (std::isnan(v)) {
            ++r.skipped;
        } else {
            r.values.push_back(v);
        }
    }
    if (r.values.empty()) {
        throw Error("random_baseline: every draw failed to fit");
    }
    r.mean = std::accumulate(r.values.begin(), r.values.end(), 0.0) / static_cast<double>(r.values.size());
    return r;
}

double gamma_grid(int H, double r_s) {
    if (H < 1) {
        throw InputError("gamma_grid: gamma is undefined for H = 0 (no temporal kernel)");
    }
    if (!(r_s > 0.0 && r_s < 1.0)) {
        throw InputError("gamma_grid: r_s must lie in (0, 1)");
    }
    return -std::log(r_s) / (static_cast<double>(H) * H);
}

LambdaGrid lambda_grid(double lambda_max, const std::vector<double>& coefficients) {
    if (lambda_max < 0.0 || !std::isfinite(lambda_max)) {
        throw InputError("lambda_grid: lambda_max must be finite and nonnegative");
    }
    LambdaGrid g;
    for (double a : coefficients) {
        g.values.push_back(a * lambda_max);
    }
    if (lambda_max == 0.0) {
        g.warning = "lambda_max is 0; every grid value is 0";
    }
    return g;
}

GridSearchResult grid_search(const std::vector<nlohmann::json>& grid, const GridSelect& select, const GridFit& fit,
                             const Matrix& x, const Split& split) {
    if (grid.empty()) {
        throw InputError("grid_search: empty grid");
    }
    split.validate(x.cols());
    if (split.validation_size() < 1) {
        throw InputError("grid_search: empty validation interval");
    }
    GridSearchResult res;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            auto sel = select(grid[c]);
            const auto rec = fit(grid[c], sel.order);
            v = reconstruction_mse(*rec, x, split.t_tv, split.t0);
            if (!found || v < best) {
                best = v;
                found = true;
                res.best_index = c;
                res.best_config = grid[c];
                res.selection = std::move(sel);
            }
        } catch (const Error& e) {
            res.failures.push_back("config " + grid[c].dump() + ": " + e.what());
        }
        res.validation_mse.push_back(v);
    }
    if (!found) {
        std::ostringstream os;
        os << "grid_search: every config failed";
        for (const auto& f : res.failures) {
            os << "; " << f;
        }
        throw Error(os.str());
    }
    return res;
}

PanelSeries synth_generate(const SensorGraph& graph, Index T, const std::string& model, std::uint64_t seed,
                           const SynthOptions& opts) {
    const Index n = graph.size();
    if (T < 1 || opts.burn_in < 0) {
        throw InputError("synth_generate: T must be positive");
    }
    for (Index i : opts.redundant) {
        if (i < 0 || i >= n) {
            throw InputError("synth_generate: redundant sensor out of range");
        }
    }
    for (Index i : opts.pure_noise) {
        if (i < 0 || i >= n) {
            throw InputError("synth_generate: pure-noise sensor out of range");
        }
    }
    std::mt19937_64 rng(splitmix64(seed));
    Matrix values(n, T);

    if (model == "var1") {
        const Vector deg = graph.adjacency.mat().rowwise().sum();
        const Vector inv_sqrt = deg.cwiseSqrt().cwiseInverse();
        const Matrix a = opts.coupling * inv_sqrt.asDiagonal() * graph.adjacency.mat() * inv_sqrt.asDiagonal();
        const EigenPair eig = sym_eig(SymMatrix(a));
        const double radius = std::max(std::abs(eig.values(0)), std::abs(eig.values(n - 1)));
        if (radius > 0.95) {
            throw StabilityError("synth_generate: VAR(1) spectral radius " + std::to_string(radius) +
                                 " exceeds 0.95");
        }
        Vector state = Vector::Zero(n);
        Vector e(n);
        for (Index t = -opts.burn_in; t < T; ++t) {
            for (Index i = 0; i < n; ++i) {
                e(i) = normal(rng);
            }
            state = a * state + e;
            if (t >= 0) {
                values.col(t) = state;
            }
        }
    } else if (model == "graph-smooth") {
        if (opts.modes < 1 || opts.modes > n || !(std::abs(opts.ar) < 1.0) || opts.noise < 0.0 ||
            opts.redundant_noise < 0.0) {
            throw InputError("synth_generate: bad graph-smooth options");
        }
        const auto spectrum = make_spectrum(combinatorial_laplacian(graph));
        const Matrix phi = spectrum.eig.vectors.leftCols(opts.modes);
        const double amp = std::sqrt(static_cast<double>(n) / opts.modes);
        const double innov = std::sqrt(1.0 - opts.ar * opts.ar);
        Vector noise_level = Vector::Constant(n, opts.noise);
        for (Index i : opts.redundant) {
            noise_level(i) = opts.redundant_noise;
        }
        std::set<Index> pure(opts.pure_noise.begin(), opts.pure_noise.end());
        Vector coef(opts.modes);
        for (Index k = 0; k < opts.modes; ++k) {
            coef(k) = normal(rng);
        }
        for (Index t = -opts.burn_in; t < T; ++t) {
            for (Index k = 0; k < opts.modes; ++k) {
                coef(k) = opts.ar * coef(k) + innov * normal(rng);
            }
            Vector eps(n);
            for (Index i = 0; i < n; ++i) {
                eps(i) = normal(rng);
            }
            if (t < 0) {
                continue;
            }
            const Vector signal = amp * (phi * coef);
            for (Index i = 0; i < n; ++i) {
                values(i, t) = pure.count(i) != 0 ? eps(i) : signal(i) + noise_level(i) * eps(i);
            }
        }
    } else {
        throw InputError("synth_generate: unknown model '" + model + "' (var1 | graph-smooth)");
    }

    PanelSeries p;
    for (Index i = 0; i < n; ++i) {
        p.sensor_ids.push_back("s" + std::to_string(i));
    }
    for (Index t = 0; t < T; ++t) {
        p.timestamps.push_back(opts.start + t * kSecondsPerHour);
    }
    p.values = std::move(values);
    return p;
}

std::vector<Coord> synth_coords(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ 0xc0c0c0c0ULL));
    std::vector<Coord> out;
    for (Index i = 0; i < n; ++i) {
        const double lat = 48.80 + 0.1 * uniform01(rng);
        const double lon = 2.25 + 0.1 * uniform01(rng);
        out.push_back({lat, lon});
    }
    return out;
}

std::string summary_csv(const std::vector<EvalReport>& reports) {
    std::set<int> hs;
    std::vector<std::string> methods;
    std::map<std::pair<std::string, int>, const EvalReport*> cells;
    for (const auto& r : reports) {
        const int h = r.hyperparams.value("H", 0);
        hs.insert(h);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            methods.push_back(r.method);
        }
        cells[{r.method, h}] = &r;
    }
    std::ostringstream os;
    os << "method";
    for (int h : hs) {
        os << ",H=" << h;
    }
    os << '\n';
    char buf[64];
    for (const auto& m : methods) {
        os << m;
        for (int h : hs) {
            os << ',';
            const auto it = cells.find({m, h});
            if (it != cells.end()) {
                std::snprintf(buf, sizeof buf, "%.2f (%.2f)", it->second->test_mse, it->second->baseline_mean);
                os << buf;
            } else {
                os << '/';
            }
        }
        os << '\n';
    }
    return os.str();
}

int default_p(Index n) {
    if (n < 2) {
        throw InputError("default_p: need at least two sensors");
    }
    const int p = static_cast<int>(std::ceil(0.1 * static_cast<double>(n) - 1e-12));
    return std::clamp(p, 1, static_cast<int>(n) - 1);
}

}  // namespace netselect
