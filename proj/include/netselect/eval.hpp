#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "netselect/graph.hpp"
#include "netselect/reconstructor.hpp"
#include "netselect/select_linear.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

struct EvalReport {
    std::string method;
    std::vector<Index> selected;
    std::vector<std::string> selected_ids;
    double test_mse = 0.0;
    double validation_mse = 0.0;
    double baseline_mean = 0.0;
    int baseline_draws = 0;
    int baseline_skipped = 0;
    nlohmann::json hyperparams = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::vector<std::string> flags;

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    bool operator==(const EvalReport&) const = default;
};

// Mean over test hours of ||x_{I,t} - x_hat_{I,t}||^2.
double test_mse(const Reconstructor& rec, const Matrix& x, const std::vector<Index>& turned_off, const Split& split);

// Fits a reconstructor for a turned-off set.
using ReconstructorFactory = std::function<std::unique_ptr<Reconstructor>(const std::vector<Index>&)>;

struct BaselineResult {
    double mean = 0.0;
    int draws = 0;
    int skipped = 0;
    std::vector<double> values;  // per successful draw, in draw order
};

// Uniform size-p subsets; draw d uses its own RNG stream derived from (seed, d).
std::vector<Index> random_subset(Index n, int p, std::uint64_t seed, int draw);

BaselineResult random_baseline(const ReconstructorFactory& factory, const Matrix& x, const Split& split, int p,
                               int draws = 100, std::uint64_t seed = 0, int threads = 1);

// gamma = -ln(r_s) / H^2.
double gamma_grid(int H, double r_s = 0.5);

inline const std::vector<double> kLambdaCoefficients{0.001, 0.00325, 0.0055, 0.00775, 0.01};

struct LambdaGrid {
    std::vector<double> values;
    std::string warning;
};
LambdaGrid lambda_grid(double lambda_max, const std::vector<double>& coefficients = kLambdaCoefficients);

using GridSelect = std::function<SelectionResult(const nlohmann::json& config)>;
using GridFit = std::function<std::unique_ptr<Reconstructor>(const nlohmann::json& config,
                                                              const std::vector<Index>& turned_off)>;

struct GridSearchResult {
    std::size_t best_index = 0;
    nlohmann::json best_config;
    SelectionResult selection;
    std::vector<double> validation_mse;  // NaN for failed configs
    std::vector<std::string> failures;
};

// Selects and fits per config, scores on the validation rows, returns the
// first config with the smallest validation error.
GridSearchResult grid_search(const std::vector<nlohmann::json>& grid, const GridSelect& select, const GridFit& fit,
                             const Matrix& x, const Split& split);

struct SynthOptions {
    double coupling = 0.9;       // var1: coefficient matrix coupling * D^-1/2 A D^-1/2
    int modes = 3;               // graph-smooth: lowest Laplacian eigenvectors used
    double ar = 0.9;             // graph-smooth: AR(1) coefficient of the mode amplitudes
    double noise = 0.5;          // graph-smooth: per-sensor noise level
    double redundant_noise = 0.005;
    std::vector<Index> redundant;   // sensors with tiny noise
    std::vector<Index> pure_noise;  // sensors replaced by independent unit noise
    int burn_in = 500;
    std::int64_t start = 1451606400;  // 2016-01-01T00:00:00Z
};

// Model tags: var1, graph-smooth.
PanelSeries synth_generate(const SensorGraph& graph, Index T, const std::string& model, std::uint64_t seed,
                           const SynthOptions& opts = {});

// Uniform coordinates in a 0.1 x 0.1 degree box.
std::vector<Coord> synth_coords(Index n, std::uint64_t seed);

// Rows = method, columns = H; cells "mse (baseline)".
std::string summary_csv(const std::vector<EvalReport>& reports);

// Default turned-off count ceil(0.1 N).
int default_p(Index n);

}  // namespace netselect
