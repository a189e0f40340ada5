#pragma once

#include <string>
#include <vector>

#include "netselect/graph.hpp"
#include "netselect/select_linear.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

enum class KernelKind { Laplacian, SpatialTemporal, Autocovariance, Linear, Rbf };

std::string to_string(KernelKind k);
KernelKind parse_kernel_kind(const std::string& s);

struct KernelConfig {
    KernelKind kind = KernelKind::SpatialTemporal;
    double gamma = 0.0;   // RBF decay (time lag for spatial-temporal, node features for rbf)
    double lambda = 0.0;  // ridge strength
    int H = 0;
    SpectralMap spectral_map = SpectralMap::pseudo_inverse();
    double cg_eps = 1e-8;  // relative CG tolerance
    bool use_cg = false;

    void validate() const;
};

// Per-lag Gram matrices K(0), ..., K(H) over all N sensors, with K(-l) = K(l)^T.
struct LagKernel {
    std::vector<Matrix> lags;

    int max_lag() const { return static_cast<int>(lags.size()) - 1; }
    Index n() const { return lags.empty() ? 0 : lags[0].rows(); }
};

// K(l) = K_g exp(-gamma l^2).
LagKernel spatial_temporal_kernel(const SymMatrix& graph_kernel, double gamma, int H);
// K(l) = Gamma_hat(l); the linear kernel gives the same Gram for H = 0.
LagKernel autocovariance_kernel(const CovarianceBlocks& blocks, int H);
// K_ij = exp(-gamma * mean_t (x_it - x_jt)^2) on the training series (H = 0 only).
LagKernel rbf_node_kernel(const Matrix& x_train, double gamma);

// Dispatches on config.kind. `spectrum` is needed for laplacian and
// spatial-temporal kernels, `x_train` for rbf.
LagKernel make_lag_kernel(const KernelConfig& config, const GraphSpectrum* spectrum, const CovarianceBlocks& blocks,
                          const Matrix* x_train = nullptr);

// Theta_lambda = K_{I I^c} (K_{I^c} + lambda Id)^{-1}.
Matrix kernel_reconstructor(const Matrix& k_cross, const Matrix& k_observed, double lambda);

// tr(Sigma_I - 2 beta Theta^T + Theta alpha Theta^T), the training error of the
// kernel ridge reconstructor.
double criterion_kernel(const CovarianceBlocks& blocks, const LagKernel& kernel, const std::vector<Index>& turned_off,
                        double lambda, int H);

LagReconstructor fit_predict_kernel(const LagKernel& kernel, const std::vector<Index>& turned_off, double lambda,
                                    int H);

struct KernelGreedyOptions {
    double lambda = 0.0;
    int H = 0;
    double cg_eps = 1e-8;
    bool use_cg = false;
    int threads = 1;
};

// Greedy selection for kernel ridge reconstruction; with use_cg the per-candidate
// solve runs through conjugate gradient and falls back to the direct solve
// (recorded as a warning) if CG does not converge.
SelectionResult greedy_select_kernel(const CovarianceBlocks& blocks, const LagKernel& kernel, int p,
                                     KernelGreedyOptions opts);

struct MonotonicityReport {
    std::vector<double> values;
    bool nondecreasing = true;
    bool minimum_at_first = true;
};

// Kernel criterion with the autocovariance kernel along an ascending lambda grid.
MonotonicityReport lambda_monotonicity_check(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off,
                                             const std::vector<double>& lambdas, int H, double slack = 1e-10);

}  // namespace netselect
