#include "netselect/select_kernel.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace netselect {

std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::Laplacian: return "laplacian";
        case KernelKind::SpatialTemporal: return "spatial-temporal";
        case KernelKind::Autocovariance: return "autocovariance";
        case KernelKind::Linear: return "linear";
        case KernelKind::Rbf: return "rbf";
    }
    return "unknown";
}

KernelKind parse_kernel_kind(const std::string& s) {
    for (auto k : {KernelKind::Laplacian, KernelKind::SpatialTemporal, KernelKind::Autocovariance, KernelKind::Linear,
                   KernelKind::Rbf}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    throw InputError("unknown kernel '" + s + "'");
}

void KernelConfig::validate() const {
    if (lambda < 0.0 || gamma < 0.0 || H < 0 || !(cg_eps > 0.0)) {
        throw InputError("KernelConfig: require lambda >= 0, gamma >= 0, H >= 0, eps > 0");
    }
}

LagKernel spatial_temporal_kernel(const SymMatrix& graph_kernel, double gamma, int H) {
    if (gamma < 0.0 || H < 0) {
        throw InputError("spatial_temporal_kernel: require gamma >= 0 and H >= 0");
    }
    LagKernel k;
    for (int l = 0; l <= H; ++l) {
        k.lags.push_back(graph_kernel.mat() * std::exp(-gamma * static_cast<double>(l) * l));
    }
    return k;
}

LagKernel autocovariance_kernel(const CovarianceBlocks& blocks, int H) {
    if (H < 0 || H > blocks.max_lag()) {
        throw InputError("autocovariance_kernel: lag depth exceeds estimated lags");
    }
    LagKernel k;
    k.lags.assign(blocks.gammas.begin(), blocks.gammas.begin() + H + 1);
    return k;
}

LagKernel rbf_node_kernel(const Matrix& x_train, double gamma) {
    if (gamma < 0.0 || x_train.cols() == 0) {
        throw InputError("rbf_node_kernel: require gamma >= 0 and training data");
    }
    const Index n = x_train.rows();
    const auto T = static_cast<double>(x_train.cols());
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (Index j = i + 1; j < n; ++j) {
            const double d2 = (x_train.row(i) - x_train.row(j)).squaredNorm() / T;
            k(i, j) = k(j, i) = std::exp(-gamma * d2);
        }
    }
    return LagKernel{{k}};
}

LagKernel make_lag_kernel(const KernelConfig& config, const GraphSpectrum* spectrum, const CovarianceBlocks& blocks,
                          const Matrix* x_train) {
    config.validate();
    switch (config.kind) {
        case KernelKind::Laplacian:
        case KernelKind::SpatialTemporal: {
            if (spectrum == nullptr) {
                throw InputError("make_lag_kernel: graph kernels need the graph spectrum");
            }
            if (config.kind == KernelKind::Laplacian && config.H != 0) {
                throw InputError("make_lag_kernel: the laplacian kernel has no temporal part; use spatial-temporal");
            }
            return spatial_temporal_kernel(laplacian_kernel(*spectrum, config.spectral_map), config.gamma, config.H);
        }
        case KernelKind::Autocovariance:
        case KernelKind::Linear: return autocovariance_kernel(blocks, config.H);
        case KernelKind::Rbf:
            if (x_train == nullptr) {
                throw InputError("make_lag_kernel: rbf kernel needs training series");
            }
            if (config.H != 0) {
                throw InputError("make_lag_kernel: rbf node kernel supports H = 0 only");
            }
            return rbf_node_kernel(*x_train, config.gamma);
    }
    throw InputError("make_lag_kernel: unknown kernel");
}

Matrix kernel_reconstructor(const Matrix& k_cross, const Matrix& k_observed, double lambda) {
    if (lambda < 0.0) {
        throw InputError("kernel_reconstructor: lambda must be nonnegative");
    }
    if (k_observed.rows() != k_observed.cols() || k_cross.cols() != k_observed.rows()) {
        throw InputError("kernel_reconstructor: shape mismatch");
    }
    Matrix reg = k_observed;
    reg.diagonal().array() += lambda;
    return solve_spd(reg, k_cross.transpose()).transpose();
}

namespace {

double kernel_trace_value(const Matrix& sigma_i, const AssembledBlocks& cov, const Matrix& theta) {
    return (sigma_i - 2.0 * cov.beta * theta.transpose() + theta * cov.alpha * theta.transpose()).trace();
}

}  // namespace

double criterion_kernel(const CovarianceBlocks& blocks, const LagKernel& kernel, const std::vector<Index>& turned_off,
                        double lambda, int H) {
    const auto rest = complement(turned_off, blocks.n());
    if (turned_off.empty() || rest.empty()) {
        throw InputError("criterion_kernel: turned-off set must be a nonempty proper subset");
    }
    if (kernel.n() != blocks.n() || H > kernel.max_lag()) {
        throw InputError("criterion_kernel: kernel does not cover the sensors or lags");
    }
    const auto cov = assemble_lag_blocks(blocks.gammas, turned_off, rest, H);
    const auto gram = assemble_lag_blocks(kernel.lags, turned_off, rest, H);
    const Matrix theta = kernel_reconstructor(gram.beta, gram.alpha, lambda);
    return kernel_trace_value(take(blocks.sigma.mat(), turned_off, turned_off), cov, theta);
}

LagReconstructor fit_predict_kernel(const LagKernel& kernel, const std::vector<Index>& turned_off, double lambda,
                                    int H) {
    auto rest = complement(turned_off, kernel.n());
    if (turned_off.empty() || rest.empty()) {
        throw InputError("fit_predict_kernel: turned-off set must be a nonempty proper subset");
    }
    const auto gram = assemble_lag_blocks(kernel.lags, turned_off, rest, H);
    return LagReconstructor(turned_off, std::move(rest), H, kernel_reconstructor(gram.beta, gram.alpha, lambda));
}

SelectionResult greedy_select_kernel(const CovarianceBlocks& blocks, const LagKernel& kernel, int p,
                                     KernelGreedyOptions opts) {
    const Index n = blocks.n();
    if (p < 1 || p >= n) {
        throw InputError("greedy_select_kernel: require 1 <= p < N");
    }
    if (opts.H < 0 || opts.H > blocks.max_lag() || opts.H > kernel.max_lag() || kernel.n() != n) {
        throw InputError("greedy_select_kernel: kernel or covariance does not cover the requested lags");
    }
    if (opts.lambda < 0.0 || !(opts.cg_eps > 0.0)) {
        throw InputError("greedy_select_kernel: require lambda >= 0 and eps > 0");
    }
    SelectionResult res;
    res.method = opts.H == 0 ? "kernel-h0" : "kernel-h";
    res.hyperparams = {{"H", opts.H}, {"lambda", opts.lambda}, {"p", p}, {"use_cg", opts.use_cg},
                       {"cg_eps", opts.cg_eps}};

    std::vector<Index> remaining(static_cast<std::size_t>(n));
    std::iota(remaining.begin(), remaining.end(), Index{0});
    for (int step = 0; step < p; ++step) {
        std::vector<double> values(remaining.size());
        std::vector<std::string> notes(remaining.size());
        parallel_for(remaining.size(), opts.threads, [&](std::size_t k) {
            const Index i = remaining[k];
            std::vector<Index> s;
            for (Index j : remaining) {
                if (j != i) {
                    s.push_back(j);
                }
            }
            const double var_i = blocks.sigma(i, i);
            if (s.empty()) {
                values[k] = var_i;
                return;
            }
            const auto cov = assemble_lag_blocks(blocks.gammas, {i}, s, opts.H);
            const auto gram = assemble_lag_blocks(kernel.lags, {i}, s, opts.H);
            Matrix reg = gram.alpha;
            reg.diagonal().array() += opts.lambda;
            Vector theta_t;
            if (opts.use_cg) {
                try {
                    theta_t = conjugate_gradient(reg, gram.beta.row(0).transpose(), opts.cg_eps).x;
                } catch (const ConvergenceError& e) {
                    std::ostringstream os;
                    os << "step " << step + 1 << " candidate " << i << ": CG fell back to direct solve ("
                       << e.what() << ")";
                    notes[k] = os.str();
                }
            }
            if (theta_t.size() == 0) {
                theta_t = solve_spd(reg, gram.beta.transpose()).col(0);
            }
            const double cross = cov.beta.row(0).dot(theta_t);
            values[k] = var_i - 2.0 * cross + theta_t.dot(cov.alpha * theta_t);
        });
        for (auto& note : notes) {
            if (!note.empty()) {
                res.warnings.push_back(std::move(note));
            }
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < values.size(); ++k) {
            if (values[k] < values[best]) {
                best = k;
            }
        }
        res.order.push_back(remaining[best]);
        res.step_values.push_back(values[best]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return res;
}

MonotonicityReport lambda_monotonicity_check(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off,
                                             const std::vector<double>& lambdas, int H, double slack) {
    const auto kernel = autocovariance_kernel(blocks, H);
    MonotonicityReport rep;
    for (double lam : lambdas) {
        rep.values.push_back(criterion_kernel(blocks, kernel, turned_off, lam, H));
    }
    for (std::size_t k = 1; k < rep.values.size(); ++k) {
        if (lambdas[k] < lambdas[k - 1]) {
            throw InputError("lambda_monotonicity_check: grid must be ascending");
        }
        if (rep.values[k] < rep.values[k - 1] - slack) {
            rep.nondecreasing = false;
        }
        if (rep.values[k] < rep.values[0] - slack) {
            rep.minimum_at_first = false;
        }
    }
    return rep;
}

}  // namespace netselect
