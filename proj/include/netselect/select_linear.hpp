#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netselect/numerics.hpp"
#include "netselect/reconstructor.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

// Ordered turned-off sensors i_(1), ..., i_(p) with the criterion minimum
// reached at each greedy step (or the per-sensor score for network methods).
struct SelectionResult {
    std::string method;  // linear-h0 | linear-h | kernel-h0 | kernel-h | gcn-dropout | gcn-mask
    nlohmann::json hyperparams = nlohmann::json::object();
    std::vector<Index> order;
    std::vector<double> step_values;
    std::vector<std::string> warnings;

    // Checks: no duplicates, step values finite, |order| == |step_values|.
    void validate() const;
};

// sigma^2_{i|S} = Sigma_ii - Sigma_iS Sigma_S^{-1} Sigma_Si.
double partial_variance(const SymMatrix& sigma, Index i, const std::vector<Index>& conditioning);

// tr(Sigma_I - Sigma_{I I^c} Sigma_{I^c}^{-1} Sigma_{I^c I}).
double criterion_linear_h0(const SymMatrix& sigma, const std::vector<Index>& turned_off);

// tr(Sigma_I - beta^H (alpha^H)^{-1} beta^H^T) with Toeplitz lag blocks.
double criterion_linear_h(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off, int H);

struct GreedyOptions {
    int threads = 1;
    // Evaluates every candidate of a step from one inverse of the remaining
    // set's lag Gram (bordered downdate) instead of refactorizing per candidate.
    bool fast_downdate = false;
};

// Greedy selection for linear reconstruction (H = 0 or H > 0). Ties go to the
// lowest sensor index.
SelectionResult greedy_select_linear(const CovarianceBlocks& blocks, int p, int H, GreedyOptions opts = {});
SelectionResult greedy_select_linear(const SymMatrix& sigma, int p, GreedyOptions opts = {});

struct ExhaustiveResult {
    std::vector<Index> set;  // sorted
    double value = 0.0;
    std::size_t evaluations = 0;
};

using SetCriterion = std::function<double(const std::vector<Index>&)>;

inline constexpr std::size_t kDefaultExhaustiveBudget = 2'000'000;

// Global minimiser over all size-p subsets of [0, n), visited in lexicographic
// order; the first minimiser wins ties. Throws BudgetError if C(n, p) > budget.
ExhaustiveResult exhaustive_select(Index n, int p, const SetCriterion& criterion,
                                   std::size_t budget = kDefaultExhaustiveBudget);

// log det Sigma_{I^c}.
double entropy_criterion(const SymMatrix& sigma, const std::vector<Index>& turned_off);

// Theta = beta^H (alpha^H)^{-1} fitted from the lag blocks.
LagReconstructor fit_predict_linear(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off, int H);

}  // namespace netselect
