#include "netselect/select_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace netselect {

void SelectionResult::validate() const {
    std::set<Index> seen(order.begin(), order.end());
    if (seen.size() != order.size()) {
        throw InputError("SelectionResult: duplicate sensor in order");
    }
    if (!step_values.empty() && step_values.size() != order.size()) {
        throw InputError("SelectionResult: step value count does not match order");
    }
    for (double v : step_values) {
        if (!std::isfinite(v)) {
            throw InputError("SelectionResult: non-finite step value");
        }
    }
}

double partial_variance(const SymMatrix& sigma, Index i, const std::vector<Index>& conditioning) {
    if (i < 0 || i >= sigma.size()) {
        throw InputError("partial_variance: sensor index out of range");
    }
    if (std::find(conditioning.begin(), conditioning.end(), i) != conditioning.end()) {
        throw InputError("partial_variance: sensor is part of its conditioning set");
    }
    if (conditioning.empty()) {
        return sigma(i, i);
    }
    const std::vector<Index> target{i};
    const Matrix s_ss = take(sigma.mat(), conditioning, conditioning);
    const Matrix s_si = take(sigma.mat(), conditioning, target);
    const Matrix coef = solve_spd(s_ss, s_si);
    return sigma(i, i) - (s_si.transpose() * coef)(0, 0);
}

double criterion_linear_h0(const SymMatrix& sigma, const std::vector<Index>& turned_off) {
    const auto rest = complement(turned_off, sigma.size());
    if (turned_off.empty() || rest.empty()) {
        throw InputError("criterion_linear_h0: turned-off set must be a nonempty proper subset");
    }
    const Matrix s_i = take(sigma.mat(), turned_off, turned_off);
    const Matrix s_ic = take(sigma.mat(), turned_off, rest);
    const Matrix s_c = take(sigma.mat(), rest, rest);
    const Matrix coef = solve_spd(s_c, s_ic.transpose());
    return (s_i - s_ic * coef).trace();
}

double criterion_linear_h(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off, int H) {
    const auto rest = complement(turned_off, blocks.n());
    if (turned_off.empty() || rest.empty()) {
        throw InputError("criterion_linear_h: turned-off set must be a nonempty proper subset");
    }
    const auto ab = assemble_lag_blocks(blocks.gammas, turned_off, rest, H);
    const Matrix coef = solve_spd(ab.alpha, ab.beta.transpose());
    const Matrix s_i = take(blocks.sigma.mat(), turned_off, turned_off);
    return (s_i - ab.beta * coef).trace();
}

namespace {

// Value of the one-sensor criterion for candidate i against S = remaining \ {i}.
double candidate_value(const CovarianceBlocks& blocks, Index i, const std::vector<Index>& remaining, int H) {
    std::vector<Index> s;
    s.reserve(remaining.size());
    for (Index j : remaining) {
        if (j != i) {
            s.push_back(j);
        }
    }
    const double var_i = blocks.sigma(i, i);
    if (s.empty()) {
        return var_i;
    }
    const auto ab = assemble_lag_blocks(blocks.gammas, {i}, s, H);
    const Matrix coef = solve_spd(ab.alpha, ab.beta.transpose());
    return var_i - (ab.beta * coef)(0, 0);
}

// All candidate values of one step from P = alpha_R^{-1}. Dropping the lagged
// copies D of candidate i from the joint Gram leaves [M^{-1}]_00 =
// P_00 - P_0D P_DD^{-1} P_D0, and the partial variance is its reciprocal.
std::vector<double> downdated_values(const CovarianceBlocks& blocks, const std::vector<Index>& remaining, int H,
                                     int threads) {
    const auto m = static_cast<Index>(remaining.size());
    const Matrix alpha = assemble_lag_blocks(blocks.gammas, {}, remaining, H).alpha;
    const Matrix inv = solve_spd(alpha, Matrix::Identity(alpha.rows(), alpha.cols()));
    std::vector<double> out(remaining.size());
    parallel_for(remaining.size(), threads, [&](std::size_t k) {
        const Index pos = static_cast<Index>(k);
        double p00 = inv(pos, pos);
        if (H > 0) {
            std::vector<Index> d;
            for (int l = 1; l <= H; ++l) {
                d.push_back(l * m + pos);
            }
            const std::vector<Index> zero{pos};
            const Matrix p_dd = take(inv, d, d);
            const Matrix p_d0 = take(inv, d, zero);
            p00 -= (p_d0.transpose() * solve_spd(p_dd, p_d0))(0, 0);
        }
        out[k] = 1.0 / p00;
    });
    return out;
}

}  // namespace

SelectionResult greedy_select_linear(const CovarianceBlocks& blocks, int p, int H, GreedyOptions opts) {
    const Index n = blocks.n();
    if (p < 1 || p >= n) {
        throw InputError("greedy_select_linear: require 1 <= p < N");
    }
    if (H < 0 || H > blocks.max_lag()) {
        throw InputError("greedy_select_linear: lag depth exceeds estimated lags");
    }
    SelectionResult res;
    res.method = H == 0 ? "linear-h0" : "linear-h";
    res.hyperparams = {{"H", H}, {"p", p}, {"fast_downdate", opts.fast_downdate}};

    std::vector<Index> remaining(static_cast<std::size_t>(n));
    std::iota(remaining.begin(), remaining.end(), Index{0});
    for (int step = 0; step < p; ++step) {
        std::vector<double> values;
        if (opts.fast_downdate) {
            values = downdated_values(blocks, remaining, H, opts.threads);
        } else {
            values.resize(remaining.size());
            parallel_for(remaining.size(), opts.threads,
                         [&](std::size_t k) { values[k] = candidate_value(blocks, remaining[k], remaining, H); });
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

SelectionResult greedy_select_linear(const SymMatrix& sigma, int p, GreedyOptions opts) {
    CovarianceBlocks blocks;
    blocks.sigma = sigma;
    blocks.gammas = {sigma.mat()};
    return greedy_select_linear(blocks, p, 0, opts);
}

ExhaustiveResult exhaustive_select(Index n, int p, const SetCriterion& criterion, std::size_t budget) {
    if (p < 1 || p > n) {
        throw InputError("exhaustive_select: require 1 <= p <= N");
    }
    // C(n, p) with early exit once past the budget.
    double count = 1.0;
    for (int k = 1; k <= p; ++k) {
        count = count * static_cast<double>(n - p + k) / k;
    }
    if (count > static_cast<double>(budget)) {
        std::ostringstream os;
        os << "exhaustive_select: C(" << n << ", " << p << ") = " << count << " exceeds budget " << budget;
        throw BudgetError(os.str());
    }
    ExhaustiveResult best;
    best.value = std::numeric_limits<double>::infinity();
    std::vector<Index> comb(static_cast<std::size_t>(p));
    std::iota(comb.begin(), comb.end(), Index{0});
    while (true) {
        const double v = criterion(comb);
        ++best.evaluations;
        if (v < best.value) {
            best.value = v;
            best.set = comb;
        }
        int k = p - 1;
        while (k >= 0 && comb[static_cast<std::size_t>(k)] == n - p + k) {
            --k;
        }
        if (k < 0) {
            break;
        }
        ++comb[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < p; ++j) {
            comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return best;
}

double entropy_criterion(const SymMatrix& sigma, const std::vector<Index>& turned_off) {
    const auto rest = complement(turned_off, sigma.size());
    return log_det_spd(take(sigma.mat(), rest, rest));
}

LagReconstructor fit_predict_linear(const CovarianceBlocks& blocks, const std::vector<Index>& turned_off, int H) {
    auto rest = complement(turned_off, blocks.n());
    if (turned_off.empty() || rest.empty()) {
        throw InputError("fit_predict_linear: turned-off set must be a nonempty proper subset");
    }
    const auto ab = assemble_lag_blocks(blocks.gammas, turned_off, rest, H);
    Matrix theta = solve_spd(ab.alpha, ab.beta.transpose()).transpose();
    return LagReconstructor(turned_off, std::move(rest), H, std::move(theta));
}

}  // namespace netselect
