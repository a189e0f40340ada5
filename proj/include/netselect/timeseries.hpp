#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netselect/numerics.hpp"

namespace netselect {

inline constexpr int kHoursPerWeek = 168;
inline constexpr std::int64_t kSecondsPerHour = 3600;

// One raw station observation; moment in Unix seconds.
struct RawRecord {
    std::string station;
    std::int64_t moment = 0;
    double bikes = 0.0;
    double spaces = 0.0;
};

struct KeptStation {
    std::string id;
    double max_bikes = 0.0;
    double correction_rate = 0.0;
    std::vector<RawRecord> records;  // sorted by moment
};

struct CleanOptions {
    double correction_threshold = 0.9;  // r_c; kept iff rate > r_c
    std::size_t min_records = 100;
};

// Drops stations whose dock total rarely equals its maximum. Stations are
// returned in order of first appearance.
std::vector<KeptStation> clean_stations(const std::vector<RawRecord>& records, CleanOptions opts = {});

// n x T hourly panel. Timestamps step by exactly one hour.
struct PanelSeries {
    std::vector<std::string> sensor_ids;
    std::vector<std::int64_t> timestamps;
    Matrix values;  // sensors x hours

    Index n() const { return values.rows(); }
    Index t_total() const { return values.cols(); }

    void validate() const;
    PanelSeries with_values(Matrix v) const;
};

// Interpolates bikes / max_bikes onto an hourly grid spanning the 0.995
// quantile of start moments to the 0.005 quantile of end moments. Values are
// clamped to [0, 1]; outside a station's own record range the nearest record
// is held.
PanelSeries interpolate_hourly(const std::vector<KeptStation>& stations);

// Chronological split: training [0, t_tv), validation [t_tv, t0), test [t0, t1).
struct Split {
    Index t_tv = 0;
    Index t0 = 0;
    Index t1 = 0;

    Index train_size() const { return t_tv; }
    Index validation_size() const { return t0 - t_tv; }
    Index test_size() const { return t1 - t0; }
    void validate(Index t_total) const;
};

Split make_split(Index t_total, double validation_fraction = 0.05, double test_fraction = 0.10);

// Weekly profile and scale fitted on training rows. Hour t (0-based) uses
// slot t mod 168, i.e. slot m = ((t' - 1) mod 168) + 1 for 1-based t'.
struct PreprocessModel {
    Matrix profile;  // n x 168
    Vector scale;    // n, positive
};

PreprocessModel fit_weekly_profile(const PanelSeries& panel, const Split& split);
PanelSeries apply_preprocess(const PanelSeries& panel, const PreprocessModel& model);
PanelSeries invert_preprocess(const PanelSeries& panel, const PreprocessModel& model);

// Uncentered sample autocovariance over the columns of x (sensors x T0):
// (1/T0) sum_{t=l+1}^{T0} x_t x_{t-l}^T.
Matrix autocovariance(const Matrix& x, int lag);

struct CovarianceBlocks {
    SymMatrix sigma;             // == gammas[0]
    std::vector<Matrix> gammas;  // lags 0..H
    Index samples = 0;           // T0

    Index n() const { return sigma.size(); }
    int max_lag() const { return static_cast<int>(gammas.size()) - 1; }
};

CovarianceBlocks estimate_blocks(const Matrix& x, int max_lag);

// Rescales every lag block to correlation units using the lag-0 diagonal.
CovarianceBlocks standardize(const CovarianceBlocks& blocks);

struct AssembledBlocks {
    Matrix alpha;  // q x q, block (r, c) = Gamma_S(c - r) with Gamma(-l) = Gamma(l)^T
    Matrix beta;   // p x q, block c = Gamma_{I S}(c)
};

// General form over arbitrary per-lag matrices (covariance or kernel Gram).
AssembledBlocks assemble_lag_blocks(const std::vector<Matrix>& lags, const std::vector<Index>& targets,
                                    const std::vector<Index>& predictors, int H);

// alpha/beta for turned-off set I against its sorted complement.
AssembledBlocks assemble_blocks(const std::vector<Matrix>& gammas, const std::vector<Index>& turned_off, int H);

// Sorted complement of `subset` in [0, n). Throws on duplicates or range errors.
std::vector<Index> complement(const std::vector<Index>& subset, Index n);

// Stacked lag vector (x_{S,t}, x_{S,t-1}, ..., x_{S,t-H}); columns before 0 read as zero.
Vector lag_vector(const Matrix& x, const std::vector<Index>& sensors, Index t, int H);

}  // namespace netselect
