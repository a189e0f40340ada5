#include "netselect/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace netselect {

std::vector<KeptStation> clean_stations(const std::vector<RawRecord>& records, CleanOptions opts) {
    if (!(opts.correction_threshold > 0.0 && opts.correction_threshold <= 1.0)) {
        throw InputError("clean_stations: correction threshold must lie in (0, 1]");
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<RawRecord>> by_station;
    for (const auto& r : records) {
        auto [it, inserted] = by_station.try_emplace(r.station);
        if (inserted) {
            order.push_back(r.station);
        }
        it->second.push_back(r);
    }

    std::vector<KeptStation> kept;
    for (const auto& id : order) {
        auto recs = by_station[id];
        if (recs.size() < opts.min_records) {
            continue;
        }
        double max_total = 0.0;
        for (const auto& r : recs) {
            max_total = std::max(max_total, r.bikes + r.spaces);
        }
        if (!(max_total > 0.0)) {
            continue;
        }
        std::size_t hits = 0;
        for (const auto& r : recs) {
            if (r.bikes + r.spaces == max_total) {
                ++hits;
            }
        }
        const double rate = static_cast<double>(hits) / static_cast<double>(recs.size());
        if (!(rate > opts.correction_threshold)) {
            continue;
        }
        std::stable_sort(recs.begin(), recs.end(),
                         [](const RawRecord& a, const RawRecord& b) { return a.moment < b.moment; });
        kept.push_back(KeptStation{id, max_total, rate, std::move(recs)});
    }
    return kept;
}

namespace {

// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void PanelSeries::validate() const {
    if (static_cast<Index>(sensor_ids.size()) != values.rows()) {
        throw InputError("panel: sensor id count does not match value rows");
    }
    if (static_cast<Index>(timestamps.size()) != values.cols()) {
        throw InputError("panel: timestamp count does not match value columns");
    }
    for (std::size_t t = 1; t < timestamps.size(); ++t) {
        if (timestamps[t] - timestamps[t - 1] != kSecondsPerHour) {
            std::ostringstream os;
            os << "panel: timestamps must advance by exactly one hour (row " << t << ")";
            throw InputError(os.str());
        }
    }
    if (!values.allFinite()) {
        throw InputError("panel: non-finite value");
    }
}

PanelSeries PanelSeries::with_values(Matrix v) const {
    PanelSeries out{sensor_ids, timestamps, std::move(v)};
    return out;
}

PanelSeries interpolate_hourly(const std::vector<KeptStation>& stations) {
    if (stations.empty()) {
        throw InputError("interpolate_hourly: no stations");
    }
    std::vector<double> starts;
    std::vector<double> ends;
    for (const auto& s : stations) {
        if (s.records.size() < 2) {
            throw InputError("interpolate_hourly: station '" + s.id + "' has fewer than two records");
        }
        starts.push_back(static_cast<double>(s.records.front().moment));
        ends.push_back(static_cast<double>(s.records.back().moment));
    }
    const double begin = quantile(starts, 0.995);
    const double end = quantile(ends, 0.005);
    const auto first = static_cast<std::int64_t>(std::ceil(begin / kSecondsPerHour)) * kSecondsPerHour;
    if (static_cast<double>(first) > end) {
        throw InputError("interpolate_hourly: empty common time interval");
    }
    PanelSeries panel;
    for (std::int64_t t = first; static_cast<double>(t) <= end; t += kSecondsPerHour) {
        panel.timestamps.push_back(t);
    }
    const auto n = static_cast<Index>(stations.size());
    const auto T = static_cast<Index>(panel.timestamps.size());
    panel.values.resize(n, T);
    for (Index i = 0; i < n; ++i) {
        const auto& st = stations[static_cast<std::size_t>(i)];
        panel.sensor_ids.push_back(st.id);
        const auto& recs = st.records;
        std::size_t k = 0;
        for (Index t = 0; t < T; ++t) {
            const auto stamp = panel.timestamps[static_cast<std::size_t>(t)];
            while (k + 1 < recs.size() && recs[k + 1].moment <= stamp) {
                ++k;
            }
            double v;
            if (stamp <= recs.front().moment) {
                v = recs.front().bikes;
            } else if (k + 1 >= recs.size()) {
                v = recs.back().bikes;
            } else {
                const auto& a = recs[k];
                const auto& b = recs[k + 1];
                const double w = static_cast<double>(stamp - a.moment) / static_cast<double>(b.moment - a.moment);
                v = a.bikes + w * (b.bikes - a.bikes);
            }
            panel.values(i, t) = std::clamp(v / st.max_bikes, 0.0, 1.0);
        }
    }
    return panel;
}

void Split::validate(Index t_total) const {
    if (!(0 < t_tv && t_tv < t0 && t0 < t1 && t1 == t_total)) {
        std::ostringstream os;
        os << "invalid split (t_tv=" << t_tv << ", t0=" << t0 << ", t1=" << t1 << ", T=" << t_total << ")";
        throw InputError(os.str());
    }
}

Split make_split(Index t_total, double validation_fraction, double test_fraction) {
    if (!(validation_fraction > 0.0 && test_fraction > 0.0 && validation_fraction + test_fraction < 1.0)) {
        throw InputError("make_split: fractions must be positive and sum below one");
    }
    const auto td = static_cast<double>(t_total);
    const auto n_test = std::max<Index>(1, static_cast<Index>(std::llround(test_fraction * td)));
    const auto n_val = std::max<Index>(1, static_cast<Index>(std::llround(validation_fraction * td)));
    Split s{t_total - n_test - n_val, t_total - n_test, t_total};
    s.validate(t_total);
    return s;
}

PreprocessModel fit_weekly_profile(const PanelSeries& panel, const Split& split) {
    split.validate(panel.t_total());
    if (split.t_tv < kHoursPerWeek) {
        throw InputError("fit_weekly_profile: training span shorter than one week");
    }
    const Index n = panel.n();
    PreprocessModel model;
    model.profile = Matrix::Zero(n, kHoursPerWeek);
    Vector counts = Vector::Zero(kHoursPerWeek);
    for (Index t = 0; t < split.t_tv; ++t) {
        model.profile.col(t % kHoursPerWeek) += panel.values.col(t);
        counts(t % kHoursPerWeek) += 1.0;
    }
    for (Index m = 0; m < kHoursPerWeek; ++m) {
        model.profile.col(m) /= counts(m);
    }
    model.scale = Vector::Zero(n);
    for (Index t = 0; t < split.t_tv; ++t) {
        model.scale += (panel.values.col(t) - model.profile.col(t % kHoursPerWeek)).array().square().matrix();
    }
    model.scale = (model.scale / static_cast<double>(split.t_tv)).array().sqrt();
    for (Index i = 0; i < n; ++i) {
        if (!(model.scale(i) > 1e-12)) {
            std::ostringstream os;
            os << "fit_weekly_profile: sensor '" << panel.sensor_ids[static_cast<std::size_t>(i)]
               << "' has zero variance after detrending";
            throw InputError(os.str());
        }
    }
    return model;
}

PanelSeries apply_preprocess(const PanelSeries& panel, const PreprocessModel& model) {
    if (model.profile.rows() != panel.n()) {
        throw InputError("apply_preprocess: model/panel sensor mismatch");
    }
    Matrix v(panel.n(), panel.t_total());
    for (Index t = 0; t < panel.t_total(); ++t) {
        v.col(t) = (panel.values.col(t) - model.profile.col(t % kHoursPerWeek)).cwiseQuotient(model.scale);
    }
    return panel.with_values(std::move(v));
}

PanelSeries invert_preprocess(const PanelSeries& panel, const PreprocessModel& model) {
    if (model.profile.rows() != panel.n()) {
        throw InputError("invert_preprocess: model/panel sensor mismatch");
    }
    Matrix v(panel.n(), panel.t_total());
    for (Index t = 0; t < panel.t_total(); ++t) {
        v.col(t) = panel.values.col(t).cwiseProduct(model.scale) + model.profile.col(t % kHoursPerWeek);
    }
    return panel.with_values(std::move(v));
}

Matrix autocovariance(const Matrix& x, int lag) {
    const Index T0 = x.cols();
    if (lag < 0 || lag >= T0) {
        std::ostringstream os;
        os << "autocovariance: lag " << lag << " outside [0, " << T0 << ")";
        throw InputError(os.str());
    }
    const Index len = T0 - lag;
    return x.middleCols(lag, len) * x.leftCols(len).transpose() / static_cast<double>(T0);
}

CovarianceBlocks estimate_blocks(const Matrix& x, int max_lag) {
    if (max_lag < 0) {
        throw InputError("estimate_blocks: negative lag depth");
    }
    CovarianceBlocks out;
    out.samples = x.cols();
    for (int l = 0; l <= max_lag; ++l) {
        out.gammas.push_back(autocovariance(x, l));
    }
    out.sigma = SymMatrix(out.gammas[0]);
    out.gammas[0] = out.sigma.mat();
    return out;
}

CovarianceBlocks standardize(const CovarianceBlocks& blocks) {
    const Vector d = blocks.sigma.mat().diagonal();
    for (Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0)) {
            throw InputError("standardize: sensor with zero variance");
        }
    }
    const Vector inv = d.array().rsqrt();
    CovarianceBlocks out;
    out.samples = blocks.samples;
    for (const auto& g : blocks.gammas) {
        out.gammas.push_back(inv.asDiagonal() * g * inv.asDiagonal());
    }
    out.sigma = SymMatrix(out.gammas[0]);
    out.gammas[0] = out.sigma.mat();
    return out;
}

std::vector<Index> complement(const std::vector<Index>& subset, Index n) {
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    for (Index i : subset) {
        if (i < 0 || i >= n) {
            throw InputError("sensor index out of range");
        }
        if (mark[i]) {
            throw InputError("duplicate sensor index in set");
        }
        mark[i] = 1;
    }
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i) {
        if (!mark[i]) {
            out.push_back(i);
        }
    }
    return out;
}

AssembledBlocks assemble_lag_blocks(const std::vector<Matrix>& lags, const std::vector<Index>& targets,
                                    const std::vector<Index>& predictors, int H) {
    if (H < 0 || H + 1 > static_cast<int>(lags.size())) {
        throw InputError("assemble_blocks: lag depth exceeds available lags");
    }
    const Index n = lags[0].rows();
    std::vector<char> mark(static_cast<std::size_t>(n), 0);
    for (Index i : targets) {
        if (i < 0 || i >= n) {
            throw InputError("assemble_blocks: index out of range");
        }
        mark[i] = 1;
    }
    for (Index j : predictors) {
        if (j < 0 || j >= n) {
            throw InputError("assemble_blocks: index out of range");
        }
        if (mark[j]) {
            throw InputError("assemble_blocks: turned-off and observed sets overlap");
        }
    }
    const auto m = static_cast<Index>(predictors.size());
    const auto p = static_cast<Index>(targets.size());
    AssembledBlocks out;
    out.alpha.resize(m * (H + 1), m * (H + 1));
    out.beta.resize(p, m * (H + 1));
    for (int r = 0; r <= H; ++r) {
        for (int c = 0; c <= H; ++c) {
            if (c >= r) {
                out.alpha.block(r * m, c * m, m, m) = take(lags[static_cast<std::size_t>(c - r)], predictors, predictors);
            } else {
                out.alpha.block(r * m, c * m, m, m) =
                    take(lags[static_cast<std::size_t>(r - c)], predictors, predictors).transpose();
            }
        }
        out.beta.block(0, r * m, p, m) = take(lags[static_cast<std::size_t>(r)], targets, predictors);
    }
    return out;
}

AssembledBlocks assemble_blocks(const std::vector<Matrix>& gammas, const std::vector<Index>& turned_off, int H) {
    if (gammas.empty()) {
        throw InputError("assemble_blocks: no lag matrices");
    }
    return assemble_lag_blocks(gammas, turned_off, complement(turned_off, gammas[0].rows()), H);
}

Vector lag_vector(const Matrix& x, const std::vector<Index>& sensors, Index t, int H) {
    const auto m = static_cast<Index>(sensors.size());
    Vector out = Vector::Zero(m * (H + 1));
    for (int l = 0; l <= H; ++l) {
        const Index col = t - l;
        if (col < 0) {
            continue;
        }
        for (Index k = 0; k < m; ++k) {
            out(l * m + k) = x(sensors[static_cast<std::size_t>(k)], col);
        }
    }
    return out;
}

}  // namespace netselect
