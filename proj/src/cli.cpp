#include "netselect/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "netselect/errors.hpp"
#include "netselect/eval.hpp"
#include "netselect/gcn.hpp"
#include "netselect/graph.hpp"
#include "netselect/io.hpp"
#include "netselect/select_kernel.hpp"
#include "netselect/select_linear.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOptions {
    std::string panel;
    std::string coords;
    int k0 = 20;
    int k1 = 7;
    double val_frac = 0.05;
    double test_frac = 0.10;
    bool no_detrend = false;
    int threads = 0;
};

struct SelectOptions {
    std::string method;
    int p = 0;
    int H = 0;
    std::optional<double> lambda;
    std::optional<double> gamma;
    double r_s = 0.5;
    std::string kernel = "spatial-temporal";
    std::string spectral = "pinv";
    std::string laplacian = "combinatorial";
    bool standardize = false;
    std::uint64_t seed = 0;
    bool cg = false;
    double cg_eps = 1e-8;
    bool grid = false;
    bool fast = false;
    int cheb_order = 8;
    int f_out = 8;
    std::vector<int> fc{32, 64, 16};
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<int> batch;
    std::string measure = "r2";
    std::string mask_lambdas = "0.05:0.35:20";
    double eps0 = 0.01;
    std::string out;
};

struct EvaluateOptions {
    std::string selection;
    int draws = 100;
    std::uint64_t seed = 0;
    int pred_epochs = 50;
    double pred_lr = 1e-3;
    int pred_batch = 50;
    std::string out;
};

struct Prepared {
    PanelSeries panel;
    CoordTable coord_table;
    std::vector<Coord> coords;
    Split split;
    Matrix x;  // preprocessed values, sensors x hours
    std::optional<SensorGraph> graph;
};

int resolved_threads(int flag) { return flag > 0 ? flag : default_threads(); }

Prepared prepare(const CommonOptions& o, bool need_graph) {
    Prepared pr;
    pr.panel = read_panel_csv(o.panel);
    pr.coord_table = read_coords_csv(o.coords);
    pr.coords = align_coords(pr.coord_table, pr.panel.sensor_ids);
    pr.split = make_split(pr.panel.t_total(), o.val_frac, o.test_frac);
    if (o.no_detrend) {
        pr.x = pr.panel.values;
    } else {
        pr.x = apply_preprocess(pr.panel, fit_weekly_profile(pr.panel, pr.split)).values;
    }
    if (need_graph) {
        const int n = static_cast<int>(pr.panel.n());
        const int k0 = std::min(o.k0, n - 1);
        const int k1 = std::min(o.k1, k0);
        pr.graph = build_knn_graph(pr.coords, k0, k1);
    }
    return pr;
}

bool method_needs_graph(const std::string& method, const std::string& kernel) {
    if (method == "gcn-dropout" || method == "gcn-mask") {
        return true;
    }
    return method == "kernel" && (kernel == "laplacian" || kernel == "spatial-temporal");
}

SymMatrix chosen_laplacian(const SensorGraph& g, const std::string& which) {
    if (which == "combinatorial") {
        return combinatorial_laplacian(g);
    }
    if (which == "normalized") {
        return normalized_laplacian(g);
    }
    throw InputError("unknown --laplacian '" + which + "' (combinatorial | normalized)");
}

std::vector<double> parse_grid_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        parts.push_back(item);
    }
    try {
        if (parts.size() == 3) {
            return linspace(std::stod(parts[0]), std::stod(parts[1]), std::stoi(parts[2]));
        }
        if (parts.size() == 1) {
            std::vector<double> out;
            for (const auto& f : split_csv_line(spec)) {
                out.push_back(std::stod(f));
            }
            return out;
        }
    } catch (const std::logic_error&) {
    }
    throw InputError("bad lambda grid '" + spec + "' (lo:hi:count or a comma list)");
}

std::vector<Index> parse_index_list(const std::string& s) {
    std::vector<Index> out;
    if (s.empty()) {
        return out;
    }
    for (const auto& f : split_csv_line(s)) {
        try {
            out.push_back(std::stol(f));
        } catch (const std::logic_error&) {
            throw InputError("bad sensor index list '" + s + "'");
        }
    }
    return out;
}

// Kernel Gram over all sensors for the stored configuration.
LagKernel kernel_for(const json& cfg, const Prepared& pr, const CovarianceBlocks& blocks, const Matrix& x_train) {
    KernelConfig kc;
    kc.kind = parse_kernel_kind(cfg.at("kernel").get<std::string>());
    kc.H = cfg.at("H").get<int>();
    kc.gamma = cfg.at("gamma").get<double>();
    kc.spectral_map = SpectralMap::parse(cfg.at("spectral").get<std::string>());
    std::optional<GraphSpectrum> spectrum;
    if (kc.kind == KernelKind::Laplacian || kc.kind == KernelKind::SpatialTemporal) {
        spectrum = make_spectrum(chosen_laplacian(*pr.graph, cfg.at("laplacian").get<std::string>()));
    }
    return make_lag_kernel(kc, spectrum ? &*spectrum : nullptr, blocks, &x_train);
}

ChebNetConfig net_config(const json& cfg, Index n) {
    ChebNetConfig c;
    c.cheb_order = cfg.at("cheb_order").get<int>();
    c.f_out = cfg.at("f_out").get<int>();
    c.fc_sizes = cfg.at("fc_sizes").get<std::vector<int>>();
    c.H = cfg.at("H").get<int>();
    c.n_nodes = n;
    c.out_dim = 1;
    return c;
}

json select_config_json(const SelectOptions& s, const CommonOptions& c) {
    return {{"method", s.method},          {"H", s.H},
            {"kernel", s.kernel},          {"spectral", s.spectral},
            {"laplacian", s.laplacian},    {"standardize", s.standardize},
            {"seed", s.seed},              {"cg", s.cg},
            {"cg_eps", s.cg_eps},          {"cheb_order", s.cheb_order},
            {"f_out", s.f_out},            {"fc_sizes", s.fc},
            {"measure", s.measure},        {"k0", c.k0},
            {"k1", c.k1},                  {"val_frac", c.val_frac},
            {"test_frac", c.test_frac},    {"detrend", !c.no_detrend}};
}

int cmd_select(const CommonOptions& common, SelectOptions o, std::ostream& out) {
    static const std::vector<std::string> methods{"linear", "kernel", "gcn-dropout", "gcn-mask"};
    if (std::find(methods.begin(), methods.end(), o.method) == methods.end()) {
        throw InputError("unknown --method '" + o.method + "' (linear | kernel | gcn-dropout | gcn-mask)");
    }
    if (o.H < 0) {
        throw InputError("--H must be nonnegative");
    }
    (void)parse_kernel_kind(o.kernel);
    (void)SpectralMap::parse(o.spectral);
    Prepared pr = prepare(common, method_needs_graph(o.method, o.kernel));
    const Index n = pr.panel.n();
    if (o.p == 0) {
        o.p = default_p(n);
    }
    if (o.p < 1 || o.p >= n) {
        throw InputError("--p must satisfy 1 <= p < N");
    }
    const int threads = resolved_threads(common.threads);
    const Split& split = pr.split;
    const Matrix x_train = pr.x.leftCols(split.t_tv);
    json cfg = select_config_json(o, common);

    SelectionResult sel;
    std::optional<SensorScores> scores;
    std::optional<MaskingSelection> masking;

    if (o.method == "linear" || o.method == "kernel") {
        if (o.H >= split.t_tv) {
            throw InputError("--H exceeds the training length");
        }
        CovarianceBlocks blocks = estimate_blocks(x_train, o.H);
        if (o.standardize) {
            blocks = standardize(blocks);
        }
        if (o.method == "linear") {
            sel = greedy_select_linear(blocks, o.p, o.H, {threads, o.fast});
        } else {
            const double gamma = o.gamma ? *o.gamma : (o.H >= 1 ? gamma_grid(o.H, o.r_s) : 0.0);
            cfg["gamma"] = gamma;
            const LagKernel kernel = kernel_for(cfg, pr, blocks, x_train);
            const double lam_max = power_method(kernel.lags[0]).value;
            const LambdaGrid grid = lambda_grid(std::max(lam_max, 0.0));
            KernelGreedyOptions ko;
            ko.H = o.H;
            ko.use_cg = o.cg;
            ko.cg_eps = o.cg_eps;
            ko.threads = threads;
            if (o.grid) {
                std::vector<json> points;
                for (double l : grid.values) {
                    points.push_back({{"lambda", l}});
                }
                const auto gs = grid_search(
                    points,
                    [&](const json& c) {
                        KernelGreedyOptions k = ko;
                        k.lambda = c.at("lambda").get<double>();
                        return greedy_select_kernel(blocks, kernel, o.p, k);
                    },
                    [&](const json& c, const std::vector<Index>& set) -> std::unique_ptr<Reconstructor> {
                        return std::make_unique<LagReconstructor>(
                            fit_predict_kernel(kernel, set, c.at("lambda").get<double>(), o.H));
                    },
                    pr.x, split);
                sel = gs.selection;
                cfg["lambda"] = gs.best_config.at("lambda");
                cfg["grid_validation_mse"] = gs.validation_mse;
                cfg["grid_lambdas"] = grid.values;
                for (const auto& f : gs.failures) {
                    sel.warnings.push_back(f);
                }
            } else {
                ko.lambda = o.lambda ? *o.lambda : grid.values[2];
                cfg["lambda"] = ko.lambda;
                sel = greedy_select_kernel(blocks, kernel, o.p, ko);
            }
            if (!grid.warning.empty()) {
                sel.warnings.push_back(grid.warning);
            }
        }
    } else {
        const Matrix lt = scaled_graph_laplacian(*pr.graph);
        ChebNetConfig nc = net_config(cfg, n);
        TrainConfig tc;
        tc.seed = o.seed;
        if (o.method == "gcn-dropout") {
            tc.optimizer = Optimizer::GradientDescent;
            tc.lr = o.lr.value_or(0.05);
            tc.batch_size = o.batch.value_or(50);
            tc.max_epoch = o.epochs.value_or(500);
            tc.early_stop = EarlyStop::FiveEpochMean;
            ScoreMeasure m;
            if (o.measure == "r2") {
                m = ScoreMeasure::R2;
            } else if (o.measure == "mse") {
                m = ScoreMeasure::MSE;
            } else {
                throw InputError("unknown --measure '" + o.measure + "' (r2 | mse)");
            }
            auto res = train_selection_dropout(pr.x, split, lt, o.p, nc, tc, m);
            sel = std::move(res.selection);
            scores = std::move(res.scores);
            sel.hyperparams["resampled"] = res.resampled;
        } else {
            tc.optimizer = Optimizer::Adam;
            tc.lr = o.lr.value_or(0.005);
            tc.batch_size = o.batch.value_or(50);
            tc.max_epoch = o.epochs.value_or(50);
            tc.early_stop = EarlyStop::None;
            auto res = train_selection_masking(pr.x, split, lt, o.p, parse_grid_spec(o.mask_lambdas), o.eps0, nc, tc);
            sel = res.selection;
            masking = std::move(res);
        }
    }

    for (auto& [k, v] : sel.hyperparams.items()) {
        if (!cfg.contains(k)) {
            cfg[k] = v;
        }
    }
    cfg["p"] = o.p;
    sel.hyperparams = cfg;
    sel.validate();

    fs::create_directories(o.out);
    json j = selection_to_json(sel, pr.panel.sensor_ids);
    j["n_sensors"] = n;
    j["sensor_ids"] = pr.panel.sensor_ids;
    write_json((fs::path(o.out) / "selection.json").string(), j);
    write_json((fs::path(o.out) / "selection.geojson").string(),
               selection_geojson(pr.panel.sensor_ids, pr.coords, sel.order));
    if (scores) {
        write_scores_csv((fs::path(o.out) / "scores.csv").string(), *scores, pr.panel.sensor_ids);
    }
    if (masking) {
        std::ostringstream os;
        os << "lambda";
        for (const auto& id : pr.panel.sensor_ids) {
            os << ',' << id;
        }
        os << '\n';
        for (std::size_t l = 0; l < masking->lambdas.size(); ++l) {
            os << format_double(masking->lambdas[l]);
            for (Index i = 0; i < n; ++i) {
                os << ',' << format_double(masking->weights[l](i));
            }
            os << '\n';
        }
        write_text((fs::path(o.out) / "lasso_path.csv").string(), os.str());
    }
    out << "selected";
    for (const auto& id : j["order_ids"]) {
        out << ' ' << id.get<std::string>();
    }
    out << '\n';
    for (const auto& w : sel.warnings) {
        out << "warning: " << w << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(CommonOptions common, const EvaluateOptions& o, std::ostream& out) {
    const json sj = read_json(o.selection);
    const SelectionResult sel = selection_from_json(sj);
    json cfg = sel.hyperparams;
    const std::string method = cfg.value("method", sel.method);
    common.k0 = cfg.value("k0", common.k0);
    common.k1 = cfg.value("k1", common.k1);
    common.val_frac = cfg.value("val_frac", common.val_frac);
    common.test_frac = cfg.value("test_frac", common.test_frac);
    common.no_detrend = !cfg.value("detrend", !common.no_detrend);
    if (o.draws < 1) {
        throw InputError("--draws must be positive");
    }
    Prepared pr = prepare(common, method_needs_graph(method, cfg.value("kernel", std::string())));
    const Index n = pr.panel.n();
    if (sj.value("n_sensors", n) != n) {
        throw Error("selection was made on " + std::to_string(sj.value("n_sensors", Index{0})) +
                    " sensors but the panel has " + std::to_string(n));
    }
    for (Index i : sel.order) {
        if (i < 0 || i >= n) {
            throw Error("selection refers to sensor index " + std::to_string(i) + " outside the panel");
        }
    }
    if (sel.order.empty() || static_cast<Index>(sel.order.size()) >= n) {
        throw Error("selection must turn off between 1 and N - 1 sensors");
    }
    const int H = cfg.value("H", 0);
    const Split& split = pr.split;
    const int threads = resolved_threads(common.threads);
    std::vector<Index> chosen = sel.order;
    std::sort(chosen.begin(), chosen.end());

    // Returns (test reconstructor, validation reconstructor) for a set.
    using Pair = std::pair<std::unique_ptr<Reconstructor>, std::unique_ptr<Reconstructor>>;
    std::function<Pair(const std::vector<Index>&, bool)> fit;
    if (method == "linear" || method == "kernel") {
        const CovarianceBlocks full = estimate_blocks(pr.x.leftCols(split.t0), H);
        const CovarianceBlocks train = estimate_blocks(pr.x.leftCols(split.t_tv), H);
        if (method == "linear") {
            fit = [full, train, H](const std::vector<Index>& set, bool with_val) {
                Pair p;
                p.first = std::make_unique<LagReconstructor>(fit_predict_linear(full, set, H));
                if (with_val) {
                    p.second = std::make_unique<LagReconstructor>(fit_predict_linear(train, set, H));
                }
                return p;
            };
        } else {
            const double lambda = cfg.at("lambda").get<double>();
            auto k_full = std::make_shared<LagKernel>(kernel_for(cfg, pr, full, pr.x.leftCols(split.t0)));
            auto k_train = std::make_shared<LagKernel>(kernel_for(cfg, pr, train, pr.x.leftCols(split.t_tv)));
            fit = [k_full, k_train, lambda, H](const std::vector<Index>& set, bool with_val) {
                Pair p;
                p.first = std::make_unique<LagReconstructor>(fit_predict_kernel(*k_full, set, lambda, H));
                if (with_val) {
                    p.second = std::make_unique<LagReconstructor>(fit_predict_kernel(*k_train, set, lambda, H));
                }
                return p;
            };
        }
    } else if (method == "gcn-dropout" || method == "gcn-mask") {
        const Matrix lt = scaled_graph_laplacian(*pr.graph);
        const ChebNetConfig base = net_config(cfg, n);
        TrainConfig tc;
        tc.optimizer = Optimizer::Adam;
        tc.lr = o.pred_lr;
        tc.batch_size = o.pred_batch;
        tc.max_epoch = o.pred_epochs;
        tc.early_stop = EarlyStop::PairMean;
        tc.seed = o.seed;
        const Matrix& x = pr.x;
        fit = [&x, &split, lt, base, tc](const std::vector<Index>& set, bool) {
            const TrainResult tr = train_prediction_net(x, split, lt, set, base, tc);
            ChebNetConfig c = base;
            c.out_dim = static_cast<Index>(set.size());
            Pair p;
            p.first = std::make_unique<GcnReconstructor>(set, c, tr.params, lt);
            p.second = std::make_unique<GcnReconstructor>(set, c, tr.params, lt);
            return p;
        };
    } else {
        throw InputError("selection has unknown method '" + method + "'");
    }

    EvalReport rep;
    rep.method = method;
    rep.selected = chosen;
    for (Index i : chosen) {
        rep.selected_ids.push_back(pr.panel.sensor_ids[static_cast<std::size_t>(i)]);
    }
    rep.hyperparams = cfg;
    rep.seed = o.seed;
    {
        const Pair p = fit(chosen, true);
        rep.test_mse = test_mse(*p.first, pr.x, chosen, split);
        rep.validation_mse = reconstruction_mse(*p.second, pr.x, split.t_tv, split.t0);
    }
    const auto base = random_baseline(
        [&](const std::vector<Index>& set) { return fit(set, false).first; }, pr.x, split,
        static_cast<int>(chosen.size()), o.draws, o.seed, threads);
    rep.baseline_mean = base.mean;
    rep.baseline_draws = base.draws;
    rep.baseline_skipped = base.skipped;
    if (rep.validation_mse > 0.0) {
        const double ratio = rep.test_mse / rep.validation_mse;
        if (ratio > 2.0 || ratio < 0.5) {
            std::ostringstream os;
            os << "test and validation errors disagree sharply (ratio " << ratio << ")";
            rep.flags.push_back(os.str());
        }
    }

    fs::create_directories(o.out);
    write_json((fs::path(o.out) / "report.json").string(), rep.to_json());
    write_text((fs::path(o.out) / "summary.csv").string(), summary_csv({rep}));
    out << "test_mse " << format_double(rep.test_mse) << " baseline_mean " << format_double(rep.baseline_mean)
        << " draws " << rep.baseline_draws << " skipped " << rep.baseline_skipped << '\n';
    return kExitOk;
}

int cmd_ingest(const std::string& raw, double rc, std::size_t min_records, const std::string& out_dir,
               std::ostream& out) {
    const auto records = read_raw_csv(raw);
    CleanOptions co;
    co.correction_threshold = rc;
    co.min_records = min_records;
    const auto kept = clean_stations(records, co);
    if (kept.empty()) {
        throw InputError(raw + ": no station passes the cleaning thresholds");
    }
    const PanelSeries panel = interpolate_hourly(kept);
    fs::create_directories(out_dir);
    write_panel_csv((fs::path(out_dir) / "panel.csv").string(), panel);
    std::ostringstream os;
    os << "station,max_bikes,correction_rate,records\n";
    for (const auto& s : kept) {
        os << s.id << ',' << format_double(s.max_bikes) << ',' << format_double(s.correction_rate) << ','
           << s.records.size() << '\n';
    }
    write_text((fs::path(out_dir) / "stations.csv").string(), os.str());
    out << "kept " << kept.size() << " stations, " << panel.t_total() << " hours\n";
    return kExitOk;
}

int cmd_synth(const std::string& model, Index n, Index T, std::uint64_t seed, const SynthOptions& so, int k0, int k1,
              const std::string& out_dir, std::ostream& out) {
    if (n < 3) {
        throw InputError("--n must be at least 3");
    }
    CoordTable tab;
    tab.coords = synth_coords(n, seed);
    const int kk0 = std::min<int>(k0, static_cast<int>(n) - 1);
    const SensorGraph g = build_knn_graph(tab.coords, kk0, std::min(k1, kk0));
    const PanelSeries panel = synth_generate(g, T, model, seed, so);
    tab.ids = panel.sensor_ids;
    fs::create_directories(out_dir);
    write_panel_csv((fs::path(out_dir) / "panel.csv").string(), panel);
    write_coords_csv((fs::path(out_dir) / "coords.csv").string(), tab);
    out << "wrote " << n << " sensors x " << T << " hours\n";
    return kExitOk;
}

void add_common(CLI::App* app, CommonOptions& c) {
    app->add_option("--panel", c.panel, "Hourly panel CSV")->required();
    app->add_option("--coords", c.coords, "Sensor coordinates CSV")->required();
    app->add_option("--k0", c.k0, "Neighbours per sensor in the kNN graph");
    app->add_option("--k1", c.k1, "Neighbour rank used as the local scale");
    app->add_option("--val-frac", c.val_frac, "Validation fraction");
    app->add_option("--test-frac", c.test_frac, "Test fraction");
    app->add_flag("--no-detrend", c.no_detrend, "Use panel values as given (no weekly profile, no scaling)");
    app->add_option("--threads", c.threads, "Worker threads (default NETSELECT_THREADS or 1)");
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
    err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sensor selection for network time series", "netselect"};
    app.require_subcommand(1);

    std::string raw;
    double rc = 0.9;
    std::size_t min_records = 100;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Clean raw station records into an hourly panel");
    ingest->add_option("--raw", raw, "Raw CSV station,moment,bikes,spaces")->required();
    ingest->add_option("--rc", rc, "Correction-rate threshold");
    ingest->add_option("--min-records", min_records, "Minimum records per station");
    ingest->add_option("--out", ingest_out, "Output directory")->required();

    CommonOptions sel_common;
    SelectOptions so;
    auto* select = app.add_subcommand("select", "Select the sensors to turn off");
    add_common(select, sel_common);
    select->add_option("--method", so.method, "linear | kernel | gcn-dropout | gcn-mask")->required();
    select->add_option("--p", so.p, "Sensors to turn off (default ceil(0.1 N))");
    select->add_option("--H", so.H, "Lag depth");
    select->add_option("--lambda", so.lambda, "Ridge strength (kernel)");
    select->add_option("--gamma", so.gamma, "Temporal RBF decay (kernel)");
    select->add_option("--r-s", so.r_s, "Kernel decay ratio at lag H when --gamma is absent");
    select->add_option("--kernel", so.kernel, "laplacian | spatial-temporal | autocovariance | linear | rbf");
    select->add_option("--spectral", so.spectral, "pinv | identity | diffusion:<beta>");
    select->add_option("--laplacian", so.laplacian, "combinatorial | normalized (graph kernels)");
    select->add_flag("--standardize", so.standardize, "Select on correlation units");
    select->add_option("--seed", so.seed, "Random seed");
    select->add_flag("--cg", so.cg, "Conjugate-gradient solves in kernel greedy steps");
    select->add_option("--cg-eps", so.cg_eps, "Relative CG tolerance");
    select->add_flag("--grid", so.grid, "Pick lambda on the validation rows (kernel)");
    select->add_flag("--fast", so.fast, "Bordered-inverse candidate updates (linear)");
    select->add_option("--cheb-order", so.cheb_order, "Chebyshev order K (gcn)");
    select->add_option("--f-out", so.f_out, "GConv output channels (gcn)");
    select->add_option("--fc", so.fc, "Fully-connected widths (gcn)")->delimiter(',');
    select->add_option("--epochs", so.epochs, "Maximal epoch (gcn)");
    select->add_option("--lr", so.lr, "Learning rate (gcn)");
    select->add_option("--batch", so.batch, "Batch size (gcn)");
    select->add_option("--measure", so.measure, "r2 | mse (gcn-dropout)");
    select->add_option("--mask-lambdas", so.mask_lambdas, "lo:hi:count or a comma list (gcn-mask)");
    select->add_option("--eps0", so.eps0, "Zero threshold for mask weights (gcn-mask)");
    select->add_option("--out", so.out, "Output directory")->required();

    CommonOptions ev_common;
    EvaluateOptions eo;
    auto* evaluate = app.add_subcommand("evaluate", "Test error of a stored selection against random sets");
    add_common(evaluate, ev_common);
    evaluate->add_option("--selection", eo.selection, "selection.json from select")->required();
    evaluate->add_option("--draws", eo.draws, "Random-baseline draws");
    evaluate->add_option("--seed", eo.seed, "Random seed");
    evaluate->add_option("--pred-epochs", eo.pred_epochs, "Prediction-net maximal epoch (gcn)");
    evaluate->add_option("--pred-lr", eo.pred_lr, "Prediction-net learning rate (gcn)");
    evaluate->add_option("--pred-batch", eo.pred_batch, "Prediction-net batch size (gcn)");
    evaluate->add_option("--out", eo.out, "Output directory")->required();

    std::string model;
    Index n = 20;
    Index T = 2000;
    std::uint64_t seed = 0;
    SynthOptions syn;
    std::string redundant;
    std::string pure_noise;
    int sk0 = 20;
    int sk1 = 7;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic panel and coordinates");
    synth->add_option("--model", model, "var1 | graph-smooth")->required();
    synth->add_option("--n", n, "Sensors");
    synth->add_option("--T", T, "Hours");
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--coupling", syn.coupling, "VAR(1) coupling");
    synth->add_option("--noise", syn.noise, "Per-sensor noise (graph-smooth)");
    synth->add_option("--redundant", redundant, "Comma list of low-noise sensors (graph-smooth)");
    synth->add_option("--pure-noise", pure_noise, "Comma list of pure-noise sensors (graph-smooth)");
    synth->add_option("--k0", sk0, "Neighbours per sensor in the kNN graph");
    synth->add_option("--k1", sk1, "Neighbour rank used as the local scale");
    synth->add_option("--out", synth_out, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return kExitInput;
    }

    try {
        if (*ingest) {
            return cmd_ingest(raw, rc, min_records, ingest_out, out);
        }
        if (*select) {
            if (!fs::exists(sel_common.coords)) {
                throw InputError("coordinates file not found: " + sel_common.coords);
            }
            return cmd_select(sel_common, so, out);
        }
        if (*evaluate) {
            return cmd_evaluate(ev_common, eo, out);
        }
        if (*synth) {
            syn.redundant = parse_index_list(redundant);
            syn.pure_noise = parse_index_list(pure_noise);
            return cmd_synth(model, n, T, seed, syn, sk0, sk1, synth_out, out);
        }
    } catch (const InputError& e) {
        report_error(err, "input", e.what());
        return kExitInput;
    } catch (const Error& e) {
        report_error(err, "computation", e.what());
        return kExitCompute;
    } catch (const fs::filesystem_error& e) {
        report_error(err, "input", e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        report_error(err, "computation", e.what());
        return kExitCompute;
    }
    return kExitInput;
}

}  // namespace netselect
