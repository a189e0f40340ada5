#include "netselect/gcn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace netselect {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::Map<Matrix> node_view(Matrix& m, Index n) {
    return {m.data(), n, m.size() / n};
}

void check_finite_loss(double loss, const char* who) {
    if (!std::isfinite(loss)) {
        throw TrainingError(std::string(who) + ": training diverged (non-finite loss)");
    }
}

}  // namespace

void ChebNetConfig::validate() const {
    if (cheb_order < 0 || f_out < 1 || H < 0 || n_nodes < 1 || out_dim < 1) {
        throw InputError("ChebNetConfig: require K >= 0, F >= 1, H >= 0 and positive node/output counts");
    }
    for (int w : fc_sizes) {
        if (w < 1) {
            throw InputError("ChebNetConfig: fully-connected widths must be >= 1");
        }
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        throw InputError("ChebNetConfig: leaky slope must lie in (0, 1)");
    }
}

ChebNetConfig ChebNetConfig::full_scale(Index n_nodes, Index out_dim, int H) {
    ChebNetConfig c;
    c.cheb_order = 50;
    c.f_out = 16;
    c.fc_sizes = {128, 500, 64};
    c.H = H;
    c.n_nodes = n_nodes;
    c.out_dim = out_dim;
    return c;
}

ChebNetParams ChebNetParams::zeros(const ChebNetConfig& cfg) {
    cfg.validate();
    ChebNetParams p;
    for (int k = 0; k <= cfg.cheb_order; ++k) {
        p.theta.push_back(Matrix::Zero(cfg.in_channels(), cfg.f_out));
    }
    p.gconv_bias = Matrix::Zero(cfg.n_nodes, cfg.f_out);
    Index in = cfg.n_nodes * cfg.f_out;
    std::vector<Index> widths(cfg.fc_sizes.begin(), cfg.fc_sizes.end());
    widths.push_back(cfg.out_dim);
    for (Index w : widths) {
        p.fc_weights.push_back(Matrix::Zero(w, in));
        p.fc_biases.push_back(Vector::Zero(w));
        in = w;
    }
    return p;
}

ChebNetParams ChebNetParams::glorot(const ChebNetConfig& cfg, std::uint64_t seed) {
    ChebNetParams p = zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](Matrix& m, double fan_in, double fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) {
                m(i, j) = a * (2.0 * uniform01(rng) - 1.0);
            }
        }
    };
    const double theta_fan_in = static_cast<double>((cfg.cheb_order + 1) * cfg.in_channels());
    for (auto& t : p.theta) {
        fill(t, theta_fan_in, cfg.f_out);
    }
    for (auto& w : p.fc_weights) {
        fill(w, static_cast<double>(w.cols()), static_cast<double>(w.rows()));
    }
    return p;
}

Index ChebNetParams::size() const {
    Index s = gconv_bias.size();
    for (const auto& t : theta) {
        s += t.size();
    }
    for (std::size_t l = 0; l < fc_weights.size(); ++l) {
        s += fc_weights[l].size() + fc_biases[l].size();
    }
    return s;
}

Vector ChebNetParams::flatten() const {
    Vector v(size());
    Index at = 0;
    auto put = [&](const auto& m) {
        v.segment(at, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
        at += m.size();
    };
    for (const auto& t : theta) {
        put(t);
    }
    put(gconv_bias);
    for (std::size_t l = 0; l < fc_weights.size(); ++l) {
        put(fc_weights[l]);
        put(fc_biases[l]);
    }
    return v;
}

void ChebNetParams::unflatten(const Vector& v) {
    if (v.size() != size()) {
        throw InputError("ChebNetParams::unflatten: size mismatch");
    }
    Index at = 0;
    auto get = [&](auto& m) {
        Eigen::Map<Vector>(m.data(), m.size()) = v.segment(at, m.size());
        at += m.size();
    };
    for (auto& t : theta) {
        get(t);
    }
    get(gconv_bias);
    for (std::size_t l = 0; l < fc_weights.size(); ++l) {
        get(fc_weights[l]);
        get(fc_biases[l]);
    }
}

void ChebNetParams::check_shapes(const ChebNetConfig& cfg) const {
    const ChebNetParams ref = zeros(cfg);
    bool ok = theta.size() == ref.theta.size() && fc_weights.size() == ref.fc_weights.size() &&
              fc_biases.size() == ref.fc_biases.size() && gconv_bias.rows() == ref.gconv_bias.rows() &&
              gconv_bias.cols() == ref.gconv_bias.cols();
    for (std::size_t k = 0; ok && k < theta.size(); ++k) {
        ok = theta[k].rows() == ref.theta[k].rows() && theta[k].cols() == ref.theta[k].cols();
    }
    for (std::size_t l = 0; ok && l < fc_weights.size(); ++l) {
        ok = fc_weights[l].rows() == ref.fc_weights[l].rows() && fc_weights[l].cols() == ref.fc_weights[l].cols() &&
             fc_biases[l].size() == ref.fc_biases[l].size();
    }
    if (!ok) {
        throw InputError("ChebNetParams: shapes do not match the network config");
    }
}

double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
double elu_grad(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }
double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double leaky_relu_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

Matrix scale_laplacian(const SymMatrix& laplacian, double lambda_max) {
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw InputError("scale_laplacian: lambda_max must be positive");
    }
    Matrix lt = (2.0 / lambda_max) * laplacian.mat();
    lt.diagonal().array() -= 1.0;
    return lt;
}

Matrix scaled_graph_laplacian(const SensorGraph& g) {
    const SymMatrix l = normalized_laplacian(g);
    return scale_laplacian(l, power_method(l).value);
}

std::vector<Matrix> cheb_apply(const Matrix& lt, int K, const Matrix& x) {
    if (lt.rows() != lt.cols() || lt.cols() != x.rows() || K < 0) {
        throw InputError("cheb_apply: shape mismatch");
    }
    std::vector<Matrix> out{x};
    if (K >= 1) {
        out.push_back(lt * x);
    }
    for (int k = 2; k <= K; ++k) {
        out.push_back(2.0 * lt * out[static_cast<std::size_t>(k - 1)] - out[static_cast<std::size_t>(k - 2)]);
    }
    return out;
}

Matrix gconv_forward(const Matrix& h_in, const Matrix& lt, const ChebNetParams& params) {
    if (params.theta.empty() || params.theta[0].rows() != h_in.cols() || params.gconv_bias.rows() != h_in.rows() ||
        params.gconv_bias.cols() != params.theta[0].cols()) {
        throw InputError("gconv_forward: shape mismatch");
    }
    const auto t = cheb_apply(lt, static_cast<int>(params.theta.size()) - 1, h_in);
    Matrix z = params.gconv_bias;
    for (std::size_t k = 0; k < t.size(); ++k) {
        z.noalias() += t[k] * params.theta[k];
    }
    return z.unaryExpr([](double v) { return elu(v); });
}

Matrix net_forward_batch(const Matrix& inputs, const Matrix& lt, const ChebNetParams& params,
                         const ChebNetConfig& cfg, ForwardCache* cache) {
    const Index n = cfg.n_nodes;
    const Index C = cfg.in_channels();
    const Index F = cfg.f_out;
    const Index B = inputs.cols();
    const int K = cfg.cheb_order;
    if (inputs.rows() != n * C || lt.rows() != n || lt.cols() != n) {
        throw InputError("net_forward: input shape does not match the network config");
    }
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c.cheb.assign(static_cast<std::size_t>(K + 1), Matrix());
    c.cheb[0] = inputs;
    for (int k = 1; k <= K; ++k) {
        Matrix next(n * C, B);
        auto nv = node_view(next, n);
        nv.noalias() = lt * node_view(c.cheb[static_cast<std::size_t>(k - 1)], n);
        if (k >= 2) {
            nv *= 2.0;
            next -= c.cheb[static_cast<std::size_t>(k - 2)];
        }
        c.cheb[static_cast<std::size_t>(k)] = std::move(next);
    }
    c.z.resize(n * F, B);
    for (Index f = 0; f < F; ++f) {
        auto zf = c.z.middleRows(f * n, n);
        zf = params.gconv_bias.col(f).replicate(1, B);
        for (int k = 0; k <= K; ++k) {
            const auto& tk = c.cheb[static_cast<std::size_t>(k)];
            for (Index ch = 0; ch < C; ++ch) {
                const double w = params.theta[static_cast<std::size_t>(k)](ch, f);
                if (w != 0.0) {
                    zf += w * tk.middleRows(ch * n, n);
                }
            }
        }
    }
    Matrix a = c.z.unaryExpr([](double v) { return elu(v); });
    const std::size_t layers = params.fc_weights.size();
    c.layer_in.assign(layers, Matrix());
    c.pre.assign(layers, Matrix());
    const double slope = cfg.leaky_slope;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix pre = params.fc_weights[l] * a;
        pre.colwise() += params.fc_biases[l];
        c.layer_in[l] = std::move(a);
        if (l + 1 < layers) {
            a = pre.unaryExpr([slope](double v) { return leaky_relu(v, slope); });
        } else {
            a = pre;
        }
        c.pre[l] = std::move(pre);
    }
    return a;
}

Vector net_forward(const Matrix& x_input, const Matrix& lt, const ChebNetParams& params, const ChebNetConfig& cfg) {
    if (x_input.rows() != cfg.n_nodes || x_input.cols() != cfg.in_channels()) {
        throw InputError("net_forward: input must be n x (H + 1)");
    }
    const Matrix col = Eigen::Map<const Matrix>(x_input.data(), x_input.size(), 1);
    return net_forward_batch(col, lt, params, cfg).col(0);
}

LossGrad net_loss_grad(const Matrix& inputs, const Matrix& targets, const Matrix* out_weights, const Matrix& lt,
                       const ChebNetParams& params, const ChebNetConfig& cfg, double loss_scale) {
    ForwardCache c;
    LossGrad lg;
    lg.output = net_forward_batch(inputs, lt, params, cfg, &c);
    const Index B = inputs.cols();
    if (targets.rows() != lg.output.rows() || targets.cols() != B ||
        (out_weights != nullptr && (out_weights->rows() != targets.rows() || out_weights->cols() != B))) {
        throw InputError("net_loss_grad: target shape mismatch");
    }
    const Matrix diff = lg.output - targets;
    const Matrix wdiff = out_weights != nullptr ? Matrix(out_weights->cwiseProduct(diff)) : diff;
    const double inv_b = B > 0 ? 1.0 / static_cast<double>(B) : 0.0;
    lg.loss = loss_scale * inv_b * diff.cwiseProduct(wdiff).sum();

    const Index n = cfg.n_nodes;
    const Index C = cfg.in_channels();
    const Index F = cfg.f_out;
    const int K = cfg.cheb_order;
    const double slope = cfg.leaky_slope;
    lg.grad = ChebNetParams::zeros(cfg);
    Matrix g = (2.0 * loss_scale * inv_b) * wdiff;
    for (std::size_t l = params.fc_weights.size(); l-- > 0;) {
        if (l + 1 < params.fc_weights.size()) {
            g.array() *= c.pre[l].unaryExpr([slope](double v) { return leaky_relu_grad(v, slope); }).array();
        }
        lg.grad.fc_weights[l].noalias() = g * c.layer_in[l].transpose();
        lg.grad.fc_biases[l] = g.rowwise().sum();
        g = params.fc_weights[l].transpose() * g;
    }
    const Matrix dz = g.cwiseProduct(c.z.unaryExpr([](double v) { return elu_grad(v); }));
    for (Index f = 0; f < F; ++f) {
        lg.grad.gconv_bias.col(f) = dz.middleRows(f * n, n).rowwise().sum();
    }
    std::vector<Matrix> gk(static_cast<std::size_t>(K + 1), Matrix::Zero(n * C, B));
    for (int k = 0; k <= K; ++k) {
        const auto& tk = c.cheb[static_cast<std::size_t>(k)];
        auto& gt = lg.grad.theta[static_cast<std::size_t>(k)];
        const auto& th = params.theta[static_cast<std::size_t>(k)];
        for (Index ch = 0; ch < C; ++ch) {
            for (Index f = 0; f < F; ++f) {
                gt(ch, f) = tk.middleRows(ch * n, n).cwiseProduct(dz.middleRows(f * n, n)).sum();
                gk[static_cast<std::size_t>(k)].middleRows(ch * n, n) += th(ch, f) * dz.middleRows(f * n, n);
            }
        }
    }
    // Reverse of T_k = 2 Lt T_{k-1} - T_{k-2}, T_1 = Lt T_0.
    const Matrix ltt = lt.transpose();
    for (int k = K; k >= 1; --k) {
        auto& cur = gk[static_cast<std::size_t>(k)];
        const double factor = k >= 2 ? 2.0 : 1.0;
        node_view(gk[static_cast<std::size_t>(k - 1)], n).noalias() += factor * ltt * node_view(cur, n);
        if (k >= 2) {
            gk[static_cast<std::size_t>(k - 2)] -= cur;
        }
    }
    lg.d_input = std::move(gk[0]);
    return lg;
}

Matrix build_inputs(const Matrix& x, int H, const std::vector<Index>& zeroed) {
    if (H < 0) {
        throw InputError("build_inputs: H must be nonnegative");
    }
    const Index n = x.rows();
    const Index T = x.cols();
    Matrix out = Matrix::Zero(n * (H + 1), T);
    for (int l = 0; l <= H && l < T; ++l) {
        out.block(l * n, l, n, T - l) = x.leftCols(T - l);
    }
    for (Index i : zeroed) {
        if (i < 0 || i >= n) {
            throw InputError("build_inputs: sensor index out of range");
        }
        for (int l = 0; l <= H; ++l) {
            out.row(l * n + i).setZero();
        }
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(lr > 0.0) || batch_size < 1 || max_epoch < 1) {
        throw InputError("TrainConfig: require lr > 0, batch_size >= 1, max_epoch >= 1");
    }
}

Adam::Adam(Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& x, const Vector& grad) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * grad;
    v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    x.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

namespace {

// Contiguous chronological batches over [0, count), visited in a fresh
// random order every epoch.
std::vector<std::pair<Index, Index>> epoch_batches(Index count, int batch_size, std::mt19937_64& rng) {
    std::vector<std::pair<Index, Index>> out;
    for (Index b = 0; b < count; b += batch_size) {
        out.emplace_back(b, std::min<Index>(batch_size, count - b));
    }
    for (std::size_t i = out.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(out[i - 1], out[j]);
    }
    return out;
}

// Plain gradient descent or Adam on the flattened parameter vector.
class Stepper {
public:
    Stepper(Optimizer opt, Index size, double lr) : opt_(opt), lr_(lr), adam_(size, lr) {}
    void step(Vector& x, const Vector& g) {
        if (opt_ == Optimizer::Adam) {
            adam_.step(x, g);
        } else {
            x -= lr_ * g;
        }
    }

private:
    Optimizer opt_;
    double lr_;
    Adam adam_;
};

double mean_sq_loss(const Matrix& pred, const Matrix& target) {
    if (pred.cols() == 0) {
        return 0.0;
    }
    return (pred - target).squaredNorm() / static_cast<double>(pred.cols());
}

// True once the early-stopping rule fires for the trace so far.
bool should_stop(EarlyStop rule, const std::vector<double>& val) {
    const std::size_t e = val.size();
    if (rule == EarlyStop::PairMean) {
        if (e < 3) {
            return false;
        }
        return (val[e - 1] + val[e - 2]) > (val[e - 2] + val[e - 3]);
    }
    if (rule == EarlyStop::FiveEpochMean) {
        if (e < 10 || e % 5 != 0) {
            return false;
        }
        double cur = 0.0;
        double prev = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            cur += val[e - 1 - i];
            prev += val[e - 6 - i];
        }
        return cur > prev;
    }
    return false;
}

}  // namespace

TrainResult train_prediction_net(const Matrix& x, const Split& split, const Matrix& lt,
                                 const std::vector<Index>& turned_off, ChebNetConfig cfg, const TrainConfig& tc) {
    split.validate(x.cols());
    tc.validate();
    if (turned_off.empty()) {
        throw InputError("train_prediction_net: turned-off set is empty");
    }
    (void)complement(turned_off, x.rows());
    cfg.n_nodes = x.rows();
    cfg.out_dim = static_cast<Index>(turned_off.size());
    cfg.validate();

    const Matrix inputs = build_inputs(x, cfg.H, turned_off);
    Matrix targets(cfg.out_dim, x.cols());
    for (std::size_t r = 0; r < turned_off.size(); ++r) {
        targets.row(static_cast<Index>(r)) = x.row(turned_off[r]);
    }
    TrainResult res;
    res.params = ChebNetParams::glorot(cfg, tc.seed);
    Vector flat = res.params.flatten();
    Stepper stepper(tc.optimizer, flat.size(), tc.lr);
    std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
    const Index n_val = split.validation_size();

    for (int epoch = 0; epoch < tc.max_epoch; ++epoch) {
        double total = 0.0;
        for (auto [b0, len] : epoch_batches(split.t_tv, tc.batch_size, rng)) {
            const auto lg = net_loss_grad(inputs.middleCols(b0, len), targets.middleCols(b0, len), nullptr, lt,
                                          res.params, cfg);
            check_finite_loss(lg.loss, "train_prediction_net");
            total += lg.loss * static_cast<double>(len);
            stepper.step(flat, lg.grad.flatten());
            res.params.unflatten(flat);
        }
        res.train_loss.push_back(total / static_cast<double>(split.t_tv));
        res.epochs = epoch + 1;
        if (n_val > 0) {
            const Matrix pred = net_forward_batch(inputs.middleCols(split.t_tv, n_val), lt, res.params, cfg);
            const double v = mean_sq_loss(pred, targets.middleCols(split.t_tv, n_val));
            check_finite_loss(v, "train_prediction_net");
            res.val_loss.push_back(v);
            if (should_stop(tc.early_stop, res.val_loss)) {
                res.stopped_early = true;
                break;
            }
        }
    }
    return res;
}

std::string to_string(ScoreMeasure m) { return m == ScoreMeasure::R2 ? "r2" : "mse"; }

SensorScores score_predictions(const Matrix& x, const Matrix& predictions, Index begin, Index end,
                               ScoreMeasure measure) {
    const Index len = end - begin;
    if (begin < 0 || end > x.cols() || len < 1 || predictions.rows() != x.rows() || predictions.cols() != len) {
        throw InputError("score_predictions: shape or range mismatch");
    }
    SensorScores s;
    s.measure = measure;
    const auto actual = x.middleCols(begin, len);
    for (Index i = 0; i < x.rows(); ++i) {
        const double sse = (actual.row(i) - predictions.row(i)).squaredNorm();
        if (measure == ScoreMeasure::MSE) {
            s.score.push_back(sse / static_cast<double>(len));
            continue;
        }
        const double mean = actual.row(i).mean();
        const double sst = (actual.row(i).array() - mean).square().sum();
        if (!(sst > 1e-14 * static_cast<double>(len) * std::max(1.0, mean * mean))) {
            throw UndefinedScoreError("R^2 undefined for sensor " + std::to_string(i) + ": zero variance");
        }
        s.score.push_back(1.0 - sse / sst);
    }
    s.ranking.resize(s.score.size());
    std::iota(s.ranking.begin(), s.ranking.end(), Index{0});
    std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](Index a, Index b) {
        const double sa = s.score[static_cast<std::size_t>(a)];
        const double sb = s.score[static_cast<std::size_t>(b)];
        return measure == ScoreMeasure::R2 ? sa > sb : sa < sb;
    });
    return s;
}

SensorScores score_sensors(const ChebNetParams& params, const ChebNetConfig& cfg, const Matrix& lt, const Matrix& x,
                           Index begin, Index end, ScoreMeasure measure) {
    if (cfg.out_dim != x.rows()) {
        throw InputError("score_sensors: network must output every sensor");
    }
    if (begin < 0 || end > x.cols() || end <= begin) {
        throw InputError("score_sensors: empty scoring range");
    }
    const Matrix inputs = build_inputs(x.leftCols(end), cfg.H);
    const Matrix pred = net_forward_batch(inputs.middleCols(begin, end - begin), lt, params, cfg);
    return score_predictions(x, pred, begin, end, measure);
}

DropoutSelection train_selection_dropout(const Matrix& x, const Split& split, const Matrix& lt, int p,
                                         ChebNetConfig cfg, const TrainConfig& tc, ScoreMeasure measure) {
    split.validate(x.cols());
    tc.validate();
    const Index n = x.rows();
    if (p < 1 || p >= n) {
        throw InputError("train_selection_dropout: require 1 <= p < N");
    }
    if (split.validation_size() < 2) {
        throw InputError("train_selection_dropout: scoring needs validation rows");
    }
    cfg.n_nodes = n;
    cfg.out_dim = n;
    cfg.validate();
    const int C = cfg.in_channels();
    const double q = static_cast<double>(p) / static_cast<double>(n);

    DropoutSelection out;
    TrainResult& res = out.training;
    res.params = ChebNetParams::glorot(cfg, tc.seed);
    Vector flat = res.params.flatten();
    Stepper stepper(tc.optimizer, flat.size(), tc.lr);
    std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 drop_rng(tc.seed ^ 0xd1b54a32d192ed03ULL);
    const Matrix inputs = build_inputs(x, cfg.H);
    const Index n_val = split.validation_size();

    // Draws a dropout vector, redrawing the all-kept and all-dropped cases.
    const auto draw_mask = [&](std::mt19937_64& r, Vector& w) {
        long redrawn = 0;
        while (true) {
            for (Index i = 0; i < n; ++i) {
                w(i) = uniform01(r) < q ? 0.0 : 1.0;
            }
            const double kept = w.sum();
            if (kept > 0.0 && kept < static_cast<double>(n)) {
                return redrawn;
            }
            ++redrawn;
        }
    };
    const auto apply_mask = [&](Matrix& in, const Vector& w, Index col) {
        for (int c = 0; c < C; ++c) {
            in.col(col).segment(c * n, n).array() *= w.array();
        }
    };

    // Validation loss uses one fixed dropout vector per validation hour so it
    // tracks the masked training objective across epochs.
    Matrix val_in = inputs.middleCols(split.t_tv, n_val);
    Matrix val_weights(n, n_val);
    {
        std::mt19937_64 val_rng(tc.seed ^ 0x94d049bb133111ebULL);
        Vector w(n);
        for (Index j = 0; j < n_val; ++j) {
            draw_mask(val_rng, w);
            apply_mask(val_in, w, j);
            val_weights.col(j) = (1.0 - w.array()).matrix();
        }
    }
    const Matrix val_target = x.middleCols(split.t_tv, n_val);

    Vector w(n);
    for (int epoch = 0; epoch < tc.max_epoch; ++epoch) {
        double total = 0.0;
        for (auto [b0, len] : epoch_batches(split.t_tv, tc.batch_size, rng)) {
            out.resampled += draw_mask(drop_rng, w);
            Matrix in = inputs.middleCols(b0, len);
            for (int c = 0; c < C; ++c) {
                in.middleRows(c * n, n).array().colwise() *= w.array();
            }
            const Matrix weights = (1.0 - w.array()).matrix().replicate(1, len);
            const auto lg = net_loss_grad(in, x.middleCols(b0, len), &weights, lt, res.params, cfg);
            check_finite_loss(lg.loss, "train_selection_dropout");
            total += lg.loss * static_cast<double>(len);
            stepper.step(flat, lg.grad.flatten());
            res.params.unflatten(flat);
        }
        res.train_loss.push_back(total / static_cast<double>(split.t_tv));
        res.epochs = epoch + 1;
        const Matrix pred = net_forward_batch(val_in, lt, res.params, cfg);
        const double v = (val_weights.array() * (pred - val_target).array().square()).sum() /
                         static_cast<double>(n_val);
        check_finite_loss(v, "train_selection_dropout");
        res.val_loss.push_back(v);
        if (should_stop(tc.early_stop, res.val_loss)) {
            res.stopped_early = true;
            break;
        }
    }

    try {
        out.scores = score_sensors(res.params, cfg, lt, x, split.t_tv, split.t0, measure);
    } catch (const UndefinedScoreError& e) {
        out.selection.warnings.push_back(std::string(e.what()) + "; scoring by MSE instead");
        out.scores = score_sensors(res.params, cfg, lt, x, split.t_tv, split.t0, ScoreMeasure::MSE);
    }
    auto& sel = out.selection;
    sel.method = "gcn-dropout";
    sel.hyperparams = {{"H", cfg.H},
                       {"p", p},
                       {"dropout_rate", q},
                       {"measure", to_string(out.scores.measure)},
                       {"lr", tc.lr},
                       {"batch_size", tc.batch_size},
                       {"max_epoch", tc.max_epoch},
                       {"epochs", res.epochs},
                       {"seed", tc.seed},
                       {"cheb_order", cfg.cheb_order},
                       {"f_out", cfg.f_out},
                       {"fc_sizes", cfg.fc_sizes}};
    for (int j = 0; j < p; ++j) {
        const Index i = out.scores.ranking[static_cast<std::size_t>(j)];
        sel.order.push_back(i);
        sel.step_values.push_back(out.scores.score[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) {
        throw InputError("linspace: count must be positive");
    }
    std::vector<double> v;
    for (int i = 0; i < count; ++i) {
        v.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    }
    return v;
}

MaskingSelection train_selection_masking(const Matrix& x, const Split& split, const Matrix& lt, int p,
                                         const std::vector<double>& lambdas, double eps0, ChebNetConfig cfg,
                                         const TrainConfig& tc) {
    split.validate(x.cols());
    tc.validate();
    const Index n = x.rows();
    if (p < 1 || p >= n) {
        throw InputError("train_selection_masking: require 1 <= p < N");
    }
    if (lambdas.empty() || !(eps0 > 0.0)) {
        throw InputError("train_selection_masking: need a lambda grid and eps0 > 0");
    }
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        if (lambdas[j] < 0.0 || (j > 0 && lambdas[j] < lambdas[j - 1])) {
            throw InputError("train_selection_masking: lambda grid must be ascending and nonnegative");
        }
    }
    cfg.n_nodes = n;
    cfg.out_dim = n;
    cfg.validate();
    const int C = cfg.in_channels();
    const Matrix raw = build_inputs(x, cfg.H);
    const ChebNetParams init = ChebNetParams::glorot(cfg, tc.seed);
    const Index np = init.size();

    MaskingSelection out;
    out.lambdas = lambdas;
    for (double lambda : lambdas) {
        ChebNetParams params = init;
        Vector flat(np + n);
        flat.head(np) = params.flatten();
        flat.tail(n).setOnes();
        Stepper stepper(tc.optimizer, flat.size(), tc.lr);
        std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
        Vector grad(np + n);
        for (int epoch = 0; epoch < tc.max_epoch; ++epoch) {
            for (auto [b0, len] : epoch_batches(split.t_tv, tc.batch_size, rng)) {
                const Vector w = flat.tail(n);
                const auto raw_b = raw.middleCols(b0, len);
                Matrix in = raw_b;
                for (int c = 0; c < C; ++c) {
                    in.middleRows(c * n, n).array().colwise() *= w.array();
                }
                const Matrix weights = (1.0 - w.array()).square().matrix().replicate(1, len);
                const auto target = x.middleCols(b0, len);
                const auto lg = net_loss_grad(in, target, &weights, lt, params, cfg);
                check_finite_loss(lg.loss, "train_selection_masking");
                Vector gw = Vector::Constant(n, lambda);
                for (int c = 0; c < C; ++c) {
                    gw += lg.d_input.middleRows(c * n, n).cwiseProduct(raw_b.middleRows(c * n, n)).rowwise().sum();
                }
                const Vector sq = (lg.output - target).cwiseAbs2().rowwise().sum() / static_cast<double>(len);
                gw.array() -= 2.0 * (1.0 - w.array()) * sq.array();
                grad.head(np) = lg.grad.flatten();
                grad.tail(n) = gw;
                stepper.step(flat, grad);
                flat.tail(n) = flat.tail(n).cwiseMax(0.0).cwiseMin(1.0);
                params.unflatten(flat.head(np));
            }
        }
        out.weights.push_back(flat.tail(n));
    }

    out.counts.assign(static_cast<std::size_t>(n), 0);
    for (const auto& w : out.weights) {
        for (Index i = 0; i < n; ++i) {
            out.counts[static_cast<std::size_t>(i)] += w(i) < eps0 ? 1 : 0;
        }
    }
    // Ties in F_i go to the sensor whose weight shrinks earlier along the
    // path, i.e. the smaller mean weight over the grid.
    Vector path_mean = Vector::Zero(n);
    for (const auto& w : out.weights) {
        path_mean += w;
    }
    path_mean /= static_cast<double>(out.weights.size());
    std::vector<Index> rank(static_cast<std::size_t>(n));
    std::iota(rank.begin(), rank.end(), Index{0});
    std::stable_sort(rank.begin(), rank.end(), [&](Index a, Index b) {
        const int fa = out.counts[static_cast<std::size_t>(a)];
        const int fb = out.counts[static_cast<std::size_t>(b)];
        if (fa != fb) {
            return fa > fb;
        }
        return path_mean(a) < path_mean(b);
    });
    auto& sel = out.selection;
    sel.method = "gcn-mask";
    sel.hyperparams = {{"H", cfg.H},       {"p", p},
                       {"lambdas", lambdas}, {"eps0", eps0},
                       {"lr", tc.lr},      {"batch_size", tc.batch_size},
                       {"max_epoch", tc.max_epoch}, {"seed", tc.seed},
                       {"cheb_order", cfg.cheb_order}, {"f_out", cfg.f_out},
                       {"fc_sizes", cfg.fc_sizes}, {"counts", out.counts},
                       {"ranking", rank}};
    out.ranking = rank;
    const auto below = std::count_if(out.counts.begin(), out.counts.end(), [](int c) { return c > 0; });
    if (below < p) {
        std::ostringstream os;
        os << "only " << below << " of " << p
           << " sensors ever fell below eps0; the rest are ranked by mean weight along the lambda path";
        sel.warnings.push_back(os.str());
    }
    for (int j = 0; j < p; ++j) {
        const Index i = rank[static_cast<std::size_t>(j)];
        sel.order.push_back(i);
        sel.step_values.push_back(out.counts[static_cast<std::size_t>(i)]);
    }
    return out;
}

GcnReconstructor::GcnReconstructor(std::vector<Index> turned_off, ChebNetConfig cfg, ChebNetParams params, Matrix lt)
    : turned_off_(std::move(turned_off)), cfg_(std::move(cfg)), params_(std::move(params)), lt_(std::move(lt)) {
    cfg_.validate();
    params_.check_shapes(cfg_);
    if (static_cast<Index>(turned_off_.size()) != cfg_.out_dim || lt_.rows() != cfg_.n_nodes) {
        throw InputError("GcnReconstructor: network does not match the turned-off set");
    }
}

Matrix GcnReconstructor::predict(const Matrix& x, Index begin, Index end) const {
    if (x.rows() != cfg_.n_nodes || begin < 0 || end > x.cols() || end < begin) {
        throw InputError("GcnReconstructor::predict: range or shape mismatch");
    }
    if (end == begin) {
        return Matrix(cfg_.out_dim, 0);
    }
    const Matrix inputs = build_inputs(x.leftCols(end), cfg_.H, turned_off_);
    return net_forward_batch(inputs.middleCols(begin, end - begin), lt_, params_, cfg_);
}

namespace {

constexpr char kMagic[8] = {'N', 'S', 'C', 'H', 'E', 'B', '0', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) {
        throw InputError("load_params: truncated file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    }
    return v;
}

nlohmann::json config_to_json(const ChebNetConfig& c) {
    return {{"cheb_order", c.cheb_order}, {"f_out", c.f_out},     {"fc_sizes", c.fc_sizes},
            {"leaky_slope", c.leaky_slope}, {"H", c.H},         {"n_nodes", c.n_nodes},
            {"out_dim", c.out_dim}};
}

}  // namespace

void save_params(const std::string& path, const ChebNetConfig& cfg, const ChebNetParams& params) {
    params.check_shapes(cfg);
    nlohmann::json manifest;
    manifest["config"] = config_to_json(cfg);
    auto tensor = [&](const std::string& name, Index r, Index c) {
        manifest["tensors"].push_back({{"name", name}, {"rows", r}, {"cols", c}});
    };
    for (std::size_t k = 0; k < params.theta.size(); ++k) {
        tensor("theta." + std::to_string(k), params.theta[k].rows(), params.theta[k].cols());
    }
    tensor("gconv_bias", params.gconv_bias.rows(), params.gconv_bias.cols());
    for (std::size_t l = 0; l < params.fc_weights.size(); ++l) {
        tensor("fc_weight." + std::to_string(l), params.fc_weights[l].rows(), params.fc_weights[l].cols());
        tensor("fc_bias." + std::to_string(l), params.fc_biases[l].size(), 1);
    }
    manifest["count"] = params.size();
    const std::string text = manifest.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw InputError("save_params: cannot open " + path);
    }
    os.write(kMagic, sizeof kMagic);
    write_u64(os, kFormatVersion);
    write_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    const Vector flat = params.flatten();
    for (Index i = 0; i < flat.size(); ++i) {
        write_u64(os, std::bit_cast<std::uint64_t>(flat(i)));
    }
    if (!os) {
        throw InputError("save_params: write failed for " + path);
    }
}

std::pair<ChebNetConfig, ChebNetParams> load_params(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw InputError("load_params: cannot open " + path);
    }
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw InputError("load_params: not a parameter container");
    }
    if (read_u64(is) != kFormatVersion) {
        throw InputError("load_params: unsupported container version");
    }
    const auto len = read_u64(is);
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) {
        throw InputError("load_params: truncated manifest");
    }
    ChebNetConfig cfg;
    try {
        const auto m = nlohmann::json::parse(text);
        const auto& c = m.at("config");
        cfg.cheb_order = c.at("cheb_order").get<int>();
        cfg.f_out = c.at("f_out").get<int>();
        cfg.fc_sizes = c.at("fc_sizes").get<std::vector<int>>();
        cfg.leaky_slope = c.at("leaky_slope").get<double>();
        cfg.H = c.at("H").get<int>();
        cfg.n_nodes = c.at("n_nodes").get<Index>();
        cfg.out_dim = c.at("out_dim").get<Index>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("load_params: bad manifest: ") + e.what());
    }
    ChebNetParams params = ChebNetParams::zeros(cfg);
    Vector flat(params.size());
    for (Index i = 0; i < flat.size(); ++i) {
        flat(i) = std::bit_cast<double>(read_u64(is));
    }
    params.unflatten(flat);
    return {cfg, params};
}

}  // namespace netselect
