#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "netselect/graph.hpp"
#include "netselect/reconstructor.hpp"
#include "netselect/select_linear.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

// One GConv layer (elu) -> flatten -> FC stack (leaky relu) -> linear output.
struct ChebNetConfig {
    int cheb_order = 8;                 // K
    int f_out = 8;                      // GConv output channels
    std::vector<int> fc_sizes{32, 64, 16};
    double leaky_slope = 0.2;
    int H = 0;                          // input lags 0..H become channels
    Index n_nodes = 0;
    Index out_dim = 0;

    int in_channels() const { return H + 1; }
    void validate() const;

    // K = 50, F = 16, FC (128, 500, 64).
    static ChebNetConfig full_scale(Index n_nodes, Index out_dim, int H);
};

struct ChebNetParams {
    std::vector<Matrix> theta;       // K+1 matrices, in_channels x f_out
    Matrix gconv_bias;               // n_nodes x f_out
    std::vector<Matrix> fc_weights;  // hidden layers then the output layer, out x in
    std::vector<Vector> fc_biases;

    static ChebNetParams zeros(const ChebNetConfig& cfg);
    // Uniform in +-sqrt(6 / (fan_in + fan_out)) per tensor, zero biases.
    static ChebNetParams glorot(const ChebNetConfig& cfg, std::uint64_t seed);

    Index size() const;
    Vector flatten() const;
    void unflatten(const Vector& v);
    void check_shapes(const ChebNetConfig& cfg) const;
};

double elu(double x);
double elu_grad(double x);
double leaky_relu(double x, double slope);
double leaky_relu_grad(double x, double slope);

// 2 L / lambda_max - Id.
Matrix scale_laplacian(const SymMatrix& laplacian, double lambda_max);
// Normalized Laplacian of g rescaled with its power-method lambda_max.
Matrix scaled_graph_laplacian(const SensorGraph& g);

// [T_0(Lt) X, ..., T_K(Lt) X].
std::vector<Matrix> cheb_apply(const Matrix& lt, int K, const Matrix& x);

// Single-sample GConv: h_in is n x F_in, returns n x F_out after elu.
Matrix gconv_forward(const Matrix& h_in, const Matrix& lt, const ChebNetParams& params);

// Batched inputs are (n * C) x B with channel c of sample b in rows
// [c n, (c + 1) n) of column b.
struct ForwardCache {
    std::vector<Matrix> cheb;        // per k, (n C) x B
    Matrix z;                        // (n F) x B pre-activation, channel-major
    std::vector<Matrix> layer_in;    // input of each FC layer
    std::vector<Matrix> pre;         // pre-activation of each FC layer
};

Matrix net_forward_batch(const Matrix& inputs, const Matrix& lt, const ChebNetParams& params,
                         const ChebNetConfig& cfg, ForwardCache* cache = nullptr);
// x_input is n x (H + 1), column l holding x_{t-l}.
Vector net_forward(const Matrix& x_input, const Matrix& lt, const ChebNetParams& params, const ChebNetConfig& cfg);

struct LossGrad {
    double loss = 0.0;
    Matrix output;
    ChebNetParams grad;
    Matrix d_input;  // same layout as the batched inputs
};

// Loss (1/B) sum_b sum_o w_ob (y_ob - target_ob)^2 with optional per-output
// weights (same shape as targets), and its exact gradient.
LossGrad net_loss_grad(const Matrix& inputs, const Matrix& targets, const Matrix* out_weights, const Matrix& lt,
                       const ChebNetParams& params, const ChebNetConfig& cfg, double loss_scale = 1.0);

// Batched inputs for every hour of x: (n (H+1)) x T, zero before hour 0 and
// at rows of `zeroed` sensors.
Matrix build_inputs(const Matrix& x, int H, const std::vector<Index>& zeroed = {});

enum class Optimizer { Adam, GradientDescent };
enum class EarlyStop { None, PairMean, FiveEpochMean };

struct TrainConfig {
    Optimizer optimizer = Optimizer::Adam;
    double lr = 1e-3;
    int batch_size = 50;
    int max_epoch = 50;
    EarlyStop early_stop = EarlyStop::PairMean;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainResult {
    ChebNetParams params;
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    int epochs = 0;
    bool stopped_early = false;
};

class Adam {
public:
    Adam(Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(Vector& x, const Vector& grad);

private:
    double lr_, b1_, b2_, eps_;
    Vector m_, v_;
    long t_ = 0;
};

// Prediction network with missing set I: inputs zero at I, targets x_I.
TrainResult train_prediction_net(const Matrix& x, const Split& split, const Matrix& lt,
                                 const std::vector<Index>& turned_off, ChebNetConfig cfg, const TrainConfig& tc);

enum class ScoreMeasure { R2, MSE };
std::string to_string(ScoreMeasure m);

struct SensorScores {
    std::vector<double> score;
    ScoreMeasure measure = ScoreMeasure::R2;
    std::vector<Index> ranking;  // descending for R2, ascending for MSE; ties by index
};

// Per-sensor R^2 (mean-centred denominator) or MSE of predictions on hours [begin, end).
SensorScores score_predictions(const Matrix& x, const Matrix& predictions, Index begin, Index end,
                               ScoreMeasure measure);
SensorScores score_sensors(const ChebNetParams& params, const ChebNetConfig& cfg, const Matrix& lt, const Matrix& x,
                           Index begin, Index end, ScoreMeasure measure);

struct DropoutSelection {
    SelectionResult selection;
    SensorScores scores;
    TrainResult training;
    long resampled = 0;  // degenerate dropout vectors redrawn
};

// Selection net with Bernoulli input dropout (zero probability p / N) and
// reversed output masking, trained by plain gradient descent; sensors are
// ranked by their validation score.
DropoutSelection train_selection_dropout(const Matrix& x, const Split& split, const Matrix& lt, int p,
                                         ChebNetConfig cfg, const TrainConfig& tc,
                                         ScoreMeasure measure = ScoreMeasure::R2);

struct MaskingSelection {
    SelectionResult selection;
    std::vector<double> lambdas;
    std::vector<Vector> weights;  // final mask per lambda
    std::vector<int> counts;      // F_i
    std::vector<Index> ranking;   // every sensor, most removable first
};

// Evenly spaced grid from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

// Trainable input mask in [0, 1] with an l1 penalty, trained independently
// for each lambda from the same initialization. F_i counts the lambdas whose
// final w_i falls below eps0; sensors rank by descending F_i, then by the
// smaller mean weight along the lambda path, then by index.
MaskingSelection train_selection_masking(const Matrix& x, const Split& split, const Matrix& lt, int p,
                                         const std::vector<double>& lambdas, double eps0, ChebNetConfig cfg,
                                         const TrainConfig& tc);

// Reconstructs x_I from the observed sensors through a trained prediction net.
class GcnReconstructor : public Reconstructor {
public:
    GcnReconstructor(std::vector<Index> turned_off, ChebNetConfig cfg, ChebNetParams params, Matrix lt);

    const std::vector<Index>& turned_off() const override { return turned_off_; }
    Matrix predict(const Matrix& x, Index begin, Index end) const override;

private:
    std::vector<Index> turned_off_;
    ChebNetConfig cfg_;
    ChebNetParams params_;
    Matrix lt_;
};

// Versioned binary container: magic, version, JSON shape manifest, raw doubles.
void save_params(const std::string& path, const ChebNetConfig& cfg, const ChebNetParams& params);
std::pair<ChebNetConfig, ChebNetParams> load_params(const std::string& path);

}  // namespace netselect
