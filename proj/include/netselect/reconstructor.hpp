#pragma once

#include <vector>

#include "netselect/numerics.hpp"

namespace netselect {

// Predicts the signals of turned-off sensors from the observed ones.
class Reconstructor {
public:
    virtual ~Reconstructor() = default;

    virtual const std::vector<Index>& turned_off() const = 0;

    // Predictions for hours [begin, end) as a |I| x (end - begin) matrix.
    // `x` is the full sensors x hours panel; rows of turned-off sensors are
    // never read.
    virtual Matrix predict(const Matrix& x, Index begin, Index end) const = 0;
};

// x_hat_{I,t} = Theta x^H_{S,t}, with x^H the stacked lag vector and hours
// before the panel start read as zero.
class LagReconstructor : public Reconstructor {
public:
    LagReconstructor(std::vector<Index> targets, std::vector<Index> predictors, int H, Matrix theta);

    const std::vector<Index>& turned_off() const override { return targets_; }
    const std::vector<Index>& predictors() const { return predictors_; }
    int lag_depth() const { return H_; }
    const Matrix& theta() const { return theta_; }

    Matrix predict(const Matrix& x, Index begin, Index end) const override;

private:
    std::vector<Index> targets_;
    std::vector<Index> predictors_;
    int H_;
    Matrix theta_;
};

// Mean over hours [begin, end) of ||x_{I,t} - x_hat_{I,t}||^2 (summed over I).
double reconstruction_mse(const Reconstructor& rec, const Matrix& x, Index begin, Index end);

}  // namespace netselect
