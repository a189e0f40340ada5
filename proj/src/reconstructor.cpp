#include "netselect/reconstructor.hpp"

#include "netselect/errors.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

LagReconstructor::LagReconstructor(std::vector<Index> targets, std::vector<Index> predictors, int H, Matrix theta)
    : targets_(std::move(targets)), predictors_(std::move(predictors)), H_(H), theta_(std::move(theta)) {
    const auto q = static_cast<Index>(predictors_.size()) * (H_ + 1);
    if (theta_.rows() != static_cast<Index>(targets_.size()) || theta_.cols() != q) {
        throw InputError("LagReconstructor: coefficient shape does not match sensor sets");
    }
}

Matrix LagReconstructor::predict(const Matrix& x, Index begin, Index end) const {
    if (begin < 0 || end > x.cols() || begin > end) {
        throw InputError("LagReconstructor::predict: hour range outside panel");
    }
    Matrix out(theta_.rows(), end - begin);
    for (Index t = begin; t < end; ++t) {
        out.col(t - begin) = theta_ * lag_vector(x, predictors_, t, H_);
    }
    return out;
}

double reconstruction_mse(const Reconstructor& rec, const Matrix& x, Index begin, Index end) {
    if (end <= begin) {
        throw InputError("reconstruction_mse: empty hour range");
    }
    const Matrix pred = rec.predict(x, begin, end);
    const auto& idx = rec.turned_off();
    double total = 0.0;
    for (Index t = begin; t < end; ++t) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double d = x(idx[k], t) - pred(static_cast<Index>(k), t - begin);
            total += d * d;
        }
    }
    return total / static_cast<double>(end - begin);
}

}  // namespace netselect
