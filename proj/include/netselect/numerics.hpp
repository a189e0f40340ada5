#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "netselect/errors.hpp"

namespace netselect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Dense symmetric matrix. Construction checks symmetry to a relative 1e-10 and
// then stores the exact average (M + M^T) / 2, so entries(i,j) == entries(j,i).
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(Index n);
    static SymMatrix diagonal(const Vector& d);

    Index size() const { return m_.rows(); }
    double operator()(Index i, Index j) const { return m_(i, j); }
    const Matrix& mat() const { return m_; }
    double trace() const { return m_.trace(); }

    // Principal submatrix on the given index list (in the given order).
    SymMatrix restrict(std::span<const Index> idx) const;

private:
    Matrix m_;
};

struct EigenPair {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns
};

EigenPair sym_eig(const SymMatrix& m);

struct SolveOptions {
    // Apply the trace-scaled diagonal jitter when the smallest eigenvalue is
    // below 1e-12 * trace / n. Disabled only in tests that probe the raw path.
    bool allow_jitter = true;
};

// Solves A X = B for symmetric positive definite A.
Matrix solve_spd(const SymMatrix& a, const Matrix& b, SolveOptions opts = {});
Matrix solve_spd(const Matrix& a, const Matrix& b, SolveOptions opts = {});

struct CgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

// Conjugate gradient for symmetric PSD A; stops when ||Ax - b|| <= eps ||b||.
// Throws ConvergenceError after 10 n iterations.
CgResult conjugate_gradient(const Matrix& a, const Vector& b, double eps);
inline CgResult conjugate_gradient(const SymMatrix& a, const Vector& b, double eps) {
    return conjugate_gradient(a.mat(), b, eps);
}

struct PowerResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

PowerResult power_method(const Matrix& a, double tol = 1e-12, int max_iter = 20000);
inline PowerResult power_method(const SymMatrix& a, double tol = 1e-12, int max_iter = 20000) {
    return power_method(a.mat(), tol, max_iter);
}

// Sub-block a(rows, cols).
Matrix take(const Matrix& a, std::span<const Index> rows, std::span<const Index> cols);

// log det of a symmetric positive definite matrix; throws on non-PD input.
double log_det_spd(const Matrix& a);

bool all_finite(const Matrix& a);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// Thread count from the NETSELECT_THREADS environment variable, or 1.
int default_threads();

}  // namespace netselect
