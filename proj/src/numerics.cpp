#include "netselect/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <random>
#include <sstream>
#include <string>
#include <thread>

namespace netselect {

SymMatrix::SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw InputError("SymMatrix: expected a non-empty square matrix");
    }
    if (!all_finite(m)) {
        throw InputError("SymMatrix: non-finite entry");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        std::ostringstream os;
        os << "SymMatrix: input is not symmetric (max asymmetry " << asym << ")";
        throw InputError(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

SymMatrix SymMatrix::restrict(std::span<const Index> idx) const {
    return SymMatrix(take(m_, idx, idx));
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix take(const Matrix& a, std::span<const Index> rows, std::span<const Index> cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (Index c = 0; c < out.cols(); ++c) {
        for (Index r = 0; r < out.rows(); ++r) {
            out(r, c) = a(rows[r], cols[c]);
        }
    }
    return out;
}

EigenPair sym_eig(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.mat());
    if (solver.info() != Eigen::Success) {
        throw InputError("sym_eig: eigen decomposition failed");
    }
    EigenPair out{solver.eigenvalues(), solver.eigenvectors()};
    // Sign convention: the largest-magnitude component of each vector is
    // nonnegative (first such component on ties).
    for (Index c = 0; c < out.vectors.cols(); ++c) {
        Index arg = 0;
        double best = -1.0;
        for (Index r = 0; r < out.vectors.rows(); ++r) {
            const double v = std::abs(out.vectors(r, c));
            if (v > best * (1.0 + 1e-12)) {
                best = v;
                arg = r;
            }
        }
        if (out.vectors(arg, c) < 0.0) {
            out.vectors.col(c) *= -1.0;
        }
    }
    return out;
}

namespace {

double smallest_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

}  // namespace

Matrix solve_spd(const Matrix& a, const Matrix& b, SolveOptions opts) {
    if (a.rows() != a.cols() || a.rows() != b.rows()) {
        throw InputError("solve_spd: shape mismatch");
    }
    if (!all_finite(a) || !all_finite(b)) {
        throw InputError("solve_spd: non-finite input");
    }
    const Index n = a.rows();
    if (n == 0) {
        return Matrix(0, b.cols());
    }

    Eigen::LLT<Matrix> llt(a);
    // rcond <= lambda_min / lambda_max, so a healthy estimate rules out the
    // jitter condition without an eigen decomposition.
    if (llt.info() == Eigen::Success && llt.rcond() > 1e-8) {
        return llt.solve(b);
    }

    const double mean_diag = a.trace() / static_cast<double>(n);
    const double lmin = smallest_eigenvalue(a);
    if (lmin >= 1e-12 * mean_diag && llt.info() == Eigen::Success && lmin > 0.0) {
        return llt.solve(b);
    }
    if (opts.allow_jitter && mean_diag > 0.0) {
        Matrix jittered = a;
        jittered.diagonal().array() += 1e-10 * mean_diag;
        Eigen::LLT<Matrix> llt2(jittered);
        if (llt2.info() == Eigen::Success) {
            return llt2.solve(b);
        }
    }
    std::ostringstream os;
    os << "solve_spd: matrix is numerically singular (smallest eigenvalue " << lmin << ")";
    throw SingularityError(os.str(), lmin);
}

Matrix solve_spd(const SymMatrix& a, const Matrix& b, SolveOptions opts) {
    return solve_spd(a.mat(), b, opts);
}

CgResult conjugate_gradient(const Matrix& a, const Vector& b, double eps) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw InputError("conjugate_gradient: shape mismatch");
    }
    if (!(eps > 0.0)) {
        throw InputError("conjugate_gradient: tolerance must be positive");
    }
    const Index n = b.size();
    CgResult out;
    out.x = Vector::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        return out;
    }
    const double target = eps * bnorm;
    const int cap = static_cast<int>(10 * n);

    Vector r = b;
    Vector p = r;
    double rr = r.squaredNorm();
    for (int it = 1; it <= cap; ++it) {
        const Vector ap = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            break;
        }
        const double alpha = rr / pap;
        out.x += alpha * p;
        // Periodic restart from the true residual limits drift under rounding.
        if (it % n == 0) {
            r = b - a * out.x;
            rr = r.squaredNorm();
            p = r;
        } else {
            r -= alpha * ap;
            const double rr_next = r.squaredNorm();
            p = r + (rr_next / rr) * p;
            rr = rr_next;
        }
        out.iterations = it;
        if (std::sqrt(rr) <= target) {
            const double true_res = (b - a * out.x).norm();
            if (true_res <= target) {
                out.relative_residual = true_res / bnorm;
                return out;
            }
            r = b - a * out.x;
            rr = r.squaredNorm();
            p = r;
        }
    }
    const double res = (b - a * out.x).norm() / bnorm;
    std::ostringstream os;
    os << "conjugate_gradient: no convergence after " << out.iterations
       << " iterations (relative residual " << res << ")";
    throw ConvergenceError(os.str(), res);
}

PowerResult power_method(const Matrix& a, double tol, int max_iter) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw InputError("power_method: expected a non-empty square matrix");
    }
    if (!all_finite(a)) {
        throw InputError("power_method: non-finite input");
    }
    const Index n = a.rows();
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v(i) = unif(rng) * ((i % 2 == 0) ? 1.0 : -1.0);
    }
    v.normalize();

    PowerResult out;
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = a * v;
        const double lambda = v.dot(w);
        const double wn = w.norm();
        out.iterations = it;
        out.value = lambda;
        if (wn == 0.0) {
            out.converged = true;
            return out;
        }
        v = w / wn;
        if (it > 1 && std::abs(lambda - prev) <= tol * std::abs(lambda)) {
            out.converged = true;
            return out;
        }
        prev = lambda;
    }
    return out;
}

double log_det_spd(const Matrix& a) {
    if (a.rows() == 0) {
        return 0.0;
    }
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SingularityError("log_det_spd: matrix is not positive definite", smallest_eigenvalue(a));
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    // Failures are kept per index and the lowest one is rethrown, so the
    // reported error does not depend on scheduling.
    std::vector<std::exception_ptr> failures(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }
}

int default_threads() {
    if (const char* env = std::getenv("NETSELECT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) {
            return v;
        }
    }
    return 1;
}

}  // namespace netselect
