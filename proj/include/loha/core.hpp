#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace loha {

// Error taxonomy. The CLI maps these onto exit codes, everything else just
// lets them propagate.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct input_error : error {
    using error::error;
};
struct parameter_error : error {
    using error::error;
};
struct shape_error : error {
    using error::error;
};
struct numeric_error : error {
    using error::error;
};
struct usage_error : error {
    using error::error;
};
struct io_error : error {
    using error::error;
};

// Dense row-major matrix of doubles. All training math is 64-bit; the
// finite-difference tolerances are unreachable in single precision.
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), d_(static_cast<size_t>(rows) * cols, 0.0) {
        if (rows < 0 || cols < 0) throw parameter_error("Matrix: negative dimensions");
    }
    Matrix(int rows, int cols, std::vector<double> data) : rows_(rows), cols_(cols), d_(std::move(data)) {
        if (d_.size() != static_cast<size_t>(rows) * cols)
            throw shape_error("Matrix: data length does not match rows*cols");
    }

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
    static Matrix scalar(double v) {
        Matrix m(1, 1);
        m.d_[0] = v;
        return m;
    }
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return d_.size(); }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    double& operator()(int i, int j) { return d_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return d_[static_cast<size_t>(i) * cols_ + j]; }
    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }
    double* row_ptr(int i) { return d_.data() + static_cast<size_t>(i) * cols_; }
    const double* row_ptr(int i) const { return d_.data() + static_cast<size_t>(i) * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : d_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> d_;
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// ---- plain (non-differentiable) matrix helpers used by oracles, the linear
// probe and the Monte-Carlo checker ----

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw shape_error("matmul: " + shape_str(a) + " * " + shape_str(b));
    Matrix c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i) {
        double* ci = c.row_ptr(i);
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

// a * b^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw shape_error("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    Matrix c(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i) {
        const double* ai = a.row_ptr(i);
        for (int j = 0; j < b.rows(); ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

// a^T * b
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw shape_error("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
    Matrix c(a.cols(), b.cols());
    for (int k = 0; k < a.rows(); ++k) {
        const double* ak = a.row_ptr(k);
        const double* bk = b.row_ptr(k);
        for (int i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (int j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw shape_error("add: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

inline Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw shape_error("sub: " + shape_str(a) + " vs " + shape_str(b));
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

inline Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw shape_error("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// Deterministic RNG wrapper. One engine per experiment; seeding is part of
// every public entry point that draws randomness.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(eng_);
    }
    double gaussian(double mean, double stddev) {
        std::normal_distribution<double> d(mean, stddev);
        return d(eng_);
    }
    bool bernoulli(double p) {
        std::bernoulli_distribution d(p);
        return d(eng_);
    }
    int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive range
        std::uniform_int_distribution<int64_t> d(lo, hi);
        return d(eng_);
    }
    std::mt19937_64& engine() { return eng_; }

    Matrix uniform_matrix(int rows, int cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (size_t i = 0; i < m.size(); ++i) m.data()[i] = uniform(lo, hi);
        return m;
    }
    Matrix gaussian_matrix(int rows, int cols, double mean, double stddev) {
        Matrix m(rows, cols);
        for (size_t i = 0; i < m.size(); ++i) m.data()[i] = gaussian(mean, stddev);
        return m;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace loha
