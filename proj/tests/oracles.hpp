// Test-only oracles, kept independent of the library's computation paths.
#pragma once

#include <functional>

#include "loha/loha.hpp"

namespace oracles {

using loha::Matrix;

// Naive triple-loop matmul; the reference for the optimized kernels.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

// Relative agreement with an absolute floor so near-zero gradients compare
// absolutely (1e-4 * 1e-4 = 1e-8).
inline double rel_err(double a, double b, double floor = 1e-4) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central finite differences of a scalar function of several plain matrices,
// w.r.t. entry (pi, elem). Step 1e-5.
using ScalarFn = std::function<double(const std::vector<Matrix>&)>;

inline double fd_grad(const ScalarFn& f, std::vector<Matrix> params, size_t pi, size_t elem,
                      double h = 1e-5) {
    params[pi].data()[elem] += h;
    const double up = f(params);
    params[pi].data()[elem] -= 2 * h;
    const double down = f(params);
    return (up - down) / (2 * h);
}

// Compare tape gradients against finite differences for every entry of every
// parameter (or a sampled subset when a parameter is large). Returns the
// worst relative error observed.
inline double check_gradients(const ScalarFn& f, const std::vector<Matrix>& params,
                              const std::vector<Matrix>& analytic, size_t max_entries_per_param = 64) {
    double worst = 0.0;
    for (size_t p = 0; p < params.size(); ++p) {
        const size_t n = params[p].size();
        const size_t stride = n <= max_entries_per_param ? 1 : n / max_entries_per_param;
        for (size_t e = 0; e < n; e += stride) {
            const double fd = fd_grad(f, params, p, e);
            worst = std::max(worst, rel_err(fd, analytic[p].data()[e]));
        }
    }
    return worst;
}

// Erdos-Renyi graph with uniform features, for property tests.
inline loha::Graph random_graph(int n, double p, int feature_dim, uint64_t seed,
                                bool with_labels = false, int classes = 2) {
    loha::Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
    Matrix x = rng.uniform_matrix(n, feature_dim, -1.0, 1.0);
    std::optional<std::vector<int>> labels;
    if (with_labels) {
        std::vector<int> y(n);
        for (int i = 0; i < n; ++i) y[i] = static_cast<int>(rng.uniform_int(0, classes - 1));
        labels = y;
    }
    return loha::make_graph(n, edges, std::move(x), std::move(labels));
}

// Householder reflection: orthogonal, cheap to build, enough to probe
// rotation invariance of cosine-based losses.
inline Matrix householder(int dim, uint64_t seed) {
    loha::Rng rng(seed);
    Matrix v = rng.uniform_matrix(dim, 1, -1.0, 1.0);
    double nrm2 = 0.0;
    for (int i = 0; i < dim; ++i) nrm2 += v(i, 0) * v(i, 0);
    Matrix q = Matrix::identity(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) q(i, j) -= 2.0 * v(i, 0) * v(j, 0) / nrm2;
    return q;
}

inline loha::SparseOperator identity_operator(int n) {
    loha::SparseOperator op;
    op.n = n;
    op.row_ptr.resize(n + 1);
    op.col_idx.resize(n);
    op.values.assign(n, 1.0);
    for (int i = 0; i <= n; ++i) op.row_ptr[i] = i;
    for (int i = 0; i < n; ++i) op.col_idx[i] = i;
    return op;
}

}  // namespace oracles
