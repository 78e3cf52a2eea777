#pragma once

#include "loha/spectral.hpp"

namespace loha {

enum class TrendVariant { full, var1, var3 };

inline const char* trend_variant_name(TrendVariant v) {
    switch (v) {
        case TrendVariant::full: return "full";
        case TrendVariant::var1: return "var1";
        case TrendVariant::var3: return "var3";
    }
    return "?";
}

/// Per-node squared neighbor-difference field. p = F for the full variant,
/// 1 and 3 for the squeezed variants.
struct TrendField {
    Matrix values;
    TrendVariant variant;
};

/// Dirichlet energy by the explicit double sum:
/// 1/2 sum_{i,j,k} A_ij (x_ik/sqrt(d_i) - x_jk/sqrt(d_j))^2.
inline double dirichlet_energy(const Graph& g, const Matrix& x) {
    if (x.rows() != g.n) throw shape_error("dirichlet_energy: feature rows != n");
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double di = inv_sqrt_degree(g.degrees[i]);
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int j = g.col_idx[e];
            const double dj = inv_sqrt_degree(g.degrees[j]);
            for (int k = 0; k < x.cols(); ++k) {
                const double diff = x(i, k) * di - x(j, k) * dj;
                acc += 0.5 * diff * diff;
            }
        }
    }
    return acc;
}

/// Same quantity as Tr(X^T L_tilde X); kept separate so the two routes can
/// check each other.
inline double dirichlet_energy_trace(const Graph& g, const Matrix& x) {
    const Matrix lx = normalized_laplacian(g).apply(x);
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) acc += x.data()[i] * lx.data()[i];
    return acc;
}

/// The field the trend differentiates, per variant:
///  full: Y = D^{-1/2} X (n x F)
///  var1: Y = x_hat, the degree-normalized row sums scaled by their total (n x 1)
///  var3: Y = [x_hat | row mean | row std of D^{-1/2} X]  (n x 3)
inline Matrix variant_field(const Graph& g, const Matrix& x, TrendVariant variant) {
    if (x.rows() != g.n) throw shape_error("variant_field: feature rows != n");
    Matrix y(g.n, x.cols());
    for (int i = 0; i < g.n; ++i) {
        const double di = inv_sqrt_degree(g.degrees[i]);
        for (int j = 0; j < x.cols(); ++j) y(i, j) = x(i, j) * di;
    }
    if (variant == TrendVariant::full) return y;

    Matrix xhat(g.n, 1);
    double total = 0.0;
    for (int i = 0; i < g.n; ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols(); ++j) s += y(i, j);
        xhat(i, 0) = s;
        total += s;
    }
    if (std::abs(total) < 1e-12)
        throw numeric_error("variant_field: node-sum normalizer is zero (sum over nodes = " +
                            std::to_string(total) + ")");
    for (int i = 0; i < g.n; ++i) xhat(i, 0) /= total;
    if (variant == TrendVariant::var1) return xhat;

    if (x.cols() < 2) throw parameter_error("variant_field: var3 needs >= 2 feature columns");
    Matrix out(g.n, 3);
    for (int i = 0; i < g.n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < x.cols(); ++j) mean += y(i, j);
        mean /= x.cols();
        double var = 0.0;
        for (int j = 0; j < x.cols(); ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
        out(i, 0) = xhat(i, 0);
        out(i, 1) = mean;
        out(i, 2) = std::sqrt(var / x.cols());
    }
    return out;
}

/// Delta(Y)_i = Y_i - sum of Y over i's 1-hop neighbors; isolated nodes keep
/// their own row (empty neighbor sum). Linear in Y.
inline Matrix neighbor_difference(const Graph& g, const Matrix& y) {
    if (y.rows() != g.n) throw shape_error("neighbor_difference: rows != n");
    Matrix ay = adjacency_operator(g).apply(y);
    return sub(y, ay);
}

/// Squared neighbor difference of the variant's field.
inline TrendField spectral_trend(const Graph& g, const Matrix& x, TrendVariant variant) {
    Matrix d = neighbor_difference(g, variant_field(g, x, variant));
    for (size_t i = 0; i < d.size(); ++i) d.data()[i] *= d.data()[i];
    return TrendField{std::move(d), variant};
}

/// |sum_k (w^l_k - w^h_k) T_k(L_hat) Delta| from a precomputed basis on the
/// unsquared difference field. Gradients reach both filters' parameters
/// unless stop_grad cuts them (ablation switch).
inline Value composite_feature(const ChebBasis& delta_basis, const SpectralFilter& lo,
                               const SpectralFilter& hi, bool stop_grad = false) {
    if (lo.order != hi.order)
        throw shape_error("composite_feature: filters must share the polynomial order");
    if (delta_basis.order() != lo.order)
        throw shape_error("composite_feature: basis order " + std::to_string(delta_basis.order()) +
                          " vs filter order " + std::to_string(lo.order));
    Value w_diff = sub(lo.w, hi.w);
    if (stop_grad) w_diff = stop_gradient(w_diff);
    return abs(cheb_combine(delta_basis, w_diff));
}

/// Fully general form on an explicit operator (verification path).
inline Value composite_feature(Tape& tape, const SparseOperator& scaled_lap, const Matrix& delta,
                               const SpectralFilter& lo, const SpectralFilter& hi,
                               bool stop_grad = false) {
    if (lo.order != hi.order)
        throw shape_error("composite_feature: filters must share the polynomial order");
    Value w_diff = sub(lo.w, hi.w);
    if (stop_grad) w_diff = stop_gradient(w_diff);
    return abs(cheb_propagate(scaled_lap, tape.constant(delta), w_diff));
}

}  // namespace loha
