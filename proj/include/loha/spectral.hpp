#pragma once

#include <functional>

#include "loha/dense_eig.hpp"
#include "loha/tape.hpp"

namespace loha {

enum class FilterMode { low, high, band_stop, band_pass, fixed };
enum class Orientation { corrected, paper_verbatim };

/// Chebyshev abscissae x_j = cos((j+1/2)pi/(K+1)), j = 0..K. Strictly
/// decreasing, all interior to (-1, 1).
inline std::vector<double> chebyshev_nodes(int order) {
    if (order < 1) throw parameter_error("chebyshev_nodes: order must be >= 1");
    std::vector<double> x(order + 1);
    for (int j = 0; j <= order; ++j) x[j] = std::cos((j + 0.5) * M_PI / (order + 1));
    return x;
}

namespace detail {
// T_k(x) for k = 0..order at a single point.
inline std::vector<double> cheb_t(int order, double x) {
    std::vector<double> t(order + 1);
    t[0] = 1.0;
    if (order >= 1) t[1] = x;
    for (int k = 2; k <= order; ++k) t[k] = 2.0 * x * t[k - 1] - t[k - 2];
    return t;
}

// Coefficient transform of the interpolation values: w = C * gamma, where
// C[k][j] = (2/(K+1)) T_k(x_j) and the k = 0 row is halved so that a constant
// set of values maps to a constant filter.
inline Matrix coeff_transform(int order) {
    const auto x = chebyshev_nodes(order);
    Matrix c(order + 1, order + 1);
    for (int j = 0; j <= order; ++j) {
        const auto t = cheb_t(order, x[j]);
        for (int k = 0; k <= order; ++k)
            c(k, j) = (2.0 / (order + 1)) * t[k] * (k == 0 ? 0.5 : 1.0);
    }
    return c;
}
}  // namespace detail

/// Chebyshev coefficients from interpolation values at the nodes (halved
/// zeroth term). Differentiable linear map.
inline Value interp_weights(const std::vector<Value>& gamma) {
    if (gamma.empty()) throw parameter_error("interp_weights: empty gamma");
    const int order = static_cast<int>(gamma.size()) - 1;
    Tape& t = *gamma[0].tape;
    Value gcol = concat_rows(gamma);
    if (gcol.cols() != 1) throw shape_error("interp_weights: gamma entries must be 1x1");
    return matmul(t.constant(detail::coeff_transform(order)), gcol);
}

inline std::vector<double> interp_weights_plain(const std::vector<double>& gamma) {
    const int order = static_cast<int>(gamma.size()) - 1;
    if (order < 1) throw parameter_error("interp_weights: order must be >= 1");
    const Matrix c = detail::coeff_transform(order);
    std::vector<double> w(order + 1, 0.0);
    for (int k = 0; k <= order; ++k)
        for (int j = 0; j <= order; ++j) w[k] += c(k, j) * gamma[j];
    return w;
}

/// sum_k w_k T_k(op) X via the three-term recurrence; never materializes a
/// dense power of the operator. Differentiable in both X and w ((K+1) x 1).
inline Value cheb_propagate(const SparseOperator& op, Value x, Value w) {
    if (w.cols() != 1) throw shape_error("cheb_propagate: w must be a column");
    if (x.rows() != op.n)
        throw shape_error("cheb_propagate: operator dim " + std::to_string(op.n) + " vs input " +
                          shape_str(x.value()));
    const int order = w.rows() - 1;
    Value acc = mul(row(w, 0), x);
    if (order == 0) return acc;
    Value t_prev = x;
    Value t_cur = sparse_matmul(op, x);
    acc = add(acc, mul(row(w, 1), t_cur));
    for (int k = 2; k <= order; ++k) {
        Value t_next = sub(scalar_mul(sparse_matmul(op, t_cur), 2.0), t_prev);
        acc = add(acc, mul(row(w, k), t_next));
        t_prev = t_cur;
        t_cur = t_next;
    }
    return acc;
}

/// Exact filtering U g(Lambda) U^T X through a dense eigendecomposition of the
/// normalized Laplacian. Test-scale verification path only.
inline Matrix dense_filter_oracle(const Graph& g, const std::function<double(double)>& response,
                                  const Matrix& x) {
    if (g.n > 512) throw usage_error("dense_filter_oracle: n > 512 (verification-only path)");
    if (x.rows() != g.n) throw shape_error("dense_filter_oracle: feature rows != n");
    const EigenDecomposition eig = symmetric_eigen(normalized_laplacian(g).to_dense());
    Matrix ut_x = matmul_tn(eig.eigenvectors, x);
    for (int k = 0; k < g.n; ++k) {
        const double r = response(eig.eigenvalues[k]);
        for (int j = 0; j < x.cols(); ++j) ut_x(k, j) *= r;
    }
    return matmul(eig.eigenvectors, ut_x);
}

/// U g(Lambda) U^T as an explicit dense matrix for a precomputed
/// decomposition (used by the concentration checker).
inline Matrix dense_filter_matrix(const EigenDecomposition& eig,
                                  const std::function<double(double)>& response) {
    const int n = eig.eigenvectors.rows();
    Matrix scaled = eig.eigenvectors;  // columns scaled by g(lambda)
    for (int k = 0; k < n; ++k) {
        const double r = response(eig.eigenvalues[k]);
        for (int i = 0; i < n; ++i) scaled(i, k) *= r;
    }
    return matmul_nt(scaled, eig.eigenvectors);
}

inline double exact_lambda_max(const Graph& g) {
    if (g.n > 512) throw usage_error("exact_lambda_max: n > 512 (verification-only path)");
    const EigenDecomposition eig = symmetric_eigen(normalized_laplacian(g).to_dense());
    return eig.eigenvalues.back();
}

/// Spectral response g(lambda) = sum_k w_k T_k(2 lambda / lambda_max - 1)
/// evaluated pointwise on a grid of Laplacian eigenvalues.
inline std::vector<double> filter_response(const std::vector<double>& w,
                                           const std::vector<double>& lambda_grid,
                                           double lambda_max = 2.0) {
    const int order = static_cast<int>(w.size()) - 1;
    std::vector<double> out;
    out.reserve(lambda_grid.size());
    for (double lam : lambda_grid) {
        if (lam < -1e-9 || lam > lambda_max + 1e-9)
            throw parameter_error("filter_response: lambda outside [0, lambda_max]");
        const auto t = detail::cheb_t(order, 2.0 * lam / lambda_max - 1.0);
        double s = 0.0;
        for (int k = 0; k <= order; ++k) s += w[k] * t[k];
        out.push_back(s);
    }
    return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

/// Learnable scalars of one sliding-cosine view. The 1/2 tanh(delta) offset
/// stays inside (-0.5, 0.5), so shifted interpolation positions never reorder.
struct SlidingParams {
    Value beta_a;
    Value beta_b;
    Value delta;
};

struct SlidingInit {
    double beta_a = 0.0;
    double beta_b = 2.0;
    double delta = 0.0;
};

inline SlidingInit sliding_init(FilterMode mode) {
    SlidingInit s;
    s.beta_a = (mode == FilterMode::high) ? 2.0 : 0.0;
    return s;
}

/// Interpolation values for a sliding-cosine view, indexed from the lowest
/// frequency up (gamma[0] targets the smallest eigenvalue).
///
/// `corrected` places the view's intended shape at the initial parameters:
/// the low view starts at values 2 -> 0 (non-increasing response), the high
/// view at 0 -> 2. `paper_verbatim` keeps the printed formula, including the
/// extra phase constant inside the cosine and the swapped view signs.
inline std::vector<Value> build_gamma(const SlidingParams& p, FilterMode mode, int order,
                                      Orientation orientation) {
    if (order < 1) throw parameter_error("build_gamma: order must be >= 1");
    if (mode != FilterMode::low && mode != FilterMode::high)
        throw parameter_error("build_gamma: mode must be low or high");
    Value offset = scalar_mul(tanh(p.delta), 0.5);  // in (-0.5, 0.5)
    Value a = relu(p.beta_a);
    Value half_b = scalar_mul(relu(p.beta_b), 0.5);
    const bool verbatim = orientation == Orientation::paper_verbatim;
    // verbatim keeps the printed signs (low -, high +); corrected swaps them.
    const bool minus = verbatim ? (mode == FilterMode::low) : (mode == FilterMode::high);
    std::vector<Value> gamma;
    gamma.reserve(order + 1);
    for (int j = 0; j <= order; ++j) {
        // angle = ((offset + j) / K) * pi, plus the literal +1 in verbatim mode
        Value angle = scalar_mul(scalar_add(offset, static_cast<double>(j)), M_PI / order);
        if (verbatim) angle = scalar_add(angle, 1.0);
        Value hump = mul(half_b, scalar_add(cos(angle), 1.0));
        gamma.push_back(minus ? sub(a, hump) : add(a, hump));
    }
    return gamma;
}

/// Band-shaped interpolation values built from trainable increments: a fixed
/// endpoint value, cumulative steps to the midpoint, then an exact mirror.
/// params = [endpoint, step_1, ..., step_{floor(K/2)}].
inline std::vector<Value> build_gamma_band(const std::vector<Value>& params, FilterMode mode,
                                           int order) {
    if (order < 2) throw parameter_error("build_gamma_band: order must be >= 2");
    if (mode != FilterMode::band_stop && mode != FilterMode::band_pass)
        throw parameter_error("build_gamma_band: mode must be band_stop or band_pass");
    const int half = order / 2;
    if (static_cast<int>(params.size()) != half + 1)
        throw parameter_error("build_gamma_band: expected " + std::to_string(half + 1) +
                              " parameters for order " + std::to_string(order));
    std::vector<Value> seq(order + 1);
    seq[0] = params[0];
    for (int i = 1; i <= half; ++i)
        seq[i] = (mode == FilterMode::band_stop) ? sub(seq[i - 1], params[i])
                                                 : add(seq[i - 1], params[i]);
    for (int i = half + 1; i <= order; ++i) seq[i] = seq[order - i];
    return seq;
}

inline std::vector<double> band_default_init(FilterMode mode, int order) {
    std::vector<double> p(order / 2 + 1, 2.0 / order);
    p[0] = (mode == FilterMode::band_stop) ? 2.0 : 0.0;
    return p;
}

/// A view filter: interpolation values plus derived Chebyshev coefficients.
/// gamma is stored lowest-frequency-first; the abscissae of the coefficient
/// transform descend, so the sequence is reversed before the transform. This
/// keeps the realized response interpolating gamma[j] at
/// lambda_j = lambda_max (1 - x_j) / 2.
struct SpectralFilter {
    int order = 0;
    FilterMode mode = FilterMode::fixed;
    std::vector<Value> gamma;  // lowest frequency first
    Value w;                   // (K+1) x 1 coefficient column

    std::vector<double> gamma_values() const {
        std::vector<double> g;
        g.reserve(gamma.size());
        for (const Value& v : gamma) g.push_back(v.scalar());
        return g;
    }
    std::vector<double> coeff_values() const {
        std::vector<double> c;
        c.reserve(w.rows());
        for (int k = 0; k < w.rows(); ++k) c.push_back(w.value()(k, 0));
        return c;
    }
};

inline SpectralFilter make_filter(std::vector<Value> gamma_lowest_first, FilterMode mode) {
    SpectralFilter f;
    f.order = static_cast<int>(gamma_lowest_first.size()) - 1;
    f.mode = mode;
    f.gamma = std::move(gamma_lowest_first);
    std::vector<Value> reversed(f.gamma.rbegin(), f.gamma.rend());
    f.w = interp_weights(reversed);
    return f;
}

}  // namespace loha
