#pragma once

#include "loha/signals.hpp"

namespace loha {

struct EncoderConfig {
    int order = 10;   // Chebyshev polynomial order K
    int hidden = 512;
    int mlp_depth = 1;  // hidden layers in the shared MLP
    Orientation orientation = Orientation::corrected;
    TrendVariant variant = TrendVariant::full;
    bool band_filters = false;        // band-stop/band-pass views instead of low/high
    bool no_sliding = false;          // freeze the sliding offsets at 0
    bool fixed_combination = false;   // alpha = beta = 0.5, untrainable
    bool stop_grad_composite = false; // cut gradients through the composite
};

/// Persistent trainable state: filter scalars per view, the shared MLP, the
/// combination scalars, and (for squeezed variants) the projection that lifts
/// the composite to hidden width.
struct Encoder {
    EncoderConfig cfg;
    int in_dim = 0;

    // sliding-cosine view parameters (1x1 each)
    Matrix beta_a_low, beta_b_low, delta_low;
    Matrix beta_a_high, beta_b_high, delta_high;
    // band view parameters (endpoint + increments, one column per view)
    Matrix band_low, band_high;

    std::vector<Matrix> mlp_weights;  // depth+1 entries
    std::vector<Matrix> mlp_biases;
    Matrix alpha, beta;    // combination scalars
    Matrix variant_proj;   // p x hidden, var1/var3 only

    static Encoder init(int in_dim, const EncoderConfig& cfg, uint64_t seed) {
        Encoder e;
        e.cfg = cfg;
        e.in_dim = in_dim;
        Rng rng(seed);
        const SlidingInit lo = sliding_init(FilterMode::low);
        const SlidingInit hi = sliding_init(FilterMode::high);
        e.beta_a_low = Matrix::scalar(lo.beta_a);
        e.beta_b_low = Matrix::scalar(lo.beta_b);
        e.delta_low = Matrix::scalar(lo.delta);
        e.beta_a_high = Matrix::scalar(hi.beta_a);
        e.beta_b_high = Matrix::scalar(hi.beta_b);
        e.delta_high = Matrix::scalar(hi.delta);
        if (cfg.band_filters) {
            const auto bs = band_default_init(FilterMode::band_stop, cfg.order);
            const auto bp = band_default_init(FilterMode::band_pass, cfg.order);
            e.band_low = Matrix(static_cast<int>(bs.size()), 1);
            e.band_high = Matrix(static_cast<int>(bp.size()), 1);
            for (size_t i = 0; i < bs.size(); ++i) e.band_low(static_cast<int>(i), 0) = bs[i];
            for (size_t i = 0; i < bp.size(); ++i) e.band_high(static_cast<int>(i), 0) = bp[i];
        }
        auto glorot = [&rng](int fan_in, int fan_out) {
            const double s = std::sqrt(6.0 / (fan_in + fan_out));
            return rng.uniform_matrix(fan_in, fan_out, -s, s);
        };
        int prev = in_dim;
        for (int l = 0; l < cfg.mlp_depth + 1; ++l) {
            e.mlp_weights.push_back(glorot(prev, cfg.hidden));
            e.mlp_biases.push_back(Matrix(1, cfg.hidden));
            prev = cfg.hidden;
        }
        e.alpha = Matrix::scalar(0.5);
        e.beta = Matrix::scalar(0.5);
        if (cfg.variant != TrendVariant::full) {
            const int p = cfg.variant == TrendVariant::var1 ? 1 : 3;
            e.variant_proj = glorot(p, cfg.hidden);
        }
        return e;
    }

    // Trainable parameters, order matched by names() and EncoderBinding.
    std::vector<Matrix*> parameters() {
        std::vector<Matrix*> ps;
        if (cfg.band_filters) {
            ps.push_back(&band_low);
            ps.push_back(&band_high);
        } else {
            ps.push_back(&beta_a_low);
            ps.push_back(&beta_b_low);
            ps.push_back(&beta_a_high);
            ps.push_back(&beta_b_high);
            if (!cfg.no_sliding) {
                ps.push_back(&delta_low);
                ps.push_back(&delta_high);
            }
        }
        for (size_t l = 0; l < mlp_weights.size(); ++l) {
            ps.push_back(&mlp_weights[l]);
            ps.push_back(&mlp_biases[l]);
        }
        if (!cfg.fixed_combination) {
            ps.push_back(&alpha);
            ps.push_back(&beta);
        }
        if (cfg.variant != TrendVariant::full) ps.push_back(&variant_proj);
        return ps;
    }

    std::vector<std::string> parameter_names() const {
        std::vector<std::string> ns;
        if (cfg.band_filters) {
            ns = {"band_low", "band_high"};
        } else {
            ns = {"beta_a_low", "beta_b_low", "beta_a_high", "beta_b_high"};
            if (!cfg.no_sliding) {
                ns.push_back("delta_low");
                ns.push_back("delta_high");
            }
        }
        for (size_t l = 0; l < mlp_weights.size(); ++l) {
            ns.push_back("mlp_w" + std::to_string(l));
            ns.push_back("mlp_b" + std::to_string(l));
        }
        if (!cfg.fixed_combination) {
            ns.push_back("alpha");
            ns.push_back("beta");
        }
        if (cfg.variant != TrendVariant::full) ns.push_back("variant_proj");
        return ns;
    }
};

/// One forward pass's view of the encoder: every trainable matrix bound onto
/// the tape, filters already built from the bound scalars.
struct EncoderBinding {
    std::vector<Value> params;  // parallel to Encoder::parameters()
    SpectralFilter filter_low, filter_high;
    std::vector<Value> mlp_weights, mlp_biases;
    Value alpha, beta;
    Value variant_proj;
};

inline EncoderBinding bind_encoder(Tape& tape, Encoder& enc) {
    EncoderBinding b;
    for (Matrix* p : enc.parameters()) b.params.push_back(tape.param(*p));
    size_t k = 0;
    if (enc.cfg.band_filters) {
        Value bl = b.params[k++];
        Value bh = b.params[k++];
        auto slice = [&tape](Value col) {
            std::vector<Value> vs;
            for (int i = 0; i < col.rows(); ++i) vs.push_back(row(col, i));
            return vs;
        };
        b.filter_low =
            make_filter(build_gamma_band(slice(bl), FilterMode::band_stop, enc.cfg.order),
                        FilterMode::band_stop);
        b.filter_high =
            make_filter(build_gamma_band(slice(bh), FilterMode::band_pass, enc.cfg.order),
                        FilterMode::band_pass);
    } else {
        SlidingParams low, high;
        low.beta_a = b.params[k++];
        low.beta_b = b.params[k++];
        high.beta_a = b.params[k++];
        high.beta_b = b.params[k++];
        if (enc.cfg.no_sliding) {
            low.delta = tape.constant(Matrix::scalar(0.0));
            high.delta = tape.constant(Matrix::scalar(0.0));
        } else {
            low.delta = b.params[k++];
            high.delta = b.params[k++];
        }
        b.filter_low = make_filter(
            build_gamma(low, FilterMode::low, enc.cfg.order, enc.cfg.orientation), FilterMode::low);
        b.filter_high =
            make_filter(build_gamma(high, FilterMode::high, enc.cfg.order, enc.cfg.orientation),
                        FilterMode::high);
    }
    for (size_t l = 0; l < enc.mlp_weights.size(); ++l) {
        b.mlp_weights.push_back(b.params[k++]);
        b.mlp_biases.push_back(b.params[k++]);
    }
    if (enc.cfg.fixed_combination) {
        b.alpha = tape.constant(Matrix::scalar(0.5));
        b.beta = tape.constant(Matrix::scalar(0.5));
    } else {
        b.alpha = b.params[k++];
        b.beta = b.params[k++];
    }
    if (enc.cfg.variant != TrendVariant::full) b.variant_proj = b.params[k++];
    return b;
}

/// The shared MLP: ReLU between layers, linear output.
inline Value mlp_forward(const EncoderBinding& b, Value x) {
    Value h = x;
    for (size_t l = 0; l < b.mlp_weights.size(); ++l) {
        h = add_rowvec(matmul(h, b.mlp_weights[l]), b.mlp_biases[l]);
        if (l + 1 < b.mlp_weights.size()) h = relu(h);
    }
    return h;
}

/// Fixed per-graph inputs of the model: the scaled Laplacian, the polynomial
/// basis on the features and on the variant's unsquared difference field.
struct GraphPrecompute {
    SparseOperator scaled_lap;
    ChebBasis basis_x;
    Matrix delta_field;
    ChebBasis basis_delta;
};

inline GraphPrecompute precompute_graph(const Graph& g, const EncoderConfig& cfg,
                                        double lambda_max = 2.0) {
    GraphPrecompute pre;
    pre.scaled_lap = scaled_laplacian(g, lambda_max);
    pre.basis_x = ChebBasis::build(pre.scaled_lap, g.features, cfg.order);
    pre.delta_field = neighbor_difference(g, variant_field(g, g.features, cfg.variant));
    pre.basis_delta = ChebBasis::build(pre.scaled_lap, pre.delta_field, cfg.order);
    return pre;
}

struct EncodeResult {
    Value z_low, z_high, z_fused;
};

/// Two filtered views through the shared MLP, fused by the learnable linear
/// combination.
inline EncodeResult encode(const GraphPrecompute& pre, const EncoderBinding& b) {
    EncodeResult r;
    r.z_low = mlp_forward(b, cheb_combine(pre.basis_x, b.filter_low.w));
    r.z_high = mlp_forward(b, cheb_combine(pre.basis_x, b.filter_high.w));
    r.z_fused = add(mul(b.alpha, r.z_low), mul(b.beta, r.z_high));
    return r;
}

/// Composite feature lifted to hidden width: the full variant reuses the
/// shared MLP, squeezed variants use their dedicated projection.
inline Value composite_hidden(const GraphPrecompute& pre, const EncoderBinding& b,
                              const EncoderConfig& cfg) {
    Value c = composite_feature(pre.basis_delta, b.filter_low, b.filter_high,
                                cfg.stop_grad_composite);
    if (cfg.variant == TrendVariant::full) return mlp_forward(b, c);
    return matmul(c, b.variant_proj);
}

/// exp(cos(a, b) / tau) for two row vectors; rows with norm below 1e-12 count
/// as zero similarity.
inline double pair_score(const Matrix& a, const Matrix& b, double tau) {
    if (tau <= 0.0) throw parameter_error("pair_score: tau must be > 0");
    if (a.rows() != 1 || b.rows() != 1 || a.cols() != b.cols())
        throw shape_error("pair_score: expected equal-length row vectors");
    double na = 0.0, nb = 0.0, dot = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
        na += a(0, j) * a(0, j);
        nb += b(0, j) * b(0, j);
        dot += a(0, j) * b(0, j);
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    const double sim = (na < 1e-12 || nb < 1e-12) ? 0.0 : dot / (na * nb);
    return std::exp(sim / tau);
}

struct SeparationOptions {
    double tau = 0.5;
    bool include_cross = true;      // keep s(z_i^l, z_i^h) in the denominators
    bool standard_infonce = false;  // also keep the positive pair there
};

struct SeparationLosses {
    Value low, high;
};

namespace detail {
// exp(sim/tau) matrix between all row pairs of two already-normalized sets.
inline Value score_matrix(Value na, Value nb, double tau) {
    return exp(scalar_mul(matmul_nt(na, nb), 1.0 / tau));
}
}  // namespace detail

/// The two view-separation losses. The numerator pairs the fused view with
/// the node's own low (resp. high) embedding; the denominator runs over the
/// other nodes' embeddings of that view plus the node's own cross-view score,
/// which is what pushes the two views of a node apart. As printed, the
/// positive pair is absent from the denominator; standard_infonce restores it.
inline SeparationLosses loss_separation(Value z_fused, Value z_low, Value z_high,
                                        const SeparationOptions& opt) {
    if (opt.tau <= 0.0) throw parameter_error("loss_separation: tau must be > 0");
    const int n = z_fused.rows();
    if (n < 2) throw parameter_error("loss_separation: need at least 2 nodes");
    if (!z_fused.value().same_shape(z_low.value()) || !z_fused.value().same_shape(z_high.value()))
        throw shape_error("loss_separation: embedding shapes differ");
    Value nf = l2_normalize_rows(z_fused);
    Value nl = l2_normalize_rows(z_low);
    Value nh = l2_normalize_rows(z_high);
    Value cross = exp(scalar_mul(row_sum(mul(nl, nh)), 1.0 / opt.tau));  // s(z_i^l, z_i^h)

    auto one_side = [&](Value nv) {
        Value scores = detail::score_matrix(nf, nv, opt.tau);
        Value pos = diag(scores);
        Value den = row_sum(scores);
        if (!opt.standard_infonce) den = sub(den, pos);
        if (opt.include_cross) den = add(den, cross);
        return mean_all(sub(log(den), log(pos)));
    };
    return SeparationLosses{one_side(nl), one_side(nh)};
}

/// Views-reunion loss: the fused embedding should score higher with its own
/// composite feature than with any other node's.
inline Value loss_reunion(Value z_fused, Value composite, double tau) {
    if (tau <= 0.0) throw parameter_error("loss_reunion: tau must be > 0");
    const int n = z_fused.rows();
    if (n < 2) throw parameter_error("loss_reunion: need at least 2 nodes");
    if (!z_fused.value().same_shape(composite.value()))
        throw shape_error("loss_reunion: embedding shapes differ");
    Value nf = l2_normalize_rows(z_fused);
    Value nc = l2_normalize_rows(composite);
    Value scores = detail::score_matrix(nf, nc, tau);
    Value pos = diag(scores);
    Value den = sub(row_sum(scores), pos);
    return mean_all(sub(log(den), log(pos)));
}

struct LossTerms {
    Value l_low, l_high, l_sf, total;
    double tau = 0.5;
    double mu = 1.0;
};

inline Value total_loss(Value l_low, Value l_high, Value l_sf, double mu) {
    return add(add(l_low, l_high), scalar_mul(l_sf, mu));
}

}  // namespace loha
