#pragma once

#include <numeric>

#include "loha/model.hpp"

namespace loha {

/// Everything stage 1 and stage 2 need. Defaults are the documented library
/// defaults; experiment configs override them.
struct TrainConfig {
    int order = 10;  // K
    int hidden = 512;
    double tau = 0.5;
    double mu = 1.0;
    double lr = 1e-3;
    double weight_decay = 0.0;
    int epochs = 500;
    int patience = 50;  // early stop on the self-supervised training loss
    uint64_t seed = 0;
    TrendVariant variant = TrendVariant::full;
    Orientation orientation = Orientation::corrected;
    int mlp_depth = 1;
    double lambda_max = 2.0;
    bool band_filters = false;
    // ablation & fidelity switches
    bool no_sliding = false;
    bool no_reunion = false;
    bool no_contrast = false;
    bool standard_infonce = false;
    bool stop_grad_composite = false;
    bool fixed_combination = false;

    EncoderConfig encoder_config() const {
        EncoderConfig e;
        e.order = order;
        e.hidden = hidden;
        e.mlp_depth = mlp_depth;
        e.orientation = orientation;
        e.variant = variant;
        e.band_filters = band_filters;
        e.no_sliding = no_sliding;
        e.fixed_combination = fixed_combination;
        e.stop_grad_composite = stop_grad_composite;
        return e;
    }

    void validate() const {
        if (order < 1) throw parameter_error("config: k must be >= 1");
        if (hidden < 1) throw parameter_error("config: hidden must be >= 1");
        if (tau <= 0) throw parameter_error("config: tau must be > 0");
        if (mu < 0) throw parameter_error("config: mu must be >= 0");
        if (lr <= 0) throw parameter_error("config: lr must be > 0");
        if (weight_decay < 0) throw parameter_error("config: weight_decay must be >= 0");
        if (epochs < 0) throw parameter_error("config: epochs must be >= 0");
        if (patience < 1) throw parameter_error("config: patience must be >= 1");
        if (mlp_depth < 1) throw parameter_error("config: mlp_depth must be >= 1");
        if (lambda_max <= 0) throw parameter_error("config: lambda_max must be > 0");
        if (band_filters && order < 2) throw parameter_error("config: band filters need k >= 2");
    }
};

struct LossRecord {
    int epoch = 0;
    double low = 0, high = 0, sf = 0, total = 0;
};

/// Filter state captured after training; enough to re-plot responses and to
/// rebuild the gamma sequences.
struct FilterSnapshot {
    int order = 0;
    bool band = false;
    Orientation orientation = Orientation::corrected;
    std::vector<double> gamma_low, gamma_high;  // lowest frequency first
    std::vector<double> w_low, w_high;
    double beta_a_low = 0, beta_b_low = 0, delta_low = 0;
    double beta_a_high = 0, beta_b_high = 0, delta_high = 0;
    std::vector<double> band_low, band_high;
    double alpha = 0.5, beta = 0.5;
};

struct PretrainResult {
    Matrix embeddings;  // fused view, n x hidden
    FilterSnapshot snapshot;
    std::vector<LossRecord> history;
    double best_loss = 0.0;
    int best_epoch = -1;
};

namespace detail {
inline FilterSnapshot snapshot_from(const Encoder& enc, const EncoderBinding& b) {
    FilterSnapshot s;
    s.order = enc.cfg.order;
    s.band = enc.cfg.band_filters;
    s.orientation = enc.cfg.orientation;
    s.gamma_low = b.filter_low.gamma_values();
    s.gamma_high = b.filter_high.gamma_values();
    s.w_low = b.filter_low.coeff_values();
    s.w_high = b.filter_high.coeff_values();
    if (enc.cfg.band_filters) {
        for (int i = 0; i < enc.band_low.rows(); ++i) s.band_low.push_back(enc.band_low(i, 0));
        for (int i = 0; i < enc.band_high.rows(); ++i) s.band_high.push_back(enc.band_high(i, 0));
    } else {
        s.beta_a_low = enc.beta_a_low(0, 0);
        s.beta_b_low = enc.beta_b_low(0, 0);
        s.delta_low = enc.delta_low(0, 0);
        s.beta_a_high = enc.beta_a_high(0, 0);
        s.beta_b_high = enc.beta_b_high(0, 0);
        s.delta_high = enc.delta_high(0, 0);
    }
    s.alpha = enc.alpha(0, 0);
    s.beta = enc.beta(0, 0);
    return s;
}
}  // namespace detail

/// Stage 1: self-supervised training of the encoder on one full graph. Labels
/// are never consulted. Deterministic per seed, down to the bit.
inline PretrainResult pretrain(const Graph& g, const TrainConfig& cfg) {
    cfg.validate();
    if (g.n < 2) throw parameter_error("pretrain: need at least 2 nodes");
    const EncoderConfig ecfg = cfg.encoder_config();
    Encoder enc = Encoder::init(g.num_features(), ecfg, cfg.seed);
    const GraphPrecompute pre = precompute_graph(g, ecfg, cfg.lambda_max);
    const double mu = cfg.no_reunion ? 0.0 : cfg.mu;

    AdamState opt;
    opt.init(enc.parameters(), AdamHyper{cfg.lr});

    PretrainResult out;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        EncoderBinding b = bind_encoder(tape, enc);
        LossRecord rec;
        rec.epoch = epoch;
        Value total;
        try {
            EncodeResult z = encode(pre, b);
            SeparationOptions sep;
            sep.tau = cfg.tau;
            sep.include_cross = !cfg.no_contrast;
            sep.standard_infonce = cfg.standard_infonce;
            SeparationLosses ls = loss_separation(z.z_fused, z.z_low, z.z_high, sep);
            rec.low = ls.low.scalar();
            rec.high = ls.high.scalar();
            if (mu != 0.0) {
                Value c = composite_hidden(pre, b, ecfg);
                Value lsf = loss_reunion(z.z_fused, c, cfg.tau);
                rec.sf = lsf.scalar();
                total = total_loss(ls.low, ls.high, lsf, mu);
            } else {
                total = add(ls.low, ls.high);
            }
            rec.total = total.scalar();
            tape.backward(total);
        } catch (const numeric_error& e) {
            throw numeric_error("pretrain: aborted at epoch " + std::to_string(epoch) + ": " +
                                e.what());
        }
        out.history.push_back(rec);

        std::vector<Matrix*> params = enc.parameters();
        std::vector<Matrix> grads;
        grads.reserve(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            Matrix gr = tape.grad(b.params[i]);
            if (cfg.weight_decay != 0.0) {
                const Matrix& p = *params[i];
                for (size_t e2 = 0; e2 < gr.size(); ++e2)
                    gr.data()[e2] += cfg.weight_decay * p.data()[e2];
            }
            grads.push_back(std::move(gr));
        }
        adam_step(params, grads, opt);

        if (rec.total < best) {
            best = rec.total;
            best_epoch = epoch;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }
    out.best_loss = best;
    out.best_epoch = best_epoch;

    // final forward with the trained parameters
    Tape tape;
    EncoderBinding b = bind_encoder(tape, enc);
    EncodeResult z = encode(pre, b);
    out.embeddings = z.z_fused.value();
    out.snapshot = detail::snapshot_from(enc, b);
    return out;
}

// ---- stage 2: frozen-embedding evaluation ---------------------------------

struct Split {
    std::vector<int> train, val, test;
};

/// `repeats` random 60/20/20 index splits, fixed by the seed.
inline std::vector<Split> make_splits(int n, uint64_t seed, int repeats) {
    if (n < 5) throw parameter_error("make_splits: need at least 5 nodes");
    if (repeats < 1) throw parameter_error("make_splits: repeats must be >= 1");
    Rng rng(seed);
    std::vector<Split> splits;
    splits.reserve(repeats);
    for (int r = 0; r < repeats; ++r) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        const int ntr = static_cast<int>(0.6 * n);
        const int nva = static_cast<int>(0.2 * n);
        Split s;
        s.train.assign(idx.begin(), idx.begin() + ntr);
        s.val.assign(idx.begin() + ntr, idx.begin() + ntr + nva);
        s.test.assign(idx.begin() + ntr + nva, idx.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

struct ProbeConfig {
    int epochs = 300;
    double lr = 0.01;
    double weight_decay = 0.0;
};

struct ProbeResult {
    double mean = 0.0;  // percent
    double stddev = 0.0;
    std::vector<double> per_split;
};

namespace detail {

inline double probe_accuracy(const Matrix& z, const std::vector<int>& labels, const Matrix& w,
                             const Matrix& bias, const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    int correct = 0;
    const int c = w.cols();
    for (int i : idx) {
        int arg = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < c; ++k) {
            double s = bias(0, k);
            for (int j = 0; j < z.cols(); ++j) s += z(i, j) * w(j, k);
            if (s > best) {
                best = s;
                arg = k;
            }
        }
        if (arg == labels[i]) ++correct;
    }
    return 100.0 * correct / static_cast<double>(idx.size());
}

}  // namespace detail

/// Multinomial logistic regression on frozen embeddings: full-batch Adam on
/// the train split, epoch selected by validation accuracy, scored on test.
/// Deterministic (zero initialization), so column permutations of Z permute
/// the probe weights identically.
inline ProbeResult linear_probe(const Matrix& z, const std::vector<int>& labels,
                                const std::vector<Split>& splits, const ProbeConfig& cfg = {}) {
    if (static_cast<int>(labels.size()) != z.rows())
        throw shape_error("linear_probe: label count != embedding rows");
    int classes = 0;
    for (int y : labels) {
        if (y < 0) throw parameter_error("linear_probe: negative label");
        classes = std::max(classes, y + 1);
    }
    ProbeResult res;
    for (const Split& split : splits) {
        {
            std::set<int> train_classes;
            for (int i : split.train) train_classes.insert(labels[i]);
            if (train_classes.size() < 2)
                throw parameter_error("linear_probe: train split contains a single class");
        }
        Matrix w(z.cols(), classes), bias(1, classes);
        AdamState opt;
        std::vector<Matrix*> params{&w, &bias};
        opt.init(params, AdamHyper{cfg.lr});
        const int m = static_cast<int>(split.train.size());
        double best_val = -1.0, test_at_best = 0.0;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            Matrix gw(z.cols(), classes), gb(1, classes);
            for (int i : split.train) {
                // softmax cross-entropy on row i
                std::vector<double> logits(classes);
                double mx = -std::numeric_limits<double>::infinity();
                for (int k = 0; k < classes; ++k) {
                    double s = bias(0, k);
                    for (int j = 0; j < z.cols(); ++j) s += z(i, j) * w(j, k);
                    logits[k] = s;
                    mx = std::max(mx, s);
                }
                double zsum = 0.0;
                for (int k = 0; k < classes; ++k) {
                    logits[k] = std::exp(logits[k] - mx);
                    zsum += logits[k];
                }
                for (int k = 0; k < classes; ++k) {
                    const double p = logits[k] / zsum - (labels[i] == k ? 1.0 : 0.0);
                    gb(0, k) += p / m;
                    for (int j = 0; j < z.cols(); ++j) gw(j, k) += z(i, j) * p / m;
                }
            }
            if (cfg.weight_decay != 0.0)
                for (size_t e = 0; e < gw.size(); ++e)
                    gw.data()[e] += cfg.weight_decay * w.data()[e];
            adam_step(params, {gw, gb}, opt);
            const double val_acc = detail::probe_accuracy(z, labels, w, bias, split.val);
            if (val_acc > best_val) {
                best_val = val_acc;
                test_at_best = detail::probe_accuracy(z, labels, w, bias, split.test);
            }
        }
        res.per_split.push_back(test_at_best);
    }
    double mean = 0.0;
    for (double a : res.per_split) mean += a;
    mean /= res.per_split.size();
    double var = 0.0;
    for (double a : res.per_split) var += (a - mean) * (a - mean);
    res.mean = mean;
    res.stddev = std::sqrt(var / res.per_split.size());
    return res;
}

// ---- Monte-Carlo concentration check ---------------------------------------

struct TheoremRow {
    double t = 0;
    double bound_sub = 0, tail_sub = 0;
    double bound_add = 0, tail_add = 0;
    bool pass_sub = false, pass_add = false;
};

struct TheoremReport {
    int node = 0;
    int degree = 0;
    int feature_dim = 0;
    double bound_b = 0;
    int samples = 0;
    double max_lambda_sub = 0, max_lambda_add = 0;
    double std_sub = 0, std_add = 0;  // mean per-dimension std of the composite
    std::vector<TheoremRow> rows;
    bool all_pass = false;
    bool sub_leq_add = false;
};

/// Empirical tail of || C_node - E[C_node] ||_2 under i.i.d. uniform [-B, B]
/// features, against the concentration bound
/// 2 f exp(-d t^2 / (2 max(lambda')^4 B^2 f)), for both the subtraction and
/// the addition composite of the two filters. max(lambda') is the largest
/// absolute eigenvalue of the corresponding dense composite operator.
inline TheoremReport check_theorem1(const Graph& g, int node, const std::vector<double>& w_low,
                                    const std::vector<double>& w_high, int feature_dim,
                                    double bound_b, const std::vector<double>& t_grid, int samples,
                                    uint64_t seed, double lambda_max = 2.0) {
    if (feature_dim < 1 || bound_b <= 0) throw parameter_error("check_theorem1: f and B must be positive");
    if (samples < 10000) throw parameter_error("check_theorem1: need at least 10^4 samples");
    if (node < 0 || node >= g.n) throw parameter_error("check_theorem1: node out of range");
    if (t_grid.empty()) throw parameter_error("check_theorem1: empty t grid");
    for (double t : t_grid)
        if (t <= 0) throw parameter_error("check_theorem1: t values must be positive");
    if (w_low.size() != w_high.size()) throw parameter_error("check_theorem1: coefficient size mismatch");

    const EigenDecomposition eig = symmetric_eigen(normalized_laplacian(g).to_dense());
    auto response_of = [&](const std::vector<double>& w) {
        return [w, lambda_max](double lam) {
            return filter_response(w, {lam}, lambda_max)[0];
        };
    };
    std::vector<double> w_sub(w_low.size()), w_add(w_low.size());
    for (size_t k = 0; k < w_low.size(); ++k) {
        w_sub[k] = w_low[k] - w_high[k];
        w_add[k] = w_low[k] + w_high[k];
    }
    const Matrix m_sub = dense_filter_matrix(eig, response_of(w_sub));
    const Matrix m_add = dense_filter_matrix(eig, response_of(w_add));

    TheoremReport rep;
    rep.node = node;
    rep.degree = g.degrees[node];
    rep.feature_dim = feature_dim;
    rep.bound_b = bound_b;
    rep.samples = samples;
    auto max_abs_response = [&](const std::vector<double>& w) {
        double m = 0.0;
        for (double lam : eig.eigenvalues)
            m = std::max(m, std::abs(filter_response(w, {std::max(0.0, lam)}, lambda_max)[0]));
        return m;
    };
    rep.max_lambda_sub = max_abs_response(w_sub);
    rep.max_lambda_add = max_abs_response(w_add);

    // C_node = | p X | with p = row_node(M) (I - A) D^{-1/2}; precompute p once.
    auto projection = [&](const Matrix& m) {
        Matrix p(1, g.n);
        for (int j = 0; j < g.n; ++j) p(0, j) = m(node, j);
        Matrix out = p;  // identity part of (I - A)
        for (int i = 0; i < g.n; ++i)
            for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
                out(0, g.col_idx[e]) -= p(0, i);
        for (int j = 0; j < g.n; ++j) out(0, j) *= inv_sqrt_degree(g.degrees[j]);
        return out;
    };
    const Matrix p_sub = projection(m_sub);
    const Matrix p_add = projection(m_add);

    Rng rng(seed);
    Matrix c_sub(samples, feature_dim), c_add(samples, feature_dim);
    std::vector<double> xcol(g.n);
    for (int s = 0; s < samples; ++s) {
        for (int f = 0; f < feature_dim; ++f) {
            double as = 0.0, aa = 0.0;
            for (int i = 0; i < g.n; ++i) xcol[i] = rng.uniform(-bound_b, bound_b);
            for (int i = 0; i < g.n; ++i) {
                as += p_sub(0, i) * xcol[i];
                aa += p_add(0, i) * xcol[i];
            }
            c_sub(s, f) = std::abs(as);
            c_add(s, f) = std::abs(aa);
        }
    }
    auto tail_stats = [&](const Matrix& c, double& std_out) {
        std::vector<double> mean(feature_dim, 0.0);
        for (int s = 0; s < samples; ++s)
            for (int f = 0; f < feature_dim; ++f) mean[f] += c(s, f);
        for (double& m : mean) m /= samples;
        std::vector<double> dist(samples);
        std::vector<double> var(feature_dim, 0.0);
        for (int s = 0; s < samples; ++s) {
            double d2 = 0.0;
            for (int f = 0; f < feature_dim; ++f) {
                const double d = c(s, f) - mean[f];
                d2 += d * d;
                var[f] += d * d;
            }
            dist[s] = std::sqrt(d2);
        }
        double sacc = 0.0;
        for (int f = 0; f < feature_dim; ++f) sacc += std::sqrt(var[f] / samples);
        std_out = sacc / feature_dim;
        return dist;
    };
    const std::vector<double> dist_sub = tail_stats(c_sub, rep.std_sub);
    const std::vector<double> dist_add = tail_stats(c_add, rep.std_add);

    const double d_i = static_cast<double>(rep.degree);
    rep.all_pass = true;
    rep.sub_leq_add = true;
    for (double t : t_grid) {
        TheoremRow row;
        row.t = t;
        auto bound = [&](double max_lambda) {
            const double l4 = std::pow(max_lambda, 4.0);
            return 2.0 * feature_dim *
                   std::exp(-d_i * t * t / (2.0 * l4 * bound_b * bound_b * feature_dim));
        };
        row.bound_sub = bound(rep.max_lambda_sub);
        row.bound_add = bound(rep.max_lambda_add);
        long cs = 0, ca = 0;
        for (int s = 0; s < samples; ++s) {
            if (dist_sub[s] >= t) ++cs;
            if (dist_add[s] >= t) ++ca;
        }
        row.tail_sub = static_cast<double>(cs) / samples;
        row.tail_add = static_cast<double>(ca) / samples;
        row.pass_sub = row.tail_sub <= row.bound_sub;
        row.pass_add = row.tail_add <= row.bound_add;
        rep.all_pass = rep.all_pass && row.pass_sub && row.pass_add;
        rep.sub_leq_add = rep.sub_leq_add && row.tail_sub <= row.tail_add;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace loha
