#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "loha/core.hpp"

namespace loha {

/// Immutable undirected graph: CSR adjacency (both directions stored), dense
/// node features, optional integer labels. No self-loops, no duplicates.
struct Graph {
    int n = 0;
    std::vector<int> row_ptr;   // size n+1
    std::vector<int> col_idx;   // size 2 * undirected edge count
    Matrix features;            // n x F
    std::optional<std::vector<int>> labels;
    std::vector<int> degrees;   // degrees[i] == row_ptr[i+1] - row_ptr[i]

    int num_features() const { return features.cols(); }
    int num_undirected_edges() const { return static_cast<int>(col_idx.size()) / 2; }

    int degree(int i) const { return degrees[i]; }
    // Neighbors of i as a [begin,end) pair into col_idx.
    std::pair<const int*, const int*> neighbors(int i) const {
        return {col_idx.data() + row_ptr[i], col_idx.data() + row_ptr[i + 1]};
    }
};

/// Sparse CSR operator with per-entry values. Built from a Graph's adjacency;
/// shares its symmetry. Pure apply interface, safe to share across threads.
struct SparseOperator {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col_idx;
    std::vector<double> values;

    // y = op * x, row-parallel; each output row is accumulated sequentially so
    // results are bitwise reproducible regardless of thread count.
    Matrix apply(const Matrix& x) const {
        if (x.rows() != n) throw shape_error("SparseOperator::apply: operator " + std::to_string(n) +
                                             " rows vs input " + shape_str(x));
        Matrix y(n, x.cols());
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) {
            double* yi = y.row_ptr(i);
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
                const double v = values[e];
                const double* xr = x.row_ptr(col_idx[e]);
                for (int j = 0; j < x.cols(); ++j) yi[j] += v * xr[j];
            }
        }
        return y;
    }

    // y = op^T * x. Sequential scatter; only used on the gradient path where
    // operators are small.
    Matrix apply_transpose(const Matrix& x) const {
        if (x.rows() != n) throw shape_error("SparseOperator::apply_transpose: shape mismatch");
        Matrix y(n, x.cols());
        for (int i = 0; i < n; ++i) {
            const double* xi = x.row_ptr(i);
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
                double* yr = y.row_ptr(col_idx[e]);
                const double v = values[e];
                for (int j = 0; j < x.cols(); ++j) yr[j] += v * xi[j];
            }
        }
        return y;
    }

    Matrix to_dense() const {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int e = row_ptr[i]; e < row_ptr[i + 1]; ++e) m(i, col_idx[e]) += values[e];
        return m;
    }
};

namespace detail {

// Symmetrize + dedup + drop self-loops, then build CSR. Warnings about
// dropped lines go to stderr so data problems stay visible.
inline Graph build_graph(int n, const std::vector<std::pair<int, int>>& raw_edges, Matrix features,
                         std::optional<std::vector<int>> labels, bool log_drops = true) {
    long self_loops = 0;
    std::set<std::pair<int, int>> undirected;
    for (auto [a, b] : raw_edges) {
        if (a < 0 || b < 0 || a >= n || b >= n)
            throw input_error("edge (" + std::to_string(a) + "," + std::to_string(b) +
                              ") references a node outside 0.." + std::to_string(n - 1));
        if (a == b) {
            ++self_loops;
            continue;
        }
        undirected.insert({std::min(a, b), std::max(a, b)});
    }
    const long duplicates = static_cast<long>(raw_edges.size()) - self_loops -
                            static_cast<long>(undirected.size());
    if (log_drops && (self_loops > 0 || duplicates > 0))
        std::cerr << "[loha] dropped " << duplicates << " duplicate edge(s) and " << self_loops
                  << " self-loop(s)\n";

    Graph g;
    g.n = n;
    g.features = std::move(features);
    g.labels = std::move(labels);
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : undirected) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    g.row_ptr.assign(n + 1, 0);
    g.degrees.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        std::sort(adj[i].begin(), adj[i].end());
        g.degrees[i] = static_cast<int>(adj[i].size());
        g.row_ptr[i + 1] = g.row_ptr[i] + g.degrees[i];
    }
    g.col_idx.reserve(g.row_ptr[n]);
    long isolated = 0;
    for (int i = 0; i < n; ++i) {
        if (adj[i].empty()) ++isolated;
        g.col_idx.insert(g.col_idx.end(), adj[i].begin(), adj[i].end());
    }
    if (log_drops && isolated > 0)
        std::cerr << "[loha] graph has " << isolated << " isolated node(s)\n";
    return g;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw input_error(where + ": cannot parse '" + tok + "' as a number");
    }
}

}  // namespace detail

/// Load a graph from an edge list (one `src<TAB>dst` pair per line), a
/// headerless CSV feature file (row i = node i) and an optional label file
/// (one integer per line). Edges are treated as undirected; duplicates and
/// self-loops are dropped with a warning count.
inline Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                        const std::optional<std::string>& label_path = std::nullopt) {
    std::ifstream ff(feature_path);
    if (!ff) throw io_error("cannot open feature file: " + feature_path);
    std::vector<std::vector<double>> rows;
    std::string line;
    int ncols = -1;
    int lineno = 0;
    while (std::getline(ff, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto toks = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(toks.size());
        for (const auto& t : toks)
            row.push_back(detail::parse_double(t, feature_path + ":" + std::to_string(lineno)));
        if (ncols < 0)
            ncols = static_cast<int>(row.size());
        else if (static_cast<int>(row.size()) != ncols)
            throw input_error(feature_path + ":" + std::to_string(lineno) + ": ragged row (" +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(ncols) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw input_error(feature_path + ": no feature rows");
    const int n = static_cast<int>(rows.size());
    Matrix X(n, ncols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < ncols; ++j) X(i, j) = rows[i][j];

    std::ifstream ef(edge_path);
    if (!ef) throw io_error("cannot open edge file: " + edge_path);
    std::vector<std::pair<int, int>> edges;
    lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        long a, b;
        if (!(ss >> a >> b))
            throw input_error(edge_path + ":" + std::to_string(lineno) + ": expected 'src<TAB>dst'");
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }

    std::optional<std::vector<int>> labels;
    if (label_path) {
        std::ifstream lf(*label_path);
        if (!lf) throw io_error("cannot open label file: " + *label_path);
        std::vector<int> ls;
        lineno = 0;
        while (std::getline(lf, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                ls.push_back(std::stoi(line));
            } catch (const std::exception&) {
                throw input_error(*label_path + ":" + std::to_string(lineno) + ": bad label '" +
                                  line + "'");
            }
        }
        if (static_cast<int>(ls.size()) != n)
            throw input_error(*label_path + ": " + std::to_string(ls.size()) + " labels for " +
                              std::to_string(n) + " nodes");
        labels = std::move(ls);
    }
    return detail::build_graph(n, edges, std::move(X), std::move(labels));
}

inline Graph make_graph(int n, const std::vector<std::pair<int, int>>& edges, Matrix features,
                        std::optional<std::vector<int>> labels = std::nullopt) {
    if (features.rows() != n) throw input_error("make_graph: feature rows != n");
    return detail::build_graph(n, edges, std::move(features), std::move(labels), false);
}

// Convention for isolated nodes everywhere below: 1/sqrt(d) = 0 when d = 0.
inline double inv_sqrt_degree(int d) { return d > 0 ? 1.0 / std::sqrt(static_cast<double>(d)) : 0.0; }

/// A_hat = D^{-1/2} A D^{-1/2}; entry (i,j) = 1/sqrt(d_i d_j) per edge.
inline SparseOperator normalized_adjacency(const Graph& g) {
    SparseOperator op;
    op.n = g.n;
    op.row_ptr = g.row_ptr;
    op.col_idx = g.col_idx;
    op.values.resize(g.col_idx.size());
    for (int i = 0; i < g.n; ++i) {
        const double di = inv_sqrt_degree(g.degrees[i]);
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e)
            op.values[e] = di * inv_sqrt_degree(g.degrees[g.col_idx[e]]);
    }
    return op;
}

/// Plain adjacency as an operator (all values 1); used for 1-hop neighbor sums.
inline SparseOperator adjacency_operator(const Graph& g) {
    SparseOperator op;
    op.n = g.n;
    op.row_ptr = g.row_ptr;
    op.col_idx = g.col_idx;
    op.values.assign(g.col_idx.size(), 1.0);
    return op;
}

/// L_tilde = I - A_hat, with diagonal entries always materialized. Isolated
/// nodes get a 0 diagonal so the operator stays the limit of the normalized
/// form. Eigenvalues lie in [0, 2].
inline SparseOperator normalized_laplacian(const Graph& g) {
    SparseOperator op;
    op.n = g.n;
    op.row_ptr.assign(g.n + 1, 0);
    for (int i = 0; i < g.n; ++i) op.row_ptr[i + 1] = op.row_ptr[i] + g.degrees[i] + 1;
    op.col_idx.resize(op.row_ptr[g.n]);
    op.values.resize(op.row_ptr[g.n]);
    for (int i = 0; i < g.n; ++i) {
        const double di = inv_sqrt_degree(g.degrees[i]);
        int out = op.row_ptr[i];
        bool placed_diag = false;
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int j = g.col_idx[e];
            if (!placed_diag && j > i) {
                op.col_idx[out] = i;
                op.values[out] = g.degrees[i] > 0 ? 1.0 : 0.0;
                placed_diag = true;
                ++out;
            }
            op.col_idx[out] = j;
            op.values[out] = -di * inv_sqrt_degree(g.degrees[j]);
            ++out;
        }
        if (!placed_diag) {
            op.col_idx[out] = i;
            op.values[out] = g.degrees[i] > 0 ? 1.0 : 0.0;
        }
    }
    return op;
}

/// L_hat = 2 L_tilde / lambda_max - I. With lambda_max an upper bound on the
/// spectrum of L_tilde, the result lives in [-1, 1]. Default bound 2 keeps
/// construction O(edges); pass the exact value when tests need it.
inline SparseOperator scaled_laplacian(const Graph& g, double lambda_max = 2.0) {
    if (lambda_max <= 0.0) throw parameter_error("scaled_laplacian: lambda_max must be > 0");
    SparseOperator op = normalized_laplacian(g);
    const double s = 2.0 / lambda_max;
    for (size_t e = 0; e < op.values.size(); ++e) op.values[e] *= s;
    for (int i = 0; i < op.n; ++i)
        for (int e = op.row_ptr[i]; e < op.row_ptr[i + 1]; ++e)
            if (op.col_idx[e] == i) op.values[e] -= 1.0;
    return op;
}

/// Fraction of undirected edges whose endpoints share a label (h in [0,1]).
inline double edge_homophily(const Graph& g) {
    if (!g.labels) throw parameter_error("edge_homophily: graph has no labels");
    if (g.col_idx.empty()) throw parameter_error("edge_homophily: graph has no edges");
    const auto& y = *g.labels;
    long same = 0, total = 0;
    for (int i = 0; i < g.n; ++i)
        for (int e = g.row_ptr[i]; e < g.row_ptr[i + 1]; ++e) {
            const int j = g.col_idx[e];
            if (j <= i) continue;  // count each undirected edge once
            ++total;
            if (y[i] == y[j]) ++same;
        }
    return static_cast<double>(same) / static_cast<double>(total);
}

/// Balanced stochastic block model with Gaussian-noised one-hot features.
/// Every intra-class pair is linked with p_in, inter-class with p_out.
inline Graph generate_sbm(int n, int c, double p_in, double p_out, double feature_noise,
                          uint64_t seed) {
    if (n <= 0 || c <= 0 || n % c != 0)
        throw parameter_error("generate_sbm: class count must divide node count");
    if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
        throw parameter_error("generate_sbm: probabilities must lie in [0,1]");
    if (feature_noise < 0) throw parameter_error("generate_sbm: feature_noise must be >= 0");
    Rng rng(seed);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = i / (n / c);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double p = labels[i] == labels[j] ? p_in : p_out;
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
        }
    Matrix X(n, c);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            X(i, j) = (labels[i] == j ? 1.0 : 0.0) + rng.gaussian(0.0, 1.0) * feature_noise;
    return detail::build_graph(n, edges, std::move(X), labels, false);
}

/// Circulant graph: node i links to i +- each offset (mod n). With offsets
/// 1..k this is a 2k-regular graph, handy for concentration experiments.
inline Graph make_circulant(int n, const std::vector<int>& offsets, int feature_dim = 1) {
    if (n < 3) throw parameter_error("make_circulant: need at least 3 nodes");
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i)
        for (int o : offsets) {
            if (o <= 0 || 2 * o >= n) throw parameter_error("make_circulant: offset out of range");
            edges.emplace_back(i, (i + o) % n);
        }
    return detail::build_graph(n, edges, Matrix(n, feature_dim), std::nullopt, false);
}

}  // namespace loha
