#pragma once

#include <functional>
#include <span>

#include "loha/core.hpp"
#include "loha/graph.hpp"

namespace loha {

class Tape;

/// Handle to a matrix recorded on a tape. Copy freely; the tape owns storage.
struct Value {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Matrix& value() const;
    int rows() const { return value().rows(); }
    int cols() const { return value().cols(); }
    double scalar() const {
        if (!value().is_scalar()) throw usage_error("Value::scalar: not 1x1");
        return value()(0, 0);
    }
};

/// Recorded computation for one forward pass. Single-threaded by contract;
/// run independent experiments on independent tapes.
class Tape {
  public:
    Value constant(Matrix m) { return push(std::move(m), false, {}); }

    Value param(Matrix m) { return push(std::move(m), true, {}); }

    const Matrix& value_of(int id) const { return nodes_[id].value; }
    bool needs_grad(int id) const { return nodes_[id].needs_grad; }
    size_t size() const { return nodes_.size(); }

    // Gradient of the last backward() w.r.t. v; zeros if v was unreachable.
    Matrix grad(Value v) const {
        const Node& nd = nodes_[v.id];
        if (nd.grad.size() == 0) return Matrix(nd.value.rows(), nd.value.cols());
        return nd.grad;
    }

    /// Reverse pass from a scalar root. Accumulates gradients for every
    /// recorded node that requires them; parameters never reached keep zero.
    void backward(Value root) {
        if (root.tape != this) throw usage_error("backward: value from another tape");
        Node& r = nodes_[root.id];
        if (!r.value.is_scalar()) throw usage_error("backward: root must be a 1x1 scalar");
        for (auto& nd : nodes_) nd.grad = Matrix();
        r.grad = Matrix::scalar(1.0);
        for (int id = root.id; id >= 0; --id) {
            Node& nd = nodes_[id];
            if (nd.grad.size() == 0 || !nd.backprop) continue;
            nd.backprop(*this, nd.grad);
        }
    }

    // Accumulate g into node id's gradient unless that node opted out.
    void accumulate(int id, const Matrix& g) {
        Node& nd = nodes_[id];
        if (!nd.needs_grad) return;
        if (nd.grad.size() == 0)
            nd.grad = g;
        else {
            if (!nd.grad.same_shape(g)) throw shape_error("gradient accumulation shape mismatch");
            for (size_t i = 0; i < g.size(); ++i) nd.grad.data()[i] += g.data()[i];
        }
    }

    using BackpropFn = std::function<void(Tape&, const Matrix&)>;

    Value push(Matrix m, bool needs_grad, BackpropFn fn, const char* op = "value") {
        if (!m.all_finite())
            throw numeric_error(std::string(op) + ": produced non-finite values");
        nodes_.push_back(Node{std::move(m), Matrix(), needs_grad, std::move(fn)});
        return Value{this, static_cast<int>(nodes_.size()) - 1};
    }

  private:
    struct Node {
        Matrix value;
        Matrix grad;  // empty until backward touches it
        bool needs_grad = false;
        BackpropFn backprop;
    };
    std::vector<Node> nodes_;
};

inline const Matrix& Value::value() const { return tape->value_of(id); }

namespace detail {
inline Tape& same_tape(Value a, Value b) {
    if (a.tape == nullptr || a.tape != b.tape) throw usage_error("operands from different tapes");
    return *a.tape;
}
inline bool any_grad(std::initializer_list<Value> vs) {
    for (Value v : vs)
        if (v.tape->needs_grad(v.id)) return true;
    return false;
}
}  // namespace detail

// ---- differentiable ops -------------------------------------------------
// Each op records its local backward rule as a closure over node ids, so the
// tape's node vector can reallocate safely.

inline Value matmul(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    Matrix c = matmul(a.value(), b.value());
    const int ia = a.id, ib = b.id;
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "matmul");
    return t.push(std::move(c), true,
                  [ia, ib](Tape& tp, const Matrix& g) {
                      tp.accumulate(ia, matmul_nt(g, tp.value_of(ib)));
                      tp.accumulate(ib, matmul_tn(tp.value_of(ia), g));
                  },
                  "matmul");
}

// a * b^T; keeps the row-vs-row similarity matrices free of transposed copies.
inline Value matmul_nt(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    Matrix c = matmul_nt(a.value(), b.value());
    const int ia = a.id, ib = b.id;
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "matmul_nt");
    return t.push(std::move(c), true,
                  [ia, ib](Tape& tp, const Matrix& g) {
                      tp.accumulate(ia, matmul(g, tp.value_of(ib)));
                      tp.accumulate(ib, matmul_tn(g, tp.value_of(ia)));
                  },
                  "matmul_nt");
}

inline Value add(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    Matrix c = add(a.value(), b.value());
    const int ia = a.id, ib = b.id;
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "add");
    return t.push(std::move(c), true,
                  [ia, ib](Tape& tp, const Matrix& g) {
                      tp.accumulate(ia, g);
                      tp.accumulate(ib, g);
                  },
                  "add");
}

inline Value sub(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    Matrix c = sub(a.value(), b.value());
    const int ia = a.id, ib = b.id;
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "sub");
    return t.push(std::move(c), true,
                  [ia, ib](Tape& tp, const Matrix& g) {
                      tp.accumulate(ia, g);
                      tp.accumulate(ib, scale(g, -1.0));
                  },
                  "sub");
}

// Broadcast a 1 x p row vector over every row of an n x p matrix.
inline Value add_rowvec(Value m, Value r) {
    Tape& t = detail::same_tape(m, r);
    const Matrix& mv = m.value();
    const Matrix& rv = r.value();
    if (rv.rows() != 1 || rv.cols() != mv.cols())
        throw shape_error("add_rowvec: " + shape_str(mv) + " + " + shape_str(rv));
    Matrix c = mv;
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) += rv(0, j);
    const int im = m.id, ir = r.id;
    if (!detail::any_grad({m, r})) return t.push(std::move(c), false, {}, "add_rowvec");
    return t.push(std::move(c), true,
                  [im, ir](Tape& tp, const Matrix& g) {
                      tp.accumulate(im, g);
                      Matrix gr(1, g.cols());
                      for (int i = 0; i < g.rows(); ++i)
                          for (int j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
                      tp.accumulate(ir, gr);
                  },
                  "add_rowvec");
}

/// Elementwise product. When exactly one operand is 1x1 it broadcasts as a
/// differentiable scalar scale.
inline Value mul(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const int ia = a.id, ib = b.id;
    const bool sa = av.is_scalar(), sb = bv.is_scalar();
    if (sa != sb) {  // scalar broadcast
        const Value sv = sa ? a : b;
        const Value mv = sa ? b : a;
        const double s = sv.value()(0, 0);
        Matrix c = scale(mv.value(), s);
        if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "mul");
        const int is = sv.id, im = mv.id;
        return t.push(std::move(c), true,
                      [is, im](Tape& tp, const Matrix& g) {
                          const Matrix& m = tp.value_of(im);
                          double acc = 0.0;
                          for (size_t i = 0; i < g.size(); ++i) acc += g.data()[i] * m.data()[i];
                          tp.accumulate(is, Matrix::scalar(acc));
                          tp.accumulate(im, scale(g, tp.value_of(is)(0, 0)));
                      },
                      "mul");
    }
    if (!av.same_shape(bv)) throw shape_error("mul: " + shape_str(av) + " vs " + shape_str(bv));
    Matrix c = av;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= bv.data()[i];
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "mul");
    return t.push(std::move(c), true,
                  [ia, ib](Tape& tp, const Matrix& g) {
                      const Matrix& A = tp.value_of(ia);
                      const Matrix& B = tp.value_of(ib);
                      Matrix ga = g, gb = g;
                      for (size_t i = 0; i < g.size(); ++i) {
                          ga.data()[i] *= B.data()[i];
                          gb.data()[i] *= A.data()[i];
                      }
                      tp.accumulate(ia, ga);
                      tp.accumulate(ib, gb);
                  },
                  "mul");
}

inline Value scalar_mul(Value v, double s) {
    Tape& t = *v.tape;
    Matrix c = scale(v.value(), s);
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "scalar_mul");
    return t.push(std::move(c), true,
                  [iv, s](Tape& tp, const Matrix& g) { tp.accumulate(iv, scale(g, s)); },
                  "scalar_mul");
}

inline Value scalar_add(Value v, double s) {
    Tape& t = *v.tape;
    Matrix c = v.value();
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += s;
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "scalar_add");
    return t.push(std::move(c), true,
                  [iv](Tape& tp, const Matrix& g) { tp.accumulate(iv, g); }, "scalar_add");
}

namespace detail {
// Shared scaffolding for elementwise unary ops: fwd maps x to y, dfn maps
// (x, y) to dy/dx.
template <class F, class D>
Value unary(Value v, const char* name, F fwd, D dfn) {
    Tape& t = *v.tape;
    Matrix c = v.value();
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] = fwd(c.data()[i]);
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, name);
    const int ic = static_cast<int>(t.size());  // id the new node will get
    return t.push(std::move(c), true,
                  [iv, ic, dfn](Tape& tp, const Matrix& g) {
                      const Matrix& x = tp.value_of(iv);
                      const Matrix& y = tp.value_of(ic);
                      Matrix gx = g;
                      for (size_t i = 0; i < g.size(); ++i)
                          gx.data()[i] *= dfn(x.data()[i], y.data()[i]);
                      tp.accumulate(iv, gx);
                  },
                  name);
}
}  // namespace detail

// ReLU derivative at 0 is taken as 0.
inline Value relu(Value v) {
    return detail::unary(
        v, "relu", [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}
inline Value tanh(Value v) {
    return detail::unary(
        v, "tanh", [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}
inline Value sigmoid(Value v) {
    return detail::unary(
        v, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}
inline Value cos(Value v) {
    return detail::unary(
        v, "cos", [](double x) { return std::cos(x); },
        [](double x, double) { return -std::sin(x); });
}
inline Value exp(Value v) {
    return detail::unary(
        v, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}
inline Value log(Value v) {
    for (size_t i = 0; i < v.value().size(); ++i)
        if (v.value().data()[i] <= 0.0) throw numeric_error("log: input must be strictly positive");
    return detail::unary(
        v, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}
inline Value square(Value v) {
    return detail::unary(
        v, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}
// |x|, subgradient 0 at the kink.
inline Value abs(Value v) {
    return detail::unary(
        v, "abs", [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

inline Value row_sum(Value v) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    Matrix c(x.rows(), 1);
    for (int i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols(); ++j) s += x(i, j);
        c(i, 0) = s;
    }
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "row_sum");
    return t.push(std::move(c), true,
                  [iv](Tape& tp, const Matrix& g) {
                      const Matrix& x = tp.value_of(iv);
                      Matrix gx(x.rows(), x.cols());
                      for (int i = 0; i < x.rows(); ++i)
                          for (int j = 0; j < x.cols(); ++j) gx(i, j) = g(i, 0);
                      tp.accumulate(iv, gx);
                  },
                  "row_sum");
}

inline Value row_mean(Value v) { return scalar_mul(row_sum(v), 1.0 / v.value().cols()); }

/// Per-row population standard deviation (divide by the column count).
/// Requires >= 2 columns; rows with zero spread get zero gradient.
inline Value row_std(Value v) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    if (x.cols() < 2) throw parameter_error("row_std: need at least 2 columns");
    const int p = x.cols();
    Matrix c(x.rows(), 1);
    for (int i = 0; i < x.rows(); ++i) {
        double m = 0.0;
        for (int j = 0; j < p; ++j) m += x(i, j);
        m /= p;
        double s = 0.0;
        for (int j = 0; j < p; ++j) s += (x(i, j) - m) * (x(i, j) - m);
        c(i, 0) = std::sqrt(s / p);
    }
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "row_std");
    const int ic = static_cast<int>(t.size());
    return t.push(std::move(c), true,
                  [iv, ic, p](Tape& tp, const Matrix& g) {
                      const Matrix& x = tp.value_of(iv);
                      const Matrix& y = tp.value_of(ic);
                      Matrix gx(x.rows(), x.cols());
                      for (int i = 0; i < x.rows(); ++i) {
                          const double yi = y(i, 0);
                          if (yi < 1e-300) continue;
                          double m = 0.0;
                          for (int j = 0; j < p; ++j) m += x(i, j);
                          m /= p;
                          for (int j = 0; j < p; ++j) gx(i, j) = g(i, 0) * (x(i, j) - m) / (p * yi);
                      }
                      tp.accumulate(iv, gx);
                  },
                  "row_std");
}

/// Rows scaled to unit L2 norm. Rows with norm < 1e-12 become zero rows (and
/// therefore score zero cosine similarity against everything).
inline Value l2_normalize_rows(Value v) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    Matrix c(x.rows(), x.cols());
    std::vector<double> norms(x.rows());
    for (int i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols(); ++j) s += x(i, j) * x(i, j);
        const double nr = std::sqrt(s);
        norms[i] = nr;
        if (nr >= 1e-12)
            for (int j = 0; j < x.cols(); ++j) c(i, j) = x(i, j) / nr;
    }
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "l2_normalize_rows");
    const int ic = static_cast<int>(t.size());
    return t.push(std::move(c), true,
                  [iv, ic, norms](Tape& tp, const Matrix& g) {
                      const Matrix& y = tp.value_of(ic);
                      Matrix gx(g.rows(), g.cols());
                      for (int i = 0; i < g.rows(); ++i) {
                          if (norms[i] < 1e-12) continue;
                          double dot = 0.0;
                          for (int j = 0; j < g.cols(); ++j) dot += y(i, j) * g(i, j);
                          for (int j = 0; j < g.cols(); ++j)
                              gx(i, j) = (g(i, j) - y(i, j) * dot) / norms[i];
                      }
                      tp.accumulate(iv, gx);
                  },
                  "l2_normalize_rows");
}

inline Value concat_cols(Value a, Value b) {
    Tape& t = detail::same_tape(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.rows() != bv.rows())
        throw shape_error("concat_cols: " + shape_str(av) + " vs " + shape_str(bv));
    Matrix c(av.rows(), av.cols() + bv.cols());
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) c(i, j) = av(i, j);
        for (int j = 0; j < bv.cols(); ++j) c(i, av.cols() + j) = bv(i, j);
    }
    const int ia = a.id, ib = b.id, ca = av.cols(), cb = bv.cols();
    if (!detail::any_grad({a, b})) return t.push(std::move(c), false, {}, "concat_cols");
    return t.push(std::move(c), true,
                  [ia, ib, ca, cb](Tape& tp, const Matrix& g) {
                      Matrix ga(g.rows(), ca), gb(g.rows(), cb);
                      for (int i = 0; i < g.rows(); ++i) {
                          for (int j = 0; j < ca; ++j) ga(i, j) = g(i, j);
                          for (int j = 0; j < cb; ++j) gb(i, j) = g(i, ca + j);
                      }
                      tp.accumulate(ia, ga);
                      tp.accumulate(ib, gb);
                  },
                  "concat_cols");
}

inline Value concat_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw usage_error("concat_rows: no parts");
    Tape& t = *parts[0].tape;
    const int cols = parts[0].value().cols();
    int rows = 0;
    bool ng = false;
    for (Value p : parts) {
        if (p.tape != &t) throw usage_error("concat_rows: operands from different tapes");
        if (p.value().cols() != cols) throw shape_error("concat_rows: column mismatch");
        rows += p.value().rows();
        ng = ng || t.needs_grad(p.id);
    }
    Matrix c(rows, cols);
    std::vector<int> ids, offs;
    int off = 0;
    for (Value p : parts) {
        const Matrix& pv = p.value();
        for (int i = 0; i < pv.rows(); ++i)
            for (int j = 0; j < cols; ++j) c(off + i, j) = pv(i, j);
        ids.push_back(p.id);
        offs.push_back(off);
        off += pv.rows();
    }
    if (!ng) return t.push(std::move(c), false, {}, "concat_rows");
    return t.push(std::move(c), true,
                  [ids, offs, cols](Tape& tp, const Matrix& g) {
                      for (size_t k = 0; k < ids.size(); ++k) {
                          const int r = tp.value_of(ids[k]).rows();
                          Matrix gk(r, cols);
                          for (int i = 0; i < r; ++i)
                              for (int j = 0; j < cols; ++j) gk(i, j) = g(offs[k] + i, j);
                          tp.accumulate(ids[k], gk);
                      }
                  },
                  "concat_rows");
}

inline Value row(Value v, int i) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    if (i < 0 || i >= x.rows()) throw usage_error("row: index out of range");
    Matrix c(1, x.cols());
    for (int j = 0; j < x.cols(); ++j) c(0, j) = x(i, j);
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "row");
    return t.push(std::move(c), true,
                  [iv, i](Tape& tp, const Matrix& g) {
                      const Matrix& x = tp.value_of(iv);
                      Matrix gx(x.rows(), x.cols());
                      for (int j = 0; j < x.cols(); ++j) gx(i, j) = g(0, j);
                      tp.accumulate(iv, gx);
                  },
                  "row");
}

inline Value diag(Value v) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    if (x.rows() != x.cols()) throw shape_error("diag: matrix must be square, got " + shape_str(x));
    Matrix c(x.rows(), 1);
    for (int i = 0; i < x.rows(); ++i) c(i, 0) = x(i, i);
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(std::move(c), false, {}, "diag");
    return t.push(std::move(c), true,
                  [iv](Tape& tp, const Matrix& g) {
                      const int n = tp.value_of(iv).rows();
                      Matrix gx(n, n);
                      for (int i = 0; i < n; ++i) gx(i, i) = g(i, 0);
                      tp.accumulate(iv, gx);
                  },
                  "diag");
}

inline Value sum_all(Value v) {
    Tape& t = *v.tape;
    const Matrix& x = v.value();
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x.data()[i];
    const int iv = v.id;
    if (!t.needs_grad(iv)) return t.push(Matrix::scalar(s), false, {}, "sum_all");
    return t.push(Matrix::scalar(s), true,
                  [iv](Tape& tp, const Matrix& g) {
                      const Matrix& x = tp.value_of(iv);
                      Matrix gx(x.rows(), x.cols());
                      const double gv = g(0, 0);
                      for (size_t i = 0; i < gx.size(); ++i) gx.data()[i] = gv;
                      tp.accumulate(iv, gx);
                  },
                  "sum_all");
}

inline Value mean_all(Value v) { return scalar_mul(sum_all(v), 1.0 / static_cast<double>(v.value().size())); }

/// op * X for a CSR operator. The operator outlives the tape by contract.
inline Value sparse_matmul(const SparseOperator& op, Value x) {
    Tape& t = *x.tape;
    Matrix c = op.apply(x.value());
    const int ix = x.id;
    if (!t.needs_grad(ix)) return t.push(std::move(c), false, {}, "sparse_matmul");
    const SparseOperator* p = &op;
    return t.push(std::move(c), true,
                  [ix, p](Tape& tp, const Matrix& g) { tp.accumulate(ix, p->apply_transpose(g)); },
                  "sparse_matmul");
}

/// Precomputed polynomial basis applied to a fixed input: basis[k] = T_k(op) X.
struct ChebBasis {
    std::vector<Matrix> terms;

    static ChebBasis build(const SparseOperator& op, const Matrix& x, int order) {
        ChebBasis b;
        b.terms.reserve(order + 1);
        b.terms.push_back(x);
        if (order >= 1) b.terms.push_back(op.apply(x));
        for (int k = 2; k <= order; ++k) {
            Matrix next = op.apply(b.terms[k - 1]);
            next = sub(scale(next, 2.0), b.terms[k - 2]);
            b.terms.push_back(std::move(next));
        }
        return b;
    }
    int order() const { return static_cast<int>(terms.size()) - 1; }
};

/// sum_k w[k] * basis[k] with gradients flowing into the coefficient column
/// w ((K+1) x 1). Equivalent to cheb_propagate on the basis input, but the
/// tape only stores one node.
inline Value cheb_combine(const ChebBasis& basis, Value w) {
    Tape& t = *w.tape;
    const Matrix& wv = w.value();
    if (wv.cols() != 1 || wv.rows() != static_cast<int>(basis.terms.size()))
        throw shape_error("cheb_combine: coefficient shape " + shape_str(wv) + " vs basis size " +
                          std::to_string(basis.terms.size()));
    const Matrix& first = basis.terms[0];
    Matrix c(first.rows(), first.cols());
    for (size_t k = 0; k < basis.terms.size(); ++k) {
        const double wk = wv(static_cast<int>(k), 0);
        const Matrix& bk = basis.terms[k];
        for (size_t i = 0; i < c.size(); ++i) c.data()[i] += wk * bk.data()[i];
    }
    const int iw = w.id;
    if (!t.needs_grad(iw)) return t.push(std::move(c), false, {}, "cheb_combine");
    const ChebBasis* pb = &basis;
    return t.push(std::move(c), true,
                  [iw, pb](Tape& tp, const Matrix& g) {
                      Matrix gw(static_cast<int>(pb->terms.size()), 1);
                      for (size_t k = 0; k < pb->terms.size(); ++k) {
                          const Matrix& bk = pb->terms[k];
                          double s = 0.0;
                          for (size_t i = 0; i < g.size(); ++i) s += g.data()[i] * bk.data()[i];
                          gw(static_cast<int>(k), 0) = s;
                      }
                      tp.accumulate(iw, gw);
                  },
                  "cheb_combine");
}

/// Forward the value, cut the gradient. Used by the composite-feature
/// stop-gradient ablation switch.
inline Value stop_gradient(Value v) { return v.tape->constant(v.value()); }

// ---- Adam ---------------------------------------------------------------

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Standard bias-corrected Adam. Moments live alongside the parameters they
/// belong to; step counts from 1.
struct AdamState {
    std::vector<Matrix> m, v;
    long step = 0;
    AdamHyper hyper;

    void init(const std::vector<Matrix*>& params, AdamHyper h = {}) {
        hyper = h;
        m.clear();
        v.clear();
        for (const Matrix* p : params) {
            m.emplace_back(p->rows(), p->cols());
            v.emplace_back(p->rows(), p->cols());
        }
        step = 0;
    }
};

inline void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads,
                      AdamState& st) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw shape_error("adam_step: parameter/gradient/state count mismatch");
    ++st.step;
    const double c1 = 1.0 - std::pow(st.hyper.beta1, static_cast<double>(st.step));
    const double c2 = 1.0 - std::pow(st.hyper.beta2, static_cast<double>(st.step));
    for (size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& g = grads[k];
        if (!p.same_shape(g)) throw shape_error("adam_step: gradient shape mismatch");
        Matrix& mk = st.m[k];
        Matrix& vk = st.v[k];
        for (size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data()[i];
            mk.data()[i] = st.hyper.beta1 * mk.data()[i] + (1.0 - st.hyper.beta1) * gi;
            vk.data()[i] = st.hyper.beta2 * vk.data()[i] + (1.0 - st.hyper.beta2) * gi * gi;
            const double mhat = mk.data()[i] / c1;
            const double vhat = vk.data()[i] / c2;
            p.data()[i] -= st.hyper.lr * mhat / (std::sqrt(vhat) + st.hyper.eps);
        }
    }
}

}  // namespace loha
