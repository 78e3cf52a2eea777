#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace loha;

TEST_CASE("relu forward covers both signs", "[diffcore]") {
    Tape t;
    Value v = relu(t.constant(Matrix(1, 2, {-1.0, 2.0})));
    CHECK(v.value()(0, 0) == 0.0);
    CHECK(v.value()(0, 1) == 2.0);
}

TEST_CASE("sparse identity operator is a no-op", "[diffcore]") {
    Rng rng(4);
    const Matrix x = rng.uniform_matrix(6, 3, -1, 1);
    const auto eye = oracles::identity_operator(6);
    Tape t;
    Value y = sparse_matmul(eye, t.constant(x));
    CHECK(max_abs_diff(y.value(), x) == 0.0);
}

TEST_CASE("matmul agrees with the naive oracle", "[diffcore]") {
    Rng rng(10);
    const Matrix a = rng.uniform_matrix(2, 3, -1, 1);
    const Matrix b = rng.uniform_matrix(3, 2, -1, 1);
    CHECK(max_abs_diff(matmul(a, b), oracles::naive_matmul(a, b)) <= 1e-14);
    // and the transposed variants
    const Matrix c = rng.uniform_matrix(4, 3, -1, 1);
    CHECK(max_abs_diff(matmul_nt(a, c), oracles::naive_matmul(a, transpose(c))) <= 1e-14);
    CHECK(max_abs_diff(matmul_tn(b, b), oracles::naive_matmul(transpose(b), b)) <= 1e-14);
}

TEST_CASE("shape errors name the op", "[diffcore]") {
    Tape t;
    Value a = t.constant(Matrix(2, 3));
    Value b = t.constant(Matrix(2, 3));
    CHECK_THROWS_WITH(matmul(a, b), Catch::Matchers::ContainsSubstring("matmul"));
    CHECK_THROWS_WITH(add(a, t.constant(Matrix(3, 2))), Catch::Matchers::ContainsSubstring("add"));
    CHECK_THROWS_AS(diag(a), shape_error);
}

TEST_CASE("non-finite results trip a numeric error", "[diffcore]") {
    Tape t;
    Value big = t.constant(Matrix(1, 1, {1e4}));
    CHECK_THROWS_AS(exp(big), numeric_error);
    CHECK_THROWS_AS(log(t.constant(Matrix(1, 1, {0.0}))), numeric_error);
}

TEST_CASE("backward of sum of squares", "[diffcore]") {
    Tape t;
    Value w = t.param(Matrix(1, 1, {3.0}));
    Value loss = sum_all(square(w));
    t.backward(loss);
    CHECK(t.grad(w)(0, 0) == 6.0);
}

TEST_CASE("relu subgradient convention", "[diffcore]") {
    for (auto [x, expected] : std::vector<std::pair<double, double>>{{0.5, 1.0}, {-0.5, 0.0}, {0.0, 0.0}}) {
        Tape t;
        Value w = t.param(Matrix::scalar(x));
        Value loss = sum_all(relu(w));
        t.backward(loss);
        CHECK(t.grad(w)(0, 0) == expected);
    }
}

TEST_CASE("backward requires a scalar root", "[diffcore]") {
    Tape t;
    Value w = t.param(Matrix(2, 2));
    CHECK_THROWS_AS(t.backward(square(w)), usage_error);
}

TEST_CASE("constants never receive gradient", "[diffcore]") {
    Tape t;
    Value c = t.constant(Matrix(1, 1, {2.0}));
    Value w = t.param(Matrix(1, 1, {3.0}));
    Value loss = sum_all(mul(c, square(w)));
    t.backward(loss);
    CHECK(t.grad(c).size() == 1);
    CHECK(t.grad(c)(0, 0) == 0.0);  // zeros: grad never accumulated
    CHECK(t.grad(w)(0, 0) == 12.0);
}

TEST_CASE("unreachable parameters get zero gradient", "[diffcore]") {
    Tape t;
    Value used = t.param(Matrix::scalar(1.0));
    Value unused = t.param(Matrix(2, 2, {1, 2, 3, 4}));
    t.backward(sum_all(square(used)));
    CHECK(max_abs(t.grad(unused)) == 0.0);
    CHECK(t.grad(unused).rows() == 2);
}

// Finite-difference check for every primitive op. Inputs are kept away from
// kinks (relu/abs) and domain edges (log).
TEST_CASE("gradient check per primitive op", "[diffcore][gradcheck]") {
    Rng rng(21);
    const Graph g = oracles::random_graph(6, 0.5, 1, 31);
    const SparseOperator lap = scaled_laplacian(g);
    const ChebBasis basis = ChebBasis::build(lap, rng.uniform_matrix(6, 3, -1, 1), 4);

    auto away_from_zero = [](Matrix m) {
        for (size_t i = 0; i < m.size(); ++i) {
            double& v = m.data()[i];
            if (std::abs(v) < 0.15) v = v >= 0 ? v + 0.2 : v - 0.2;
        }
        return m;
    };

    struct Case {
        const char* name;
        std::vector<Matrix> inputs;
        std::function<Value(Tape&, const std::vector<Value>&)> build;
    };
    const Matrix m34 = rng.uniform_matrix(3, 4, -1, 1);
    const Matrix n34 = rng.uniform_matrix(3, 4, -1, 1);
    const Matrix m43 = rng.uniform_matrix(4, 3, -1, 1);
    const Matrix m54 = rng.uniform_matrix(5, 4, -1, 1);
    const Matrix m63 = rng.uniform_matrix(6, 3, -1, 1);
    const Matrix row14 = rng.uniform_matrix(1, 4, -1, 1);
    const Matrix sc = Matrix::scalar(0.8);
    const Matrix sq33 = rng.uniform_matrix(3, 3, -1, 1);
    const Matrix pos34 = rng.uniform_matrix(3, 4, 0.5, 2.0);
    const Matrix w5 = rng.uniform_matrix(5, 1, -1, 1);

    std::vector<Case> cases = {
        {"matmul", {m34, m43}, [](Tape&, const std::vector<Value>& v) { return matmul(v[0], v[1]); }},
        {"matmul_nt", {m34, m54}, [](Tape&, const std::vector<Value>& v) { return matmul_nt(v[0], v[1]); }},
        {"add", {m34, n34}, [](Tape&, const std::vector<Value>& v) { return add(v[0], v[1]); }},
        {"sub", {m34, n34}, [](Tape&, const std::vector<Value>& v) { return sub(v[0], v[1]); }},
        {"add_rowvec", {m34, row14}, [](Tape&, const std::vector<Value>& v) { return add_rowvec(v[0], v[1]); }},
        {"elementwise-mul", {m34, n34}, [](Tape&, const std::vector<Value>& v) { return mul(v[0], v[1]); }},
        {"scalar-broadcast-mul", {m34, sc}, [](Tape&, const std::vector<Value>& v) { return mul(v[0], v[1]); }},
        {"scalar_mul", {m34}, [](Tape&, const std::vector<Value>& v) { return scalar_mul(v[0], 1.7); }},
        {"scalar_add", {m34}, [](Tape&, const std::vector<Value>& v) { return scalar_add(v[0], 0.3); }},
        {"relu", {away_from_zero(m34)}, [](Tape&, const std::vector<Value>& v) { return relu(v[0]); }},
        {"tanh", {m34}, [](Tape&, const std::vector<Value>& v) { return tanh(v[0]); }},
        {"sigmoid", {m34}, [](Tape&, const std::vector<Value>& v) { return sigmoid(v[0]); }},
        {"cos", {m34}, [](Tape&, const std::vector<Value>& v) { return cos(v[0]); }},
        {"exp", {m34}, [](Tape&, const std::vector<Value>& v) { return exp(v[0]); }},
        {"log", {pos34}, [](Tape&, const std::vector<Value>& v) { return log(v[0]); }},
        {"square", {m34}, [](Tape&, const std::vector<Value>& v) { return square(v[0]); }},
        {"abs", {away_from_zero(n34)}, [](Tape&, const std::vector<Value>& v) { return abs(v[0]); }},
        {"row_sum", {m34}, [](Tape&, const std::vector<Value>& v) { return row_sum(v[0]); }},
        {"row_mean", {m34}, [](Tape&, const std::vector<Value>& v) { return row_mean(v[0]); }},
        {"row_std", {m34}, [](Tape&, const std::vector<Value>& v) { return row_std(v[0]); }},
        {"l2_normalize_rows", {m34}, [](Tape&, const std::vector<Value>& v) { return l2_normalize_rows(v[0]); }},
        {"concat_cols", {m34, m34}, [](Tape&, const std::vector<Value>& v) { return concat_cols(v[0], v[1]); }},
        {"concat_rows", {m34, n34}, [](Tape&, const std::vector<Value>& v) { return concat_rows({v[0], v[1]}); }},
        {"row", {m34}, [](Tape&, const std::vector<Value>& v) { return row(v[0], 1); }},
        {"diag", {sq33}, [](Tape&, const std::vector<Value>& v) { return diag(v[0]); }},
        {"sum_all", {m34}, [](Tape&, const std::vector<Value>& v) { return sum_all(v[0]); }},
        {"sparse-dense-matmul", {m63}, [&lap](Tape&, const std::vector<Value>& v) { return sparse_matmul(lap, v[0]); }},
        {"cheb_combine", {w5}, [&basis](Tape&, const std::vector<Value>& v) { return cheb_combine(basis, v[0]); }},
    };

    for (const auto& c : cases) {
        CAPTURE(c.name);
        // weight the output by a fixed random mask so every entry matters
        Matrix mask;
        {
            Tape probe;
            std::vector<Value> vs;
            for (const auto& m : c.inputs) vs.push_back(probe.constant(m));
            Value out = c.build(probe, vs);
            Rng mrng(55);
            mask = mrng.uniform_matrix(out.rows(), out.cols(), 0.5, 1.5);
        }
        auto scalar_of = [&](const std::vector<Matrix>& inputs) {
            Tape tape;
            std::vector<Value> vs;
            for (const auto& m : inputs) vs.push_back(tape.param(m));
            return sum_all(mul(c.build(tape, vs), tape.constant(mask))).scalar();
        };
        Tape tape;
        std::vector<Value> vs;
        for (const auto& m : c.inputs) vs.push_back(tape.param(m));
        Value loss = sum_all(mul(c.build(tape, vs), tape.constant(mask)));
        tape.backward(loss);
        std::vector<Matrix> analytic;
        for (Value v : vs) analytic.push_back(tape.grad(v));
        const double worst = oracles::check_gradients(scalar_of, c.inputs, analytic);
        INFO(c.name << " worst rel err " << worst);
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("gradients of composites match finite differences", "[diffcore]") {
    Rng rng(77);
    const Matrix w0 = rng.uniform_matrix(3, 3, -1, 1);
    auto f = [](const std::vector<Matrix>& ps) {
        Tape t;
        Value w = t.param(ps[0]);
        Value h = tanh(matmul(w, w));
        return mean_all(square(sub(h, scalar_mul(w, 0.3)))).scalar();
    };
    Tape t;
    Value w = t.param(w0);
    Value h = tanh(matmul(w, w));
    Value loss = mean_all(square(sub(h, scalar_mul(w, 0.3))));
    t.backward(loss);
    CHECK(oracles::check_gradients(f, {w0}, {t.grad(w)}) <= 1e-4);
}

TEST_CASE("gradient is additive over disconnected subexpressions", "[diffcore]") {
    Rng rng(31);
    const Matrix w0 = rng.uniform_matrix(2, 2, -1, 1);
    auto grad_of = [&](bool first, bool second) {
        Tape t;
        Value w = t.param(w0);
        Value loss = t.constant(Matrix::scalar(0.0));
        if (first) loss = add(loss, sum_all(square(w)));
        if (second) loss = add(loss, sum_all(cos(w)));
        t.backward(loss);
        return t.grad(w);
    };
    const Matrix both = grad_of(true, true);
    const Matrix sum_parts = add(grad_of(true, false), grad_of(false, true));
    CHECK(max_abs_diff(both, sum_parts) <= 1e-15);
}

TEST_CASE("tape replay is bitwise deterministic", "[diffcore]") {
    auto run = [] {
        Rng rng(123);
        Tape t;
        Value w = t.param(rng.uniform_matrix(4, 4, -1, 1));
        Value x = t.constant(rng.uniform_matrix(4, 4, -1, 1));
        Value loss = mean_all(square(tanh(matmul(x, w))));
        t.backward(loss);
        return std::pair{loss.scalar(), t.grad(w)};
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(max_abs_diff(a.second, b.second) == 0.0);
}

TEST_CASE("adam first step with unit gradient", "[diffcore]") {
    Matrix p = Matrix::scalar(1.0);
    AdamState st;
    st.init({&p}, AdamHyper{0.01});
    adam_step({&p}, {Matrix::scalar(1.0)}, st);
    // closed form: lr * 1 / (1 + eps)
    CHECK(p(0, 0) == Catch::Approx(1.0 - 0.01 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam fixed point at zero gradient", "[diffcore]") {
    Matrix p = Matrix(2, 2, {1, 2, 3, 4});
    const Matrix before = p;
    AdamState st;
    st.init({&p});
    for (int i = 0; i < 10; ++i) adam_step({&p}, {Matrix(2, 2)}, st);
    CHECK(max_abs_diff(p, before) == 0.0);
}

TEST_CASE("adam steady state approaches lr * sign(g)", "[diffcore]") {
    Matrix p = Matrix::scalar(0.0);
    AdamState st;
    st.init({&p}, AdamHyper{0.01});
    const Matrix g = Matrix::scalar(-2.5);
    double prev = p(0, 0);
    double delta = 0.0;
    for (int i = 0; i < 500; ++i) {
        adam_step({&p}, {g}, st);
        delta = p(0, 0) - prev;
        prev = p(0, 0);
    }
    CHECK(delta == Catch::Approx(0.01).epsilon(1e-3));  // +lr for negative gradient
}

TEST_CASE("adam rejects mismatched shapes", "[diffcore]") {
    Matrix p = Matrix(2, 2);
    AdamState st;
    st.init({&p});
    CHECK_THROWS_AS(adam_step({&p}, {Matrix(3, 1)}, st), shape_error);
}

TEST_CASE("adam step counter increments by one", "[diffcore]") {
    Matrix p = Matrix::scalar(0.0);
    AdamState st;
    st.init({&p});
    for (long s = 1; s <= 5; ++s) {
        adam_step({&p}, {Matrix::scalar(0.1)}, st);
        CHECK(st.step == s);
    }
}
