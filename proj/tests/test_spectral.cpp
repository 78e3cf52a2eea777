#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace loha;

namespace {

std::vector<Value> constant_gammas(Tape& t, const std::vector<double>& vals) {
    std::vector<Value> out;
    for (double v : vals) out.push_back(t.constant(Matrix::scalar(v)));
    return out;
}

SlidingParams bind_sliding(Tape& t, double beta_a, double beta_b, double delta) {
    return SlidingParams{t.param(Matrix::scalar(beta_a)), t.param(Matrix::scalar(beta_b)),
                         t.param(Matrix::scalar(delta))};
}

// Response function of a filter built from frequency-ordered gamma values,
// the way the model consumes them.
std::function<double(double)> response_of(const std::vector<double>& w, double lambda_max = 2.0) {
    return [w, lambda_max](double lam) { return filter_response(w, {lam}, lambda_max)[0]; };
}

}  // namespace

TEST_CASE("chebyshev nodes closed form and symmetry", "[spectral]") {
    const auto x1 = chebyshev_nodes(1);
    CHECK(x1[0] == Catch::Approx(std::cos(M_PI / 4)).margin(1e-15));
    CHECK(x1[1] == Catch::Approx(std::cos(3 * M_PI / 4)).margin(1e-15));
    CHECK(x1[0] == Catch::Approx(0.70710678118654757).margin(1e-15));

    for (int k : {2, 5, 9, 10}) {
        const auto x = chebyshev_nodes(k);
        for (int j = 0; j <= k; ++j) {
            CHECK(x[j] == Catch::Approx(-x[k - j]).margin(1e-15));
            if (j > 0) CHECK(x[j] < x[j - 1]);
            CHECK(std::abs(x[j]) < 1.0);
        }
    }
    CHECK(std::abs(chebyshev_nodes(2)[1]) <= 1e-15);  // middle node is 0
    CHECK_THROWS_AS(chebyshev_nodes(0), parameter_error);
}

TEST_CASE("constant gamma gives a pure constant filter", "[spectral]") {
    // independent route: discrete orthogonality says sum_j T_k(x_j) vanishes
    // for 1 <= k <= K, so only the zeroth coefficient survives
    const int k = 7;
    const auto nodes = chebyshev_nodes(k);
    for (int deg = 1; deg <= k; ++deg) {
        double s = 0.0;
        for (double x : nodes) {
            // direct recurrence per node
            double t0 = 1.0, t1 = x;
            for (int i = 2; i <= deg; ++i) {
                const double t2 = 2 * x * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            s += deg == 0 ? t0 : t1;
        }
        CHECK(std::abs(s) <= 1e-12);
    }
    const double c = 1.7;
    const auto w = interp_weights_plain(std::vector<double>(k + 1, c));
    CHECK(w[0] == Catch::Approx(c).margin(1e-14));
    for (int i = 1; i <= k; ++i) CHECK(std::abs(w[i]) <= 1e-14);
}

TEST_CASE("identity samples give the first-order coefficient", "[spectral]") {
    const auto w = interp_weights_plain(chebyshev_nodes(6));
    CHECK(std::abs(w[0]) <= 1e-14);
    CHECK(w[1] == Catch::Approx(1.0).margin(1e-14));
    for (size_t i = 2; i < w.size(); ++i) CHECK(std::abs(w[i]) <= 1e-14);
}

TEST_CASE("interp weights are linear in gamma", "[spectral]") {
    Rng rng(8);
    const int k = 5;
    std::vector<double> g1(k + 1), g2(k + 1), gsum(k + 1);
    for (int i = 0; i <= k; ++i) {
        g1[i] = rng.uniform(-2, 2);
        g2[i] = rng.uniform(-2, 2);
        gsum[i] = g1[i] + g2[i];
    }
    const auto w1 = interp_weights_plain(g1);
    const auto w2 = interp_weights_plain(g2);
    const auto ws = interp_weights_plain(gsum);
    for (int i = 0; i <= k; ++i) CHECK(ws[i] == Catch::Approx(w1[i] + w2[i]).margin(1e-13));
}

TEST_CASE("tape and plain weight transforms agree", "[spectral]") {
    Tape t;
    const std::vector<double> g{0.3, -0.7, 1.1, 0.2};
    Value w = interp_weights(constant_gammas(t, g));
    const auto wp = interp_weights_plain(g);
    for (int i = 0; i < w.rows(); ++i) CHECK(w.value()(i, 0) == Catch::Approx(wp[i]).margin(1e-15));
}

TEST_CASE("zeroth coefficient reproduces c X exactly", "[spectral]") {
    Rng rng(14);
    const Graph g = oracles::random_graph(10, 0.3, 2, 3);
    const SparseOperator lap = scaled_laplacian(g);
    const Matrix x = rng.uniform_matrix(10, 2, -1, 1);
    const double c = -0.83;
    Tape t;
    Value w = interp_weights(constant_gammas(t, std::vector<double>(6, c)));
    Value out = cheb_propagate(lap, t.constant(x), w);
    CHECK(max_abs_diff(out.value(), scale(x, c)) <= 1e-12);
}

TEST_CASE("first-order coefficient applies the operator once", "[spectral]") {
    Rng rng(15);
    const Graph g = oracles::random_graph(9, 0.3, 2, 5);
    const SparseOperator lap = scaled_laplacian(g);
    const Matrix x = rng.uniform_matrix(9, 2, -1, 1);
    Tape t;
    Matrix w(5, 1);
    w(1, 0) = 1.0;
    Value out = cheb_propagate(lap, t.constant(x), t.constant(w));
    CHECK(max_abs_diff(out.value(), lap.apply(x)) <= 1e-14);
}

TEST_CASE("propagation matches the dense oracle", "[spectral]") {
    Rng rng(16);
    const Graph g = oracles::random_graph(8, 0.4, 3, 6);
    const SparseOperator lap = scaled_laplacian(g);
    std::vector<double> gamma(7);
    for (double& v : gamma) v = rng.uniform(-1.5, 1.5);
    Tape t;
    const SpectralFilter f = make_filter(constant_gammas(t, gamma), FilterMode::fixed);
    Value out = cheb_propagate(lap, t.constant(g.features), f.w);
    const Matrix oracle = dense_filter_oracle(g, response_of(f.coeff_values()), g.features);
    CHECK(max_abs_diff(out.value(), oracle) / std::max(max_abs(oracle), 1e-30) <= 1e-10);
}

TEST_CASE("dense oracle hand cases", "[spectral]") {
    const Graph edge = make_graph(2, {{0, 1}}, Matrix(2, 1));
    const Matrix x(2, 1, {1.0, 0.0});
    const Matrix identity_resp = dense_filter_oracle(edge, [](double) { return 1.0; }, x);
    CHECK(max_abs_diff(identity_resp, x) <= 1e-12);
    const Matrix low = dense_filter_oracle(edge, [](double lam) { return 1.0 - lam; }, x);
    CHECK(low(0, 0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(low(1, 0) == Catch::Approx(0.5).margin(1e-12));
    const Matrix high = dense_filter_oracle(edge, [](double lam) { return 1.0 + lam; }, x);
    CHECK(high(0, 0) == Catch::Approx(1.5).margin(1e-12));
    CHECK(high(1, 0) == Catch::Approx(-0.5).margin(1e-12));
}

TEST_CASE("dense oracle rejects large graphs", "[spectral]") {
    const Graph g = make_circulant(600, {1});
    CHECK_THROWS_AS(dense_filter_oracle(g, [](double) { return 1.0; }, Matrix(600, 1)), usage_error);
}

TEST_CASE("constant filter responds with the constant", "[spectral]") {
    const auto w = interp_weights_plain(std::vector<double>(8, 0.42));
    for (double r : filter_response(w, uniform_grid(0, 2, 25)))
        CHECK(r == Catch::Approx(0.42).margin(1e-13));
}

TEST_CASE("response interpolates gamma at the mapped nodes", "[spectral]") {
    Rng rng(18);
    const int k = 9;
    std::vector<double> gamma(k + 1);
    for (double& v : gamma) v = rng.uniform(-2, 2);
    Tape t;
    const SpectralFilter f = make_filter(constant_gammas(t, gamma), FilterMode::fixed);
    const auto nodes = chebyshev_nodes(k);
    for (int j = 0; j <= k; ++j) {
        const double lam = 2.0 * (1.0 - nodes[j]) / 2.0;  // lowest frequency at j = 0
        CHECK(filter_response(f.coeff_values(), {lam})[0] == Catch::Approx(gamma[j]).margin(1e-12));
    }
}

TEST_CASE("identity gamma profile realizes the 1 - lambda response", "[spectral]") {
    Tape t;
    const SpectralFilter f = make_filter(constant_gammas(t, chebyshev_nodes(7)), FilterMode::fixed);
    for (double lam : uniform_grid(0, 2, 21))
        CHECK(filter_response(f.coeff_values(), {lam})[0] == Catch::Approx(1.0 - lam).margin(1e-12));
}

TEST_CASE("verbatim formula evaluates as printed at the initialization", "[spectral]") {
    Tape t;
    SlidingParams p = bind_sliding(t, 0.0, 2.0, 0.0);
    const auto gamma = build_gamma(p, FilterMode::low, 10, Orientation::paper_verbatim);
    // j = 0: 0 - (1 + cos(1))
    CHECK(gamma[0].scalar() == Catch::Approx(-(1.0 + std::cos(1.0))).margin(1e-12));
    CHECK(gamma[0].scalar() == Catch::Approx(-1.5403023058681398).margin(1e-10));
}

TEST_CASE("corrected initialization pins the gamma endpoints", "[spectral]") {
    for (int k : {2, 5, 10}) {
        Tape t;
        const auto lo = build_gamma(bind_sliding(t, 0.0, 2.0, 0.0), FilterMode::low, k,
                                    Orientation::corrected);
        const auto hi = build_gamma(bind_sliding(t, 2.0, 2.0, 0.0), FilterMode::high, k,
                                    Orientation::corrected);
        CHECK(lo[0].scalar() == Catch::Approx(2.0).margin(1e-12));
        CHECK(lo[k].scalar() == Catch::Approx(0.0).margin(1e-12));
        CHECK(hi[0].scalar() == Catch::Approx(0.0).margin(1e-12));
        CHECK(hi[k].scalar() == Catch::Approx(2.0).margin(1e-12));
        for (int j = 1; j <= k; ++j) {
            CHECK(lo[j].scalar() < lo[j - 1].scalar());  // strictly decreasing
            CHECK(hi[j].scalar() > hi[j - 1].scalar());
        }
    }
}

TEST_CASE("initial responses are monotone over the spectrum", "[spectral]") {
    for (int k : {2, 5, 10}) {
        Tape t;
        const SpectralFilter fl = make_filter(
            build_gamma(bind_sliding(t, 0.0, 2.0, 0.0), FilterMode::low, k, Orientation::corrected),
            FilterMode::low);
        const SpectralFilter fh = make_filter(
            build_gamma(bind_sliding(t, 2.0, 2.0, 0.0), FilterMode::high, k, Orientation::corrected),
            FilterMode::high);
        const auto grid = uniform_grid(0, 2, 101);
        const auto rl = filter_response(fl.coeff_values(), grid);
        const auto rh = filter_response(fh.coeff_values(), grid);
        for (size_t i = 1; i < grid.size(); ++i) {
            CHECK(rl[i] <= rl[i - 1]);
            CHECK(rh[i] >= rh[i - 1]);
        }
    }
}

TEST_CASE("sliding offsets never reorder the interpolation positions", "[spectral]") {
    const int k = 10;
    for (double delta : {-1e9, -3.0, -0.2, 0.0, 0.4, 5.0, 1e9}) {
        Tape t;
        SlidingParams p = bind_sliding(t, 0.0, 2.0, delta);
        const double off = 0.5 * std::tanh(delta);
        CHECK(off > -0.5);
        CHECK(off < 0.5);
        // shifted index sequence stays strictly increasing
        double prev = -std::numeric_limits<double>::infinity();
        for (int j = 0; j <= k; ++j) {
            const double pos = off + j;
            CHECK(pos > prev);
            prev = pos;
        }
        // and the built gammas stay finite and well-formed
        const auto gamma = build_gamma(p, FilterMode::low, k, Orientation::corrected);
        CHECK(static_cast<int>(gamma.size()) == k + 1);
    }
}

TEST_CASE("band sequences follow the cumulative-mirror rule", "[spectral]") {
    // brute-force fixture for K = 4, all increments 0.5, endpoint 2:
    // prefix 2, 1.5, 1.0 then mirror
    Tape t;
    std::vector<Value> params = constant_gammas(t, {2.0, 0.5, 0.5});
    const auto seq = build_gamma_band(params, FilterMode::band_stop, 4);
    const std::vector<double> expected{2.0, 1.5, 1.0, 1.5, 2.0};
    REQUIRE(seq.size() == expected.size());
    for (size_t i = 0; i < seq.size(); ++i) CHECK(seq[i].scalar() == expected[i]);

    std::vector<Value> pass_params = constant_gammas(t, {0.0, 0.5, 0.5});
    const auto pass = build_gamma_band(pass_params, FilterMode::band_pass, 4);
    const std::vector<double> expected_pass{0.0, 0.5, 1.0, 0.5, 0.0};
    for (size_t i = 0; i < pass.size(); ++i) CHECK(pass[i].scalar() == expected_pass[i]);
}

TEST_CASE("band endpoints and mirror symmetry", "[spectral]") {
    for (int k : {4, 5, 7, 10}) {
        Tape t;
        auto mk = [&](FilterMode m) {
            const auto init = band_default_init(m, k);
            std::vector<Value> ps;
            for (double v : init) ps.push_back(t.param(Matrix::scalar(v)));
            return build_gamma_band(ps, m, k);
        };
        const auto stop = mk(FilterMode::band_stop);
        const auto pass = mk(FilterMode::band_pass);
        CHECK(stop[0].scalar() == 2.0);
        CHECK(stop[k].scalar() == 2.0);
        CHECK(pass[0].scalar() == 0.0);
        CHECK(pass[k].scalar() == 0.0);
        for (int i = (k + 1 + 1) / 2; i <= k; ++i) {
            CHECK(stop[i].scalar() == stop[k - i].scalar());  // exact mirror
            CHECK(pass[i].scalar() == pass[k - i].scalar());
        }
    }
    Tape t;
    CHECK_THROWS_AS(build_gamma_band(constant_gammas(t, {2.0}), FilterMode::band_stop, 1),
                    parameter_error);
}

TEST_CASE("propagation gradients w.r.t. gamma match finite differences", "[spectral][gradcheck]") {
    Rng rng(23);
    const Graph g = oracles::random_graph(7, 0.45, 2, 9);
    const SparseOperator lap = scaled_laplacian(g);
    const int k = 4;
    Matrix gamma0(k + 1, 1);
    for (int i = 0; i <= k; ++i) gamma0(i, 0) = rng.uniform(-1, 1);
    const Matrix mask = rng.uniform_matrix(7, 2, 0.5, 1.5);

    auto build = [&](Tape& t, Value gcol) {
        std::vector<Value> gs;
        for (int i = 0; i <= k; ++i) gs.push_back(row(gcol, i));
        const SpectralFilter f = make_filter(gs, FilterMode::fixed);
        Value out = cheb_propagate(lap, t.constant(g.features), f.w);
        return sum_all(mul(out, t.constant(mask)));
    };
    auto scalar_of = [&](const std::vector<Matrix>& ps) {
        Tape t;
        return build(t, t.param(ps[0])).scalar();
    };
    Tape t;
    Value gcol = t.param(gamma0);
    t.backward(build(t, gcol));
    CHECK(oracles::check_gradients(scalar_of, {gamma0}, {t.grad(gcol)}) <= 1e-4);
}

TEST_CASE("filter response grid validation", "[spectral]") {
    CHECK_THROWS_AS(filter_response({1.0, 0.0}, {2.5}), parameter_error);
    CHECK_THROWS_AS(filter_response({1.0, 0.0}, {-0.5}), parameter_error);
}
