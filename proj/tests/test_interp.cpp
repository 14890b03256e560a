#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hgan/interp.hpp"

using namespace hgan;

namespace {

// sup error against the reference interpolant on 10 points per knot interval,
// plus one unit of padding on each side
double grid_error(const ReluNet& net, const KnotSamples& s) {
    double err = 0.0;
    const int n = static_cast<int>(s.xs.size());
    auto probe = [&](double x) {
        auto a = eval(net, Vec{x});
        auto b = eval_pwl(s, x);
        for (std::size_t c = 0; c < b.size(); ++c) err = std::max(err, std::abs(a[c] - b[c]));
    };
    for (int i = 0; i + 1 < n; ++i)
        for (int k = 0; k < 10; ++k) probe(s.xs[i] + (s.xs[i + 1] - s.xs[i]) * k / 10.0);
    for (int k = 0; k <= 10; ++k) {
        probe(s.xs.front() - 1.0 + k / 10.0);
        probe(s.xs.back() + k / 10.0);
    }
    return err;
}

KnotSamples random_knots(std::mt19937_64& rng, int n, int d) {
    std::uniform_real_distribution<double> u(0.05, 1.0), v(-1.0, 1.0);
    KnotSamples s;
    double x = v(rng);
    for (int i = 0; i < n; ++i) {
        s.xs.push_back(x);
        x += u(rng);
        Vec y(d);
        for (auto& t : y) t = v(rng);
        s.ys.push_back(y);
    }
    return s;
}

} // namespace

TEST_CASE("eval_pwl reference") {
    auto s = KnotSamples::scalar({0, 1}, {0, 1});
    CHECK(eval_pwl(s, 0.5)[0] == 0.5);
    CHECK(eval_pwl(s, -7)[0] == 0.0);
    CHECK(eval_pwl(s, 9)[0] == 1.0);
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        auto r = random_knots(rng, 8, 1);
        int i = static_cast<int>(rng() % 7);
        double x = r.xs[i] + 2.0 / 3.0 * (r.xs[i + 1] - r.xs[i]);
        CHECK(eval_pwl(r, x)[0] == doctest::Approx((r.ys[i][0] + 2 * r.ys[i + 1][0]) / 3).epsilon(1e-12));
    }
}

TEST_CASE("linear_interpolator examples") {
    auto two = KnotSamples::scalar({0, 1}, {0, 1});
    auto n = linear_interpolator(two, 6, 1);
    CHECK(std::abs(eval1(n, 0.5) - 0.5) <= 1e-9);
    CHECK(n.within_budget());
    CHECK(n.width() <= 8);
    CHECK(n.depth() <= 2);

    for (int W : {6, 7, 12}) {
        for (int L : {1, 2, 3}) {
            const int cap = (W / 6) * W * L;
            std::mt19937_64 rng(W * 10 + L);
            auto s = random_knots(rng, cap + 2, 1);
            auto net = linear_interpolator(s, W, L);
            CHECK(net.width() <= W + 2);
            CHECK(net.depth() <= 2 * L);
            CHECK(grid_error(net, s) <= 1e-9);
            auto over = random_knots(rng, cap + 3, 1);
            CHECK_THROWS_AS(linear_interpolator(over, W, L), BudgetError);
        }
    }
}

TEST_CASE("linear_interpolator on the plateau sample set") {
    for (int W : {6, 8}) {
        const int L = 2, M = W * W * L;
        KnotSamples s;
        for (int m = 0; m < M; ++m) {
            s.xs.push_back(static_cast<double>(m) / M);
            s.ys.push_back({static_cast<double>(m)});
            if (m < M - 1) {
                s.xs.push_back((m + 1.0) / M - 1e-3 / M);
                s.ys.push_back({static_cast<double>(m)});
            }
        }
        s.xs.push_back(1.0);
        s.ys.push_back({M - 1.0});
        REQUIRE(s.xs.size() == static_cast<std::size_t>(2 * M));
        auto net = linear_interpolator(s, 4 * W, L);
        // values up to M-1: tolerance scales with magnitude
        for (std::size_t i = 0; i < s.xs.size(); ++i)
            CHECK(std::abs(eval1(net, s.xs[i]) - s.ys[i][0]) <= 1e-9 * std::max(1.0, s.ys[i][0]));
    }
}

TEST_CASE("linear_interpolator preserves monotonicity") {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 20; ++t) {
        auto s = random_knots(rng, 40, 1);
        double y = 0;
        for (auto& v : s.ys) v[0] = y += std::uniform_real_distribution<double>(0, 1)(rng);
        auto net = linear_interpolator(s, 6, 8);
        double prev = -1e300;
        for (int k = 0; k <= 4000; ++k) {
            double x = s.xs.front() - 0.5 + (s.xs.back() - s.xs.front() + 1.0) * k / 4000.0;
            double v = eval1(net, x);
            CHECK(v >= prev - 1e-9);
            prev = v;
        }
    }
}

TEST_CASE("pwl_path_net") {
    KnotSamples p;
    p.xs = {0, 0.5, 1};
    p.ys = {{0, 0}, {1, 1}, {2, 0}};
    auto n = pwl_path_net(p, 15, 2);
    auto y = eval(n, Vec{0.25});
    CHECK(std::abs(y[0] - 0.5) <= 1e-9);
    CHECK(std::abs(y[1] - 0.5) <= 1e-9);
    CHECK(n.within_budget());

    KnotSamples c;
    c.xs = {0, 1};
    c.ys = {{3, -1}, {3, -1}};
    auto cn = pwl_path_net(c, 15, 2);
    CHECK(cn.depth() == 0);
    CHECK(eval(cn, Vec{0.7}) == Vec{3, -1});

    std::mt19937_64 rng(13);
    auto r = random_knots(rng, 52, 1);
    auto rn = pwl_path_net(r, 15, 8);
    CHECK(grid_error(rn, r) <= 1e-9);
    CHECK(rn.width() <= 15);
    CHECK(rn.depth() <= 8);

    for (int d : {1, 2, 3}) {
        for (int W : {7 * d + 1, 7 * d + 9, 12 * d + 1}) {
            for (int L : {2, 3, 6}) {
                long long cap = static_cast<long long>(W - d - 1) * ((W - d - 1) / (6 * d)) * (L / 2);
                auto s = random_knots(rng, static_cast<int>(cap) + 2, d);
                auto net = pwl_path_net(s, W, L);
                CHECK(net.width() <= W);
                CHECK(net.depth() <= L);
                CHECK(grid_error(net, s) <= 1e-9);
                CHECK_THROWS_AS(pwl_path_net(random_knots(rng, static_cast<int>(cap) + 3, d), W, L), BudgetError);
            }
        }
    }
    CHECK_THROWS_AS(pwl_path_net(p, 14, 2), BudgetError);
}

TEST_CASE("discretizer") {
    CHECK(discretizer_K(6, 2, 2) == 12);
    CHECK(discretizer_K(6, 2, 1) == 144);
    CHECK(discretizer_K(8, 2, 3) == 6);
    for (int d : {1, 2, 3}) {
        for (int W : {6, 8}) {
            const int L = 2;
            const int K = discretizer_K(W, L, d);
            const double delta = 1.0 / (3.0 * K);
            auto n = discretizer(W, L, d, delta);
            CHECK(n.width() <= 4 * W + 3);
            CHECK(n.depth() <= 4 * L);
            CHECK(*n.meta.claimed_lipschitz == doctest::Approx(2.0 * L / (double(K) * K * delta * delta)));
            CHECK(std::abs(eval1(n, 0.0)) <= 1e-9);
            double prev = -1;
            for (int k = 0; k < K; ++k) {
                double hi = (k + 1.0) / K - (k < K - 1 ? delta : 0.0);
                for (int j = 0; j <= 8; ++j) {
                    double x = k / double(K) + (hi - k / double(K)) * j / 8.0;
                    double v = eval1(n, x);
                    CHECK(std::abs(v - double(k) / K) <= 1e-9);
                    CHECK(std::abs(eval1(n, v) - v) <= 1e-9);
                }
            }
            // the two-stage d=1 net dips inside coarse transitions, so ordering is
            // only asserted for the single-stage nets
            for (int j = 0; j <= 20000; ++j) {
                double v = eval1(n, -0.1 + 1.2 * j / 20000.0);
                if (d > 1) CHECK(v >= prev - 1e-12);
                CHECK(v >= -1e-12);
                CHECK(v <= 1 + 1e-12);
                prev = v;
            }
        }
    }
    CHECK_THROWS_AS(discretizer(6, 2, 2, 1.0), BudgetError);
    CHECK_THROWS_AS(discretizer(6, 2, 2, 0.0), BudgetError);
}
