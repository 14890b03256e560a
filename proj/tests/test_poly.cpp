#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hgan/poly.hpp"

using namespace hgan;

TEST_CASE("square_level") {
    CHECK(square_level(1) == 1);
    CHECK(square_level(2) == 1);
    CHECK(square_level(3) == 2);
    CHECK(square_level(8) == 2);
    CHECK(square_level(9) == 3);
    CHECK(square_level(24) == 3);
    CHECK(square_level(25) == 4);
    // the level brackets are disjoint and cover every W
    for (int W = 1; W < 5000; ++W) {
        int n = square_level(W);
        CHECK((n - 1) * (1LL << (n - 1)) + 1 <= W);
        CHECK(W <= n * (1LL << n));
    }
}

TEST_CASE("square_net") {
    for (int W : {1, 2, 4, 6, 8, 12}) {
        for (int L : {1, 2, 3}) {
            auto n = square_net(W, L);
            CHECK(n.width() <= 3 * W);
            CHECK(n.depth() <= L);
            const int nL = square_level(W) * L;
            CHECK(std::abs(eval1(n, 0.0)) <= 1e-9);
            CHECK(std::abs(eval1(n, 1.0) - 1.0) <= 1e-9);
            const long long K = 1LL << nL;
            for (long long j = 0; j <= K; ++j) {
                double x = std::ldexp(double(j), -nL);
                CHECK(std::abs(eval1(n, x) - x * x) <= 1e-9);
            }
            double worst = 0;
            for (int i = 0; i <= 10000; ++i) {
                double x = i / 10000.0;
                worst = std::max(worst, std::abs(eval1(n, x) - x * x));
            }
            CHECK(worst <= std::pow(double(W), -L) / 4);
            // the interpolation error is attained at cell midpoints
            double mid = 0;
            for (long long j = 0; j < std::min(K, 4096LL); ++j) {
                double x = (j + 0.5) / double(K);
                mid = std::max(mid, std::abs(eval1(n, x) - x * x));
            }
            CHECK(mid >= std::ldexp(1.0, -2 * (nL + 1)) * (1 - 1e-3));
        }
    }
    CHECK_THROWS_AS(square_net(8, 21), BudgetError);
}

TEST_CASE("product_net") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int W : {6, 8}) {
        for (int L : {1, 2}) {
            auto p = product_net(W, L);
            CHECK(p.width() <= 9 * W + 1);
            CHECK(p.depth() <= L);
            const double bound = 6 * std::pow(double(W), -L);
            double worst = 0;
            for (int i = 0; i <= 100; ++i)
                for (int j = 0; j <= 100; ++j) {
                    double x = -1 + i / 50.0, y = -1 + j / 50.0;
                    worst = std::max(worst, std::abs(eval(p, Vec{x, y})[0] - x * y));
                    CHECK(std::abs(eval(p, Vec{x, y})[0] - eval(p, Vec{y, x})[0]) <= 1e-9);
                }
            CHECK(worst <= bound);
            for (int i = 0; i <= 100; ++i) CHECK(std::abs(eval(p, Vec{-1 + i / 50.0, 0.0})[0]) <= bound);
            for (int t = 0; t < 20000; ++t) {
                double x = u(rng), y = u(rng), x2 = u(rng), y2 = u(rng);
                if (t % 2) {
                    x2 = std::clamp(x + 1e-3 * u(rng), -1.0, 1.0);
                    y2 = std::clamp(y + 1e-3 * u(rng), -1.0, 1.0);
                }
                double d = std::abs(eval(p, Vec{x, y})[0] - eval(p, Vec{x2, y2})[0]);
                CHECK(d <= 7 * (std::abs(x - x2) + std::abs(y - y2)) + 1e-12);
            }
        }
    }
    auto p = product_net(6, 2);
    CHECK(std::abs(eval(p, Vec{0.5, 0.5})[0] - 0.25) <= 1.0 / 6);
}

TEST_CASE("multi_indices") {
    auto m = multi_indices(2, 2);
    REQUIRE(m.size() == 6);
    CHECK(m[0].alpha == std::vector<int>{0, 0});
    CHECK(m[1].alpha == std::vector<int>{1, 0});
    CHECK(m[2].alpha == std::vector<int>{0, 1});
    CHECK(m[3].alpha == std::vector<int>{2, 0});
    CHECK(multi_indices(3, 2).size() == 10);
    CHECK(MultiIndex{{2, 1, 3}}.factorial() == 12);
    CHECK(MultiIndex{{2, 1}}.pow(Vec{3.0, 5.0}) == 45.0);
}

TEST_CASE("monomial_net") {
    auto proj = monomial_net({{1, 0}}, 6, 2);
    CHECK(proj.depth() == 0);
    CHECK(eval(proj, Vec{0.3, -0.7})[0] == 0.3);
    auto one = monomial_net({{0, 0}}, 6, 2);
    CHECK(eval(one, Vec{0.3, -0.7})[0] == 1.0);
    CHECK_THROWS_AS(monomial_net({{4, 3}}, 6, 2), BudgetError);

    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1, 1);
    const int W = 6, L = 2;
    for (MultiIndex a : {MultiIndex{{1, 1}}, MultiIndex{{2, 1}}, MultiIndex{{0, 3}}, MultiIndex{{1, 1, 1}},
                         MultiIndex{{2, 0, 2}}}) {
        const int k = a.order(), d = a.dim();
        auto n = monomial_net(a, W, L);
        CHECK(n.width() <= 9 * W + k - 1);
        CHECK(n.depth() <= (k - 1) * (L + 1));
        const double bound = 6.0 * (k - 1) * std::pow(double(W), -L);
        double worst = 0;
        if (d == 2) {
            for (int i = 0; i <= 100; ++i)
                for (int j = 0; j <= 100; ++j) {
                    Vec x{-1 + i / 50.0, -1 + j / 50.0};
                    worst = std::max(worst, std::abs(eval(n, x)[0] - a.pow(x)));
                }
        } else {
            for (int t = 0; t < 20000; ++t) {
                Vec x{u(rng), u(rng), u(rng)};
                worst = std::max(worst, std::abs(eval(n, x)[0] - a.pow(x)));
            }
        }
        CHECK(worst <= bound);
        // corners and far points stay within [-1, 1]
        for (int c = 0; c < (1 << d); ++c) {
            Vec x(d);
            for (int j = 0; j < d; ++j) x[j] = (c >> j) & 1 ? 1.0 : -1.0;
            double y = eval(n, x)[0];
            CHECK(std::abs(y) <= 1 + 1e-12);
        }
        const double lip = std::pow(7.0, k - 1) * a.max_entry();
        for (int t = 0; t < 5000; ++t) {
            Vec x(d), y(d);
            double l1 = 0;
            for (int j = 0; j < d; ++j) {
                x[j] = u(rng);
                y[j] = std::clamp(x[j] + (t % 2 ? 1e-3 : 1.0) * u(rng), -1.0, 1.0);
                l1 += std::abs(x[j] - y[j]);
            }
            CHECK(std::abs(eval(n, x)[0] - eval(n, y)[0]) <= lip * l1 + 1e-12);
        }
    }
}
