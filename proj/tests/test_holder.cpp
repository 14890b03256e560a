#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "hgan/bits.hpp"
#include "hgan/holder.hpp"
#include "hgan/interp.hpp"

using namespace hgan;

namespace {

// sup error on a uniform grid with n points per axis, batch evaluated
double grid_sup(const ReluNet& n, const HolderTarget& h, int pts, double* sup_norm = nullptr) {
    const int d = h.d;
    long long total = 1;
    for (int j = 0; j < d; ++j) total *= pts;
    std::vector<double> x(total * d);
    for (long long i = 0; i < total; ++i) {
        long long t = i;
        for (int j = 0; j < d; ++j) {
            x[i * d + j] = static_cast<double>(t % pts) / (pts - 1);
            t /= pts;
        }
    }
    auto y = eval_batch(n, x);
    double worst = 0, sup = 0;
    for (long long i = 0; i < total; ++i) {
        worst = std::max(worst, std::abs(y[i] - h.f(std::span<const double>(&x[i * d], d))));
        sup = std::max(sup, std::abs(y[i]));
    }
    if (sup_norm) *sup_norm = sup;
    return worst;
}

} // namespace

TEST_CASE("holder_s splits beta") {
    CHECK(holder_s(0.5) == 0);
    CHECK(holder_s(1.0) == 0);
    CHECK(holder_s(1.5) == 1);
    CHECK(holder_s(2.0) == 1);
    CHECK(holder_s(3.0) == 2);
    CHECK_THROWS(holder_s(0.0));
    CHECK_THROWS(holder_s(-1.0));
}

TEST_CASE("builtin targets lie in the unit ball") {
    for (double beta : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        for (int d : {1, 2, 3}) {
            for (const auto& name : builtin_target_names()) {
                if (name == "sqrt_ridge" && beta > 0.5) {
                    CHECK_THROWS(builtin_target(name, beta, d));
                    continue;
                }
                auto h = builtin_target(name, beta, d);
                h.validate();
                double ratio = holder_spot_check(h, 3000, 7);
                INFO(name, " beta=", beta, " d=", d);
                CHECK(ratio <= 1.0 + 1e-9);
            }
        }
    }
    CHECK_THROWS(builtin_target("nope", 1.0, 1));
}

TEST_CASE("builtin derivative oracles agree with finite differences") {
    const double e = 1e-5;
    for (const char* name : {"linear_mean", "quadratic", "sinusoid", "bump"}) {
        auto h = builtin_target(name, 3.0, 2);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.1, 0.9);
        for (int t = 0; t < 20; ++t) {
            Vec x{u(rng), u(rng)};
            for (const auto& al : multi_indices(2, 1)) {
                if (al.order() != 1) continue;
                int j = al.alpha[0] ? 0 : 1;
                Vec xp = x, xm = x;
                xp[j] += e;
                xm[j] -= e;
                double fd = (h.f(xp) - h.f(xm)) / (2 * e);
                CHECK(std::abs(fd - h.deriv(al, x)) <= 1e-7);
                // second order through the first derivative oracle
                for (const auto& be : multi_indices(2, 2)) {
                    if (be.order() != 2 || be.alpha[j] == 0) continue;
                    MultiIndex rest = be;
                    rest.alpha[j] -= 1;
                    int k = rest.alpha[0] ? 0 : 1;
                    Vec yp = x, ym = x;
                    yp[j] += e;
                    ym[j] -= e;
                    (void)k;
                    double fd2 = (h.deriv(rest, yp) - h.deriv(rest, ym)) / (2 * e);
                    CHECK(std::abs(fd2 - h.deriv(be, x)) <= 1e-6);
                }
            }
        }
    }
}

TEST_CASE("budget") {
    auto b = HolderBudget::make(6, 2, 1.0, 1);
    CHECK(b.K == 144);
    CHECK(b.delta == doctest::Approx(1.0 / 432).epsilon(1e-14));
    CHECK(b.claimed_error == doctest::Approx(6.0 / 144).epsilon(1e-14));
    CHECK(b.claimed_width == 49LL * 3 * 6 * 3);
    CHECK(b.claimed_depth == 15LL * 2 * 1 + 2);
    CHECK(b.consistent());
    auto c = HolderBudget::make(8, 2, 1.0, 2);
    CHECK(c.K == 16);
    CHECK(c.claimed_error == doctest::Approx(0.75).epsilon(1e-14));
    auto e = HolderBudget::make(8, 2, 2.0, 2);
    CHECK(e.claimed_error == doctest::Approx(6.0 * 4 * 4 / 256).epsilon(1e-14));
    CHECK(e.delta == doctest::Approx(1.0 / 768).epsilon(1e-14));
    c.claimed_error *= 0.5;
    CHECK_FALSE(c.consistent());
    CHECK_THROWS_AS(holder_approximator(builtin_target("zero", 1.0, 2), c), std::invalid_argument);
}

TEST_CASE("mid_net") {
    auto m = mid_net();
    CHECK(m.width() <= 10);
    CHECK(m.depth() == 2);
    CHECK(eval(m, Vec{1, 2, 3})[0] == doctest::Approx(2));
    CHECK(eval(m, Vec{5, 5, -1})[0] == doctest::Approx(5));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 10000; ++t) {
        Vec x{u(rng), u(rng), u(rng)};
        if (t % 7 == 0) x[1] = x[0];
        Vec s = x;
        std::sort(s.begin(), s.end());
        CHECK(std::abs(eval(m, x)[0] - s[1]) <= 1e-12);
    }
}

TEST_CASE("approximator on the identity at the plateau examples") {
    auto h = builtin_target("linear_mean", 1.0, 1);
    auto b = HolderBudget::make(6, 2, 1.0, 1);
    auto n = holder_approximator(h, b);
    CHECK(n.width() <= b.claimed_width);
    CHECK(n.depth() <= b.claimed_depth);
    double sup = 0;
    double err = grid_sup(n, h, 20 * b.K + 1, &sup);
    CHECK(err <= 1.0 / 24);
    CHECK(sup <= 1.0 + 1e-12);
    // on the plateau set the output is the left cell endpoint, up to the coefficient fit
    const double fit = 2.0 / (12.0 * 12.0);
    for (int k = 0; k < b.K; k += 13) {
        double x = (k + 0.5) / b.K;
        CHECK(std::abs(eval1(n, x) - double(k) / b.K) <= fit);
    }
}

TEST_CASE("approximator on the zero target") {
    for (double beta : {0.5, 1.0, 2.0}) {
        auto h = builtin_target("zero", beta, 1);
        auto b = HolderBudget::make(6, 2, beta, 1);
        auto n = holder_approximator(h, b);
        // only the coefficient fit contributes
        CHECK(grid_sup(n, h, 2001) <= 2 * std::pow(12.0, -2.0 * (holder_s(beta) + 1)));
    }
}

TEST_CASE("approximator in one dimension, all built-in targets") {
    for (double beta : {0.5, 1.0, 2.0}) {
        auto b = HolderBudget::make(6, 2, beta, 1);
        for (const auto& name : builtin_target_names()) {
            if (name == "sqrt_ridge" && beta > 0.5) continue;
            auto h = builtin_target(name, beta, 1);
            auto n = holder_approximator(h, b);
            double sup = 0;
            double err = grid_sup(n, h, 5 * b.K + 1, &sup);
            INFO(name, " beta=", beta, " err=", err);
            CHECK(err <= b.claimed_error);
            CHECK(sup <= 1.0 + 1e-12);
            CHECK(n.width() <= b.claimed_width);
            CHECK(n.depth() <= b.claimed_depth);
        }
    }
}

TEST_CASE("approximator in two dimensions") {
    auto h = builtin_target("linear_mean", 1.0, 2);
    auto b = HolderBudget::make(6, 2, 1.0, 2);
    auto n = holder_approximator(h, b);
    double sup = 0;
    double err = grid_sup(n, h, 41, &sup);
    CHECK(err <= b.claimed_error);
    CHECK(sup <= 1.0 + 1e-12);
    CHECK(n.width() <= b.claimed_width);
    CHECK(n.depth() <= b.claimed_depth);
    // sampled slopes stay below the claimed constant
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    double lip = 0;
    for (int t = 0; t < 300; ++t) {
        Vec x{u(rng), u(rng)}, y{x[0] + 1e-4 * u(rng), x[1] - 1e-4 * u(rng)};
        double dist = std::hypot(x[0] - y[0], x[1] - y[1]);
        lip = std::max(lip, std::abs(eval(n, x)[0] - eval(n, y)[0]) / dist);
    }
    CHECK(lip <= *n.meta.claimed_lipschitz);
}

TEST_CASE("normalization factor scales the output") {
    auto h = builtin_target("sinusoid", 1.0, 1);
    auto b = HolderBudget::make(6, 2, 1.0, 1);
    auto n1 = holder_approximator(h, b);
    auto f = h;
    f.norm_factor = 3.0;
    auto g = f.f;
    f.f = [g](std::span<const double> x) { return 3.0 * g(x); };
    auto dv = f.deriv;
    f.deriv = [dv](const MultiIndex& a, std::span<const double> x) { return 3.0 * dv(a, x); };
    auto n3 = holder_approximator(f, b);
    for (double x = 0; x <= 1; x += 0.01) CHECK(std::abs(eval1(n3, x) - 3 * eval1(n1, x)) <= 1e-9);
    CHECK(grid_sup(n3, f, 1001) <= 3 * b.claimed_error);
}

TEST_CASE("budget guards") {
    auto h = builtin_target("zero", 1.0, 4);
    CHECK_THROWS_AS(holder_approximator(h, HolderBudget::make(6, 2, 1.0, 4)), BudgetError);
    CHECK_THROWS(builtin_target("quadratic", 3.5, 1));
    auto lin = builtin_target("linear_mean", 3.5, 1);
    CHECK_THROWS_AS(holder_approximator(lin, HolderBudget::make(6, 2, 3.5, 1)), BudgetError);
}

TEST_CASE("taylor_local_error") {
    auto lin = builtin_target("linear_mean", 2.0, 2);
    CHECK(taylor_local_error(lin, Vec{0.3, 0.9}, Vec{0.5, 0.5}) <= 1e-15);
    auto quad = builtin_target("quadratic", 2.0, 1);
    // order-1 expansion of x^2/2 at 0.5 misses (x - 0.5)^2 / 2
    CHECK(taylor_local_error(quad, Vec{0.7}, Vec{0.5}) == doctest::Approx(0.02).epsilon(1e-12));
    auto quad3 = builtin_target("quadratic", 3.0, 1);
    CHECK(taylor_local_error(quad3, Vec{0.7}, Vec{0.5}) <= 1e-15);
    // Taylor remainder bound for unit-ball members
    for (const auto& name : builtin_target_names()) {
        if (name == "sqrt_ridge") continue;
        auto h = builtin_target(name, 2.0, 2);
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0, 1);
        for (int t = 0; t < 200; ++t) {
            Vec x{u(rng), u(rng)}, y{u(rng), u(rng)};
            double dist = std::hypot(x[0] - y[0], x[1] - y[1]);
            // |h - T| <= d^{s/2} |x - x0|^beta / s! with s = 1
            CHECK(taylor_local_error(h, x, y) <= std::sqrt(2.0) * dist * dist + 1e-12);
        }
    }
}
