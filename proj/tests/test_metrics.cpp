#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "hgan/holder.hpp"
#include "hgan/metrics.hpp"
#include "hgan/poly.hpp"

using namespace hgan;

namespace {

DiscreteDistribution dd(std::vector<Vec> atoms, Vec w) {
    DiscreteDistribution g;
    g.atoms = std::move(atoms);
    g.weights = std::move(w);
    return g;
}

DiscreteDistribution random_dist(std::mt19937_64& rng, int n, int d, bool uniform = false) {
    std::uniform_real_distribution<double> u(0, 1);
    DiscreteDistribution g;
    double t = 0;
    for (int i = 0; i < n; ++i) {
        Vec a(d);
        for (auto& v : a) v = u(rng);
        g.atoms.push_back(a);
        g.weights.push_back(uniform ? 1.0 : 0.1 + u(rng));
        t += g.weights.back();
    }
    for (auto& w : g.weights) w /= t;
    return g;
}

// brute force over permutations: optimal for equal uniform weights
double assignment_oracle(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    std::vector<int> p(a.size());
    std::iota(p.begin(), p.end(), 0);
    double best = INFINITY;
    do {
        double c = 0;
        for (int i = 0; i < a.size(); ++i) c += euclidean(a.atoms[i], b.atoms[p[i]]);
        best = std::min(best, c / a.size());
    } while (std::next_permutation(p.begin(), p.end()));
    return best;
}

// enumerate all spanning trees of the bipartite graph; each gives one basic
// solution, and the optimum is the cheapest feasible one
double vertex_oracle(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    const int na = a.size(), nb = b.size(), E = na * nb, k = na + nb - 1;
    double best = INFINITY;
    std::vector<int> pick(E, 0);
    std::fill(pick.begin(), pick.begin() + k, 1);
    std::sort(pick.begin(), pick.end());
    do {
        std::vector<int> edges;
        for (int e = 0; e < E; ++e)
            if (pick[e]) edges.push_back(e);
        std::vector<int> uf(na + nb);
        std::iota(uf.begin(), uf.end(), 0);
        std::function<int(int)> find = [&](int x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
        bool tree = true;
        for (int e : edges) {
            int r1 = find(e / nb), r2 = find(na + e % nb);
            if (r1 == r2) {
                tree = false;
                break;
            }
            uf[r1] = r2;
        }
        if (!tree) continue;
        // peel leaves to get the unique flow on the tree
        Vec rem(na + nb);
        for (int i = 0; i < na; ++i) rem[i] = a.weights[i];
        for (int j = 0; j < nb; ++j) rem[na + j] = b.weights[j];
        std::vector<int> alive(edges.size(), 1), deg(na + nb, 0);
        for (int e : edges) {
            ++deg[e / nb];
            ++deg[na + e % nb];
        }
        double cost = 0;
        bool feasible = true;
        for (std::size_t round = 0; round < edges.size(); ++round) {
            for (std::size_t t = 0; t < edges.size(); ++t) {
                if (!alive[t]) continue;
                int i = edges[t] / nb, j = na + edges[t] % nb;
                int leaf = deg[i] == 1 ? i : deg[j] == 1 ? j : -1;
                if (leaf < 0) continue;
                int other = leaf == i ? j : i;
                double f = rem[leaf];
                if (f < -1e-12) feasible = false;
                cost += f * euclidean(a.atoms[i], b.atoms[j - na]);
                rem[other] -= f;
                rem[leaf] = 0;
                alive[t] = 0;
                --deg[i];
                --deg[j];
                break;
            }
        }
        if (feasible) best = std::min(best, cost);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

ReluNet scale_net(double c) { return affine_net(1, {{c}}, {0.0}); }

} // namespace

TEST_CASE("w1_1d_exact") {
    auto d0 = dd({{0.0}}, {1.0}), d1 = dd({{1.0}}, {1.0});
    CHECK(w1_1d_exact(d0, d1) == doctest::Approx(1.0));
    auto a = dd({{0.0}, {1.0}}, {0.5, 0.5}), b = dd({{0.0}, {2.0}}, {0.5, 0.5});
    CHECK(w1_1d_exact(a, b) == doctest::Approx(0.5));
    CHECK(w1_1d_exact(a, a) == 0.0);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        auto x = random_dist(rng, 5, 1), y = random_dist(rng, 7, 1);
        CHECK(w1_1d_exact(x, y) == doctest::Approx(w1_1d_exact(y, x)).epsilon(1e-12));
        CHECK(std::abs(w1_1d_exact(x, y) - w1_discrete_exact(x, y).first) <= 1e-9);
    }
    CHECK_THROWS(w1_1d_exact(dd({{0.0, 1.0}}, {1.0}), d0));
}

TEST_CASE("w1_discrete_exact small cases") {
    auto a = dd({{0.0, 0.0}}, {1.0}), b = dd({{3.0, 4.0}}, {1.0});
    CHECK(w1_discrete_exact(a, b).first == doctest::Approx(5.0));
    std::mt19937_64 rng(2);
    auto x = random_dist(rng, 10, 3);
    CHECK(std::abs(w1_discrete_exact(x, x).first) <= 1e-12);
}

TEST_CASE("w1_discrete_exact against brute-force oracles") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        auto a = random_dist(rng, 6, 2, true), b = random_dist(rng, 6, 2, true);
        auto [v, plan] = w1_discrete_exact(a, b);
        CHECK(std::abs(v - assignment_oracle(a, b)) <= 1e-9);
        CHECK(plan.check(a.weights, b.weights));
    }
    for (int t = 0; t < 20; ++t) {
        auto a = random_dist(rng, 3, 2), b = random_dist(rng, 4, 2);
        CHECK(std::abs(w1_discrete_exact(a, b).first - vertex_oracle(a, b)) <= 1e-9);
    }
}

TEST_CASE("w1_discrete_exact optimality certificate on 6x6 general weights") {
    // a feasible plan with cost equal to a feasible dual value is optimal
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        auto a = random_dist(rng, 6, 2), b = random_dist(rng, 6, 2);
        Vec w(a.weights.size() + b.weights.size());
        std::vector<TransportArc> arcs;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) arcs.push_back({i, j, euclidean(a.atoms[i], b.atoms[j])});
        auto sol = solve_transport(a.weights, b.weights, arcs);
        double dual = 0;
        for (int i = 0; i < 6; ++i) dual += a.weights[i] * sol.u[i] + b.weights[i] * sol.v[i];
        for (const auto& e : arcs) CHECK(sol.u[e.i] + sol.v[e.j] <= e.cost + 1e-12);
        CHECK(std::abs(dual - sol.cost) <= 1e-12);
        CHECK(std::abs(sol.cost - w1_discrete_exact(a, b).first) <= 1e-12);
    }
}

TEST_CASE("w1 metric properties") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 40; ++t) {
        auto a = random_dist(rng, 8, 3), b = random_dist(rng, 9, 3), c = random_dist(rng, 7, 3);
        double ab = w1_discrete_exact(a, b).first, ba = w1_discrete_exact(b, a).first;
        double bc = w1_discrete_exact(b, c).first, ac = w1_discrete_exact(a, c).first;
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ac <= ab + bc + 1e-7);
    }
}

TEST_CASE("w1_discrete_exact guard") {
    std::mt19937_64 rng(6);
    auto a = random_dist(rng, 501, 1), b = random_dist(rng, 500, 1);
    CHECK_THROWS_AS(w1_discrete_exact(a, b), std::invalid_argument);
    CHECK_THROWS(w1_discrete_exact(dd({{0.0}}, {1.0}), dd({{0.0, 0.0}}, {1.0})));
}

TEST_CASE("w1_certified matches the dense solver") {
    std::mt19937_64 rng(7);
    for (int k : {1, 2, 8}) {
        auto a = random_dist(rng, 120, 2), b = random_dist(rng, 150, 2);
        auto c = w1_certified(a, b, k);
        CHECK(std::abs(c.value - w1_discrete_exact(a, b).first) <= 1e-9);
        CHECK(c.plan.check(a.weights, b.weights));
        if (k == 1) CHECK(c.rounds >= 2);
    }
    auto a = random_dist(rng, 3000, 1, true), b = random_dist(rng, 2500, 1);
    CHECK(std::abs(w1_certified(a, b).value - w1_1d_exact(a, b)) <= 1e-9);
}

TEST_CASE("transport plan csv") {
    auto a = dd({{0.0}, {1.0}}, {0.5, 0.5}), b = dd({{0.5}}, {1.0});
    auto plan = w1_discrete_exact(a, b).second;
    auto path = (std::filesystem::temp_directory_path() / "hgan_plan_test.csv").string();
    plan.write_csv(path);
    std::ifstream f(path);
    std::string header, row;
    std::getline(f, header);
    CHECK(header == "source_idx,target_idx,mass");
    int rows = 0;
    while (std::getline(f, row)) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
}

TEST_CASE("w1_pushforward") {
    auto g = dd({{0.0, 0.0}, {1.0, 0.0}}, {0.5, 0.5});
    SampleSet s;
    for (int i = 0; i < 100; ++i) s.points.push_back(i % 2 ? Vec{1.0, 1e-12} : Vec{0.0, 0.0});
    auto r = w1_pushforward(g, s);
    CHECK(r.value == doctest::Approx(0.5e-12).epsilon(1e-6));
    CHECK(r.snapped == 1.0);
    CHECK(r.support == 2);
    s.points[0] = {0.5, 0.0};
    r = w1_pushforward(g, s);
    CHECK(r.value >= 0.5 / 100 - 1e-15);
}

TEST_CASE("lipschitz_lower_sampled") {
    Box box{{-1.0}, {1.0}};
    double id = lipschitz_lower_sampled(identity_net(1), box, 2000, 1);
    CHECK(id >= 1 - 1e-6);
    CHECK(id <= 1 + 1e-9);
    CHECK(lipschitz_lower_sampled(constant_net(1, {3.0}), box, 2000, 1) == 0.0);
    double two = lipschitz_lower_sampled(scale_net(2.0), box, 2000, 1);
    CHECK(two >= 2 - 1e-6);
    CHECK(two <= 2.0);
    // sampled slopes never exceed the spectral-norm product
    std::vector<ReluNet> nets{product_net(6, 2), square_net(4, 2), mid_net(), monomial_net({{1, 1}}, 6, 2)};
    for (const auto& n : nets) {
        Box b{Vec(n.input_dim, -1.0), Vec(n.input_dim, 1.0)};
        if (n.meta.tag == "square") b = Box{{0.0}, {1.0}};
        CHECK(lipschitz_lower_sampled(n, b, 5000, 2) <= lipschitz_upper(n) * (1 + 1e-9));
    }
    CHECK_THROWS(lipschitz_lower_sampled(identity_net(1), Box{{1.0}, {1.0}}, 10, 1));
    CHECK_THROWS(lipschitz_lower_sampled(identity_net(1), box, 0, 1));
}

TEST_CASE("ipm_finite_family") {
    auto mu = uniform_cube_samples(500, 1, 1), ga = uniform_cube_samples(400, 1, 2);
    std::vector<ReluNet> fam{identity_net(1)};
    CHECK(ipm_finite_family(mu, mu, fam) == doctest::Approx(0.0).epsilon(1e-15));
    double m1 = 0, m2 = 0;
    for (auto& p : mu.points) m1 += p[0];
    for (auto& p : ga.points) m2 += p[0];
    CHECK(ipm_finite_family(mu, ga, fam) == doctest::Approx(m1 / 500 - m2 / 400).epsilon(1e-12));
    // nested families and symmetric families
    std::vector<ReluNet> small{identity_net(1), scale_net(-1.0)};
    std::vector<ReluNet> big = small;
    big.push_back(square_net(4, 2));
    big.push_back(then_affine(square_net(4, 2), {{-1.0}}, {0.0}));
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        auto a = uniform_cube_samples(200, 1, rng()), b = uniform_cube_samples(200, 1, rng()),
             c = uniform_cube_samples(200, 1, rng());
        CHECK(ipm_finite_family(a, b, small) <= ipm_finite_family(a, b, big) + 1e-15);
        CHECK(ipm_finite_family(a, b, big) >= 0.0);
        CHECK(ipm_finite_family(a, c, big) <= ipm_finite_family(a, b, big) + ipm_finite_family(b, c, big) + 1e-12);
    }
    CHECK_THROWS(ipm_finite_family(mu, ga, {}));
    CHECK_THROWS(ipm_finite_family(mu, uniform_cube_samples(10, 2, 1), fam));
}

TEST_CASE("box_counting_dim") {
    Vec eps{1.0 / 2, 1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    SampleSet one;
    one.points.assign(100, Vec{0.3, 0.3});
    auto b0 = box_counting_dim(one, eps);
    CHECK(b0.dimension == 0.0);
    CHECK(b0.degenerate);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    SampleSet seg, sq;
    for (int i = 0; i < 10000; ++i) {
        double t = u(rng);
        seg.points.push_back({0.1 + 0.8 * t, 0.2 + 0.5 * t, 0.9 - 0.7 * t});
        sq.points.push_back({u(rng), u(rng)});
    }
    CHECK(std::abs(box_counting_dim(seg, eps).dimension - 1.0) <= 0.2);
    CHECK(std::abs(box_counting_dim(sq, eps).dimension - 2.0) <= 0.2);
    CHECK_THROWS(box_counting_dim(sq, {0.5}));
    CHECK_THROWS(box_counting_dim(sq, {0.25, 0.5}));
}

TEST_CASE("entropy_integral_bound regimes") {
    auto slope = [](double eta) {
        std::vector<std::pair<double, double>> pts;
        for (double n = 1e2; n <= 1e6 * 1.01; n *= 10) pts.emplace_back(n, entropy_integral_bound(200.0, (long long)n, eta, 1.0));
        return rate_fit(pts);
    };
    CHECK(std::abs(slope(0.5).slope + 0.5) <= 0.02);
    CHECK(std::abs(slope(2.0).slope + 0.25) <= 0.02);
    // eta = 1: n^(-1/2) log n, so sqrt(n) * bound grows and bound / log n decays at rate 1/2
    std::vector<std::pair<double, double>> scaled;
    double prev = 0;
    for (double n = 1e2; n <= 1e6 * 1.01; n *= 10) {
        double v = entropy_integral_bound(2.0, (long long)n, 1.0, 1.0);
        CHECK(v * std::sqrt(n) > prev);
        prev = v * std::sqrt(n);
        scaled.emplace_back(n, v / std::log(n));
    }
    CHECK(std::abs(rate_fit(scaled).slope + 0.5) <= 0.05);
    // the numeric infimum is no worse than the plug-in choice
    for (long long n : {100LL, 10000LL, 1000000LL}) {
        double eta = 2.0, delta = std::pow(double(n), -1 / (2 * eta));
        double plug = 8 * (delta + 3 / std::sqrt(double(n)) * (std::pow(100.0, 1 - eta) - std::pow(delta, 1 - eta)) / (1 - eta));
        CHECK(entropy_integral_bound(200.0, n, eta, 1.0) <= plug * (1 + 1e-12));
    }
    CHECK_THROWS(entropy_integral_bound(0.0, 10, 1.0, 1.0));
}

TEST_CASE("pdim_bound") {
    CHECK(pdim_bound(1, 1) == 0.0);
    for (double W : {2.0, 5.0, 10.0, 40.0}) {
        double r = pdim_bound(2 * W, 3) / pdim_bound(W, 3);
        double U = W * W * 3;
        CHECK(r == doctest::Approx(4.0 * std::log(4 * U) / std::log(U)).epsilon(1e-12));
        CHECK(pdim_bound(W + 1, 3) > pdim_bound(W, 3));
        CHECK(pdim_bound(W, 4) > pdim_bound(W, 3));
    }
}

TEST_CASE("rate_fit") {
    auto f = rate_fit({{8, 0.5}, {64, 0.25}, {512, 0.125}});
    CHECK(std::abs(f.slope + 1.0 / 3) <= 1e-9);
    CHECK(f.r_squared == doctest::Approx(1.0));
    std::vector<std::pair<double, double>> p;
    for (double n : {10.0, 100.0, 1000.0}) p.emplace_back(n, 2 / std::sqrt(n));
    f = rate_fit(p);
    CHECK(f.slope == doctest::Approx(-0.5));
    CHECK(f.intercept == doctest::Approx(std::log(2.0)));
    for (int seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-0.05, 0.05);
        std::vector<std::pair<double, double>> q;
        for (double n = 128; n <= 8192; n *= 2) q.emplace_back(n, std::pow(n, -0.4) * (1 + u(rng)));
        CHECK(std::abs(rate_fit(q).slope + 0.4) <= 0.05);
    }
    CHECK_THROWS(rate_fit({{1, 1}, {2, 1}}));
    CHECK_THROWS(rate_fit({{1, 1}, {2, 0}, {3, 1}}));
}
