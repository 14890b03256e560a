#include "hgan/poly.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace hgan {

int MultiIndex::order() const { return std::accumulate(alpha.begin(), alpha.end(), 0); }

int MultiIndex::max_entry() const { return alpha.empty() ? 0 : *std::max_element(alpha.begin(), alpha.end()); }

double MultiIndex::factorial() const {
    double f = 1.0;
    for (int a : alpha)
        for (int i = 2; i <= a; ++i) f *= i;
    return f;
}

double MultiIndex::pow(std::span<const double> x) const {
    double p = 1.0;
    for (std::size_t j = 0; j < alpha.size(); ++j)
        for (int i = 0; i < alpha[j]; ++i) p *= x[j];
    return p;
}

std::vector<MultiIndex> multi_indices(int d, int s) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= s; ++k) {
        std::vector<int> a(d, 0);
        // enumerate compositions of k into d parts, lexicographically descending in a[0]
        std::function<void(int, int)> rec = [&](int j, int left) {
            if (j == d - 1) {
                a[j] = left;
                out.push_back({a});
                return;
            }
            for (int v = left; v >= 0; --v) {
                a[j] = v;
                rec(j + 1, left - v);
            }
        };
        rec(0, k);
    }
    return out;
}

int square_level(int W) {
    if (W < 1) throw BudgetError("square_net: need W >= 1");
    for (int n = 1; n <= 40; ++n) {
        long long lo = static_cast<long long>(n - 1) * (1LL << (n - 1)) + 1, hi = static_cast<long long>(n) << n;
        if (lo <= W && W <= hi) return n;
    }
    throw BudgetError("square_net: no level n <= 40 for W = " + std::to_string(W));
}

namespace {

void square_guard(int W, int L) {
    if (L < 1) throw BudgetError("square_net: need L >= 1");
    const int n = square_level(W);
    if (n * L > 40) {
        std::ostringstream m;
        m << "square_net: n*L = " << n * L << " > 40 (n = " << n << ", W = " << W << ", L = " << L << ")";
        throw BudgetError(m.str());
    }
}

} // namespace

ReluNet square_net(int W, int L) {
    square_guard(W, L);
    const int n = square_level(W);
    const int U = 1 << n;
    // unit i of each layer is relu(y - i/U); the sawtooth T_j(y) on [0,1] equals
    // 2^j relu(y) + sum_{m=1}^{2^j-1} (-1)^m 2^(j+1) relu(y - m/2^j)
    auto sawtooth = [&](int j) {
        Vec c(U, 0.0);
        c[0] = std::ldexp(1.0, j);
        const int step = U >> j;
        for (int m = 1; m < (1 << j); ++m) c[m * step] += (m % 2 ? -1.0 : 1.0) * std::ldexp(1.0, j + 1);
        return c;
    };
    std::vector<Vec> T(n + 1);
    for (int j = 1; j <= n; ++j) T[j] = sawtooth(j);

    ReluNet net;
    net.input_dim = 1;
    // y and z of the previous layer as rows over its units; layer 1 reads raw x
    std::vector<std::pair<int, double>> y_row{{0, 1.0}}, z_row{{0, 1.0}};
    double y_b = 0.0, z_b = 0.0;
    int cols = 1;
    for (int l = 1; l <= L; ++l) {
        const bool carry = l > 1;
        AffineLayer h(U + (carry ? 1 : 0), cols);
        for (int i = 0; i < U; ++i) {
            auto e = y_row;
            h.add_row(std::move(e), y_b - static_cast<double>(i) / U);
        }
        if (carry) h.add_row(z_row, z_b);
        net.layers.push_back(std::move(h));
        // z_l = z_{l-1} - sum_j T_j(y) / 4^((l-1)n + j), y_l = T_n(y)
        std::vector<std::pair<int, double>> nz;
        if (carry)
            nz.emplace_back(U, 1.0);
        else
            nz.emplace_back(0, 1.0);  // relu(x - 0) = x on [0,1]
        for (int j = 1; j <= n; ++j) {
            const double w = std::ldexp(1.0, -2 * ((l - 1) * n + j));
            for (int i = 0; i < U; ++i)
                if (T[j][i] != 0.0) nz.emplace_back(i, -w * T[j][i]);
        }
        std::vector<std::pair<int, double>> ny;
        for (int i = 0; i < U; ++i)
            if (T[n][i] != 0.0) ny.emplace_back(i, T[n][i]);
        z_row = std::move(nz);
        y_row = std::move(ny);
        z_b = y_b = 0.0;
        cols = net.layers.back().rows;
    }
    AffineLayer out(1, cols);
    out.add_row(z_row, 0.0);
    net.layers.push_back(std::move(out));
    net.meta = {"square_net", 3 * W, L, std::nullopt};
    return net;
}

ReluNet product_net(int W, int L) {
    square_guard(W, L);
    ReluNet sq = square_net(W, L);
    // 8(psi((x+y+2)/4) - psi((x+1)/4) - psi((y+1)/4)) - relu(x+y+2) + 1
    ReluNet a = compose(sq, affine_net(2, {{0.25, 0.25}}, {0.5}));
    ReluNet b = compose(sq, affine_net(2, {{0.25, 0.0}}, {0.25}));
    ReluNet c = compose(sq, affine_net(2, {{0.0, 0.25}}, {0.25}));
    ReluNet s = affine_net(2, {{1.0, 1.0}}, {2.0});
    ReluNet p = parallel({a, b, c, s}, {{}, {}, {}, {0.0}});
    p = then_affine(p, {{8.0, -8.0, -8.0, -1.0}}, {1.0});
    p.meta = {"product_net", 9 * W + 1, L, 7.0 * std::sqrt(2.0)};
    return p;
}

ReluNet monomial_net(const MultiIndex& alpha, int W, int L) {
    const int d = alpha.dim();
    if (d < 1) throw std::invalid_argument("monomial_net: empty multi-index");
    for (int a : alpha.alpha)
        if (a < 0) throw std::invalid_argument("monomial_net: negative exponent");
    const int k = alpha.order();
    if (k == 0) {
        auto n = constant_net(d, {1.0});
        n.meta = {"monomial_net", 0, 0, 0.0};
        return n;
    }
    if (k > 6) throw BudgetError("monomial_net: need |alpha| <= 6, got " + std::to_string(k));
    // z repeats coordinate j exactly alpha_j times
    std::vector<int> z;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < alpha.alpha[j]; ++i) z.push_back(j);
    auto select = [&](const std::vector<int>& idx) {
        std::vector<std::vector<double>> a(idx.size(), Vec(d, 0.0));
        for (std::size_t r = 0; r < idx.size(); ++r) a[r][idx[r]] = 1.0;
        return affine_net(d, a, Vec(idx.size(), 0.0));
    };
    const double lip = std::pow(7.0, k - 1) * alpha.max_entry() * std::sqrt(static_cast<double>(d));
    if (k == 1) {
        auto n = select(z);
        n.meta = {"monomial_net", 0, 0, 1.0};
        return n;
    }
    square_guard(W, L);
    ReluNet psi2 = clip_to_box(product_net(W, L), {-1.0}, {1.0});
    // stage i consumes (w, z_i, ..., z_k) and returns (psi2(w, z_i), z_{i+1}, ..., z_k)
    ReluNet net = select(z);
    for (int i = 1; i < k; ++i) {
        const int m = k - i + 1;  // current input width
        std::vector<ReluNet> parts;
        std::vector<std::vector<double>> lower;
        std::vector<std::vector<double>> a(2, Vec(m, 0.0));
        a[0][0] = 1.0;
        a[1][1] = 1.0;
        parts.push_back(compose(psi2, affine_net(m, a, {0, 0})));
        lower.push_back({});
        for (int r = 2; r < m; ++r) {
            std::vector<std::vector<double>> e(1, Vec(m, 0.0));
            e[0][r] = 1.0;
            parts.push_back(affine_net(m, e, {0.0}));
            lower.push_back({-1.0});
        }
        net = compose(parts.size() == 1 ? parts[0] : parallel(parts, lower), net);
    }
    net.meta = {"monomial_net", 9 * W + k - 1, (k - 1) * (L + 1), lip};
    return net;
}

} // namespace hgan
