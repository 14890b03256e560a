#include "hgan/bits.hpp"

#include <cmath>
#include <sstream>

#include "hgan/interp.hpp"

namespace hgan {

int ceil_log2(long long v) {
    int k = 0;
    while ((1LL << k) < v) ++k;
    return k;
}

double BitString::value() const {
    double v = 0.0, w = 0.5;
    for (int b : bits) {
        v += b * w;
        w *= 0.5;
    }
    return v;
}

BitString BitString::from_value(double v, int L) {
    if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("BitString: value outside [0,1)");
    double scaled = std::ldexp(v, L);
    if (scaled != std::floor(scaled)) throw std::invalid_argument("BitString: value is not an L-bit dyadic");
    auto q = static_cast<std::uint64_t>(scaled);
    BitString b;
    for (int j = L - 1; j >= 0; --j) b.bits.push_back(static_cast<int>((q >> j) & 1U));
    return b;
}

namespace {

void check_bit_length(int L, const char* who) {
    if (L < 1 || L > kMaxBitLength) {
        std::ostringstream m;
        m << who << ": need 1 <= L <= " << kMaxBitLength << ", got L = " << L;
        throw BudgetError(m.str());
    }
}

} // namespace

ReluNet bit_extractor(int L) {
    check_bit_length(L, "bit_extractor");
    const double P = std::ldexp(1.0, L), H = std::ldexp(1.0, L - 1);
    ReluNet net;
    net.input_dim = 2;
    // state (t1, t2, t3) = (remaining bits, partial answer, l - j + 1), given as
    // rows over the previous layer; initially (x, 0, l)
    struct Lin {
        std::vector<std::pair<int, double>> e;
        double b;
    };
    Lin t1{{{0, 1.0}}, 0.0}, t2{{}, 0.0}, t3{{{1, 1.0}}, 0.0};
    auto scaled = [](const Lin& t, double a, double c) {
        Lin r = t;
        for (auto& p : r.e) p.second *= a;
        r.b = a * t.b + c;
        return r;
    };
    int cols = 2;
    for (int step = 0; step < L; ++step) {
        AffineLayer h(8, cols);
        auto put = [&](const Lin& t) { h.add_row(t.e, t.b); };
        put(t1);                             // h1 = relu(t1)
        put(scaled(t1, P, -H + 1.0));        // h2, h3: step gate T = h2 - h3
        put(scaled(t1, P, -H));
        put(t2);                             // h4
        put(t3);                             // h5..h7: indicator of t3 == 0
        put(scaled(t3, 1.0, -2.0));
        put(scaled(t3, 1.0, -1.0));
        put(scaled(t3, 1.0, -1.0 + L));      // h8: max(t3 - 1, -L) + L
        net.layers.push_back(std::move(h));
        AffineLayer g(4, 8);
        g.add_row({{0, 2.0}, {1, -1.0}, {2, 1.0}}, 0.0);
        g.add_row({{3, 1.0}}, 0.0);
        g.add_row({{4, 1.0}, {5, 1.0}, {6, -2.0}, {1, 1.0}, {2, -1.0}}, -1.0);
        g.add_row({{7, 1.0}}, 0.0);
        net.layers.push_back(std::move(g));
        t1 = {{{0, 1.0}}, 0.0};
        t2 = {{{1, 1.0}, {2, 1.0}}, 0.0};
        t3 = {{{3, 1.0}}, -static_cast<double>(L)};
        cols = 4;
    }
    AffineLayer out(1, 4);
    out.add_row(t2.e, t2.b);
    net.layers.push_back(std::move(out));
    net.meta = {"bit_extractor", 8, 2 * L, 2.0 * std::ldexp(1.0, L * L) + L};
    return net;
}

ReluNet binary_fitter(const std::vector<int>& theta, int W, int L) {
    if (W < 6 || L < 2) throw BudgetError("binary_fitter: need W >= 6 and L >= 2");
    check_bit_length(L, "binary_fitter");
    const long long M = static_cast<long long>(W) * W * L;
    if (static_cast<long long>(theta.size()) != M * L) {
        std::ostringstream m;
        m << "binary_fitter: theta has length " << theta.size() << ", expected W^2 L^2 = " << M * L;
        throw std::invalid_argument(m.str());
    }
    for (int b : theta)
        if (b != 0 && b != 1) throw std::invalid_argument("binary_fitter: theta entries must be 0 or 1");
    // y_m packs the L bits of block m
    Vec y(M + 1, 1.0);
    for (long long m = 0; m < M; ++m) {
        double v = 0.0;
        for (int l = 0; l < L; ++l) v += theta[m * L + l] * std::ldexp(1.0, -(l + 1));
        y[m] = v;
    }
    KnotSamples s1, s2;
    for (long long m = 0; m <= M; ++m) {
        if (m > 0) {
            s1.xs.push_back(static_cast<double>(m * L - 1));
            s1.ys.push_back({y[m - 1]});
            s2.xs.push_back(static_cast<double>(m * L - 1));
            s2.ys.push_back({static_cast<double>(L - 1)});
        }
        s1.xs.push_back(static_cast<double>(m * L));
        s1.ys.push_back({y[m]});
        s2.xs.push_back(static_cast<double>(m * L));
        s2.ys.push_back({0.0});
    }
    auto p1 = build_ladder(s1, 4 * W);
    auto p2 = build_ladder(s2, 4 * W);
    if (p1.blocks > L || p2.blocks > L) throw std::logic_error("binary_fitter: packing exceeded depth budget");
    // both interpolants are nonnegative, so one channel each suffices for padding
    ReluNet front = parallel({p1.net, p2.net}, {{0.0}, {0.0}});
    front = then_affine(front, {{1, 0}, {0, 1}}, {0, 1});
    ReluNet net = compose(bit_extractor(L), front);
    net.meta = {"binary_fitter", 8 * W + 4, 4 * L, 2.0 * std::ldexp(1.0, L * L) + static_cast<double>(L) * L};
    return net;
}

int value_fitter_digits(int W, int L, int s) {
    // smallest J with 2^-J <= (WL)^-2s, i.e. J >= 2s log2(WL)
    const double t = 2.0 * s * std::log2(static_cast<double>(W) * L);
    int J = static_cast<int>(std::ceil(t - 1e-12));
    while (std::ldexp(1.0, -J) > std::pow(static_cast<double>(W) * L, -2.0 * s)) ++J;
    return J;
}

std::uint64_t binary_digits(double xi, int J) {
    double q = std::floor(std::ldexp(xi, J));
    q = std::min(q, std::ldexp(1.0, J) - 1.0);
    q = std::max(q, 0.0);
    return static_cast<std::uint64_t>(q);
}

double fitted_binary(double xi, int J) {
    return std::ldexp(static_cast<double>(binary_digits(xi, J)), -J) + std::ldexp(1.0, -J - 1);
}

ReluNet value_fitter(const Vec& xi, int W, int L, int s) {
    if (W < 6 || L < 2 || s < 1) throw BudgetError("value_fitter: need W >= 6, L >= 2, s >= 1");
    check_bit_length(L, "value_fitter");
    const long long N = static_cast<long long>(W) * W * L * L;
    if (static_cast<long long>(xi.size()) != N) {
        std::ostringstream m;
        m << "value_fitter: xi has length " << xi.size() << ", expected W^2 L^2 = " << N;
        throw std::invalid_argument(m.str());
    }
    for (double v : xi)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("value_fitter: xi must lie in [0,1]");
    const int J = value_fitter_digits(W, L, s);
    const int lw = ceil_log2(2LL * W), ll = ceil_log2(2LL * L);
    const int P = std::min(J, 2 * s * lw);
    const int S = (J + P - 1) / P;
    if (S > ll) {
        std::ostringstream m;
        m << "value_fitter: " << J << " digits need " << S << " stages > ceil(log2(2L)) = " << ll;
        throw BudgetError(m.str());
    }
    // digits b_{i,j}, j = 1..J
    std::vector<std::vector<int>> digit(J, std::vector<int>(N));
    for (long long i = 0; i < N; ++i) {
        auto q = binary_digits(xi[i], J);
        for (int j = 0; j < J; ++j) digit[j][i] = static_cast<int>((q >> (J - 1 - j)) & 1U);
    }
    // each stage maps (t, partial) -> (relu(t), partial + sum of its digits);
    // the fitters are constant for t <= 0, so relu(t) is a faithful carry
    ReluNet net;
    for (int st = 0; st < S; ++st) {
        std::vector<ReluNet> parts;
        std::vector<std::vector<double>> lower;
        std::vector<double> weight;
        for (int j = st * P; j < std::min(J, (st + 1) * P); ++j) {
            parts.push_back(compose(binary_fitter(digit[j], W, L), affine_net(2, {{1, 0}}, {0})));
            lower.push_back({0.0});
            weight.push_back(std::ldexp(1.0, -(j + 1)));
        }
        parts.push_back(affine_net(2, {{1, 0}}, {0}));
        lower.push_back({0.0});
        parts.push_back(affine_net(2, {{0, 1}}, {0}));
        lower.push_back({0.0});
        ReluNet stage = parallel(parts, lower);
        const int k = static_cast<int>(weight.size());
        std::vector<std::vector<double>> a(2, Vec(k + 2, 0.0));
        a[0][k] = 1.0;
        for (int j = 0; j < k; ++j) a[1][j] = weight[j];
        a[1][k + 1] = 1.0;
        stage = then_affine(stage, a, {0, 0});
        net = st == 0 ? compose(stage, affine_net(1, {{1}, {0}}, {0, 0})) : compose(stage, net);
    }
    // the half-step offset centres each digit cell, so every value is within
    // 2^-(J+1) of its target instead of 2^-J
    net = then_affine(net, {{0, 1}}, {std::ldexp(1.0, -J - 1)});
    net = clip_to_box(net, {0.0}, {1.0});
    net.meta = {"value_fitter", 8 * s * (2 * W + 1) * lw + 2, 4 * L * ll + 1,
                4.0 * std::ldexp(1.0, L * L) + 2.0 * L * L};
    return net;
}

} // namespace hgan
