#include "hgan/holder.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hgan/bits.hpp"
#include "hgan/interp.hpp"

namespace hgan {

int holder_s(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("holder: beta must be positive");
    return static_cast<int>(std::ceil(beta)) - 1;
}

int HolderTarget::s() const { return holder_s(beta); }
double HolderTarget::r() const { return beta - s(); }

void HolderTarget::validate() const {
    holder_s(beta);
    if (d < 1) throw std::invalid_argument("holder target: d must be >= 1");
    if (!f || !deriv) throw std::invalid_argument("holder target: missing oracle");
    if (!(norm_factor > 0.0)) throw std::invalid_argument("holder target: norm factor must be positive");
}

namespace {

double mean(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    return m / static_cast<double>(x.size());
}

// probabilists' Hermite polynomial He_k
double hermite(int k, double t) {
    double a = 1.0, b = t;
    if (k == 0) return a;
    for (int i = 1; i < k; ++i) {
        double c = t * b - i * a;
        a = b;
        b = c;
    }
    return b;
}

// sup_t |He_k(t)| exp(-t^2/2), by a fine grid plus a small safety factor
double hermite_sup(int k) {
    double m = 0.0;
    for (int i = -100000; i <= 100000; ++i) {
        double t = i * 1e-4;
        m = std::max(m, std::abs(hermite(k, t)) * std::exp(-0.5 * t * t));
    }
    return m * (1.0 + 1e-6);
}

} // namespace

std::vector<std::string> builtin_target_names() {
    return {"zero", "linear_mean", "quadratic", "sinusoid", "bump", "sqrt_ridge"};
}

HolderTarget builtin_target(const std::string& name, double beta, int d) {
    HolderTarget h;
    h.name = name;
    h.beta = beta;
    h.d = d;
    const int s = holder_s(beta);
    const double r = beta - s;
    const double dd = d;
    if (name == "zero") {
        h.f = [](std::span<const double>) { return 0.0; };
        h.deriv = [](const MultiIndex&, std::span<const double>) { return 0.0; };
    } else if (name == "linear_mean") {
        h.f = [](std::span<const double> x) { return mean(x); };
        h.deriv = [dd](const MultiIndex& a, std::span<const double> x) {
            int k = a.order();
            return k == 0 ? mean(x) : k == 1 ? 1.0 / dd : 0.0;
        };
    } else if (name == "quadratic") {
        if (s > 2) throw std::invalid_argument("quadratic target: beta must be <= 3");
        h.f = [](std::span<const double> x) { return 0.5 * mean(x) * mean(x); };
        h.deriv = [dd](const MultiIndex& a, std::span<const double> x) {
            int k = a.order();
            double m = mean(x);
            return k == 0 ? 0.5 * m * m : k == 1 ? m / dd : k == 2 ? 1.0 / (dd * dd) : 0.0;
        };
    } else if (name == "sinusoid") {
        const double w = 2.0, ph = 0.3;
        const double a = 0.9 / std::max({1.0, std::pow(w, s), std::pow(2.0, 1 - r) * std::pow(w, s + r)});
        h.f = [=](std::span<const double> x) { return a * std::sin(w * mean(x) + ph); };
        h.deriv = [=](const MultiIndex& al, std::span<const double> x) {
            int k = al.order();
            return a * std::pow(w / dd, k) * std::sin(w * mean(x) + ph + k * M_PI / 2);
        };
    } else if (name == "bump") {
        const double c = 0.5, tau = 0.3;
        std::vector<double> C(s + 2);
        for (int k = 0; k <= s + 1; ++k) C[k] = hermite_sup(k);
        // M_k bounds every derivative of order k of the unscaled bump
        auto Mk = [&](int k) {
            double best = 0.0;
            for (auto& al : multi_indices(d, k)) {
                if (al.order() != k) continue;
                double p = 1.0;
                for (int aj : al.alpha) p *= C[aj] * std::pow(tau, -aj);
                best = std::max(best, p);
            }
            return best;
        };
        double worst = 0.0;
        for (int k = 0; k <= s; ++k) worst = std::max(worst, Mk(k));
        worst = std::max(worst, std::pow(2.0 * Mk(s), 1 - r) * std::pow(std::sqrt(dd) * Mk(s + 1), r));
        const double a = 0.9 / worst;
        h.f = [=](std::span<const double> x) {
            double q = 0.0;
            for (double v : x) q += (v - c) * (v - c);
            return a * std::exp(-q / (2 * tau * tau));
        };
        h.deriv = [=](const MultiIndex& al, std::span<const double> x) {
            double p = a;
            for (std::size_t j = 0; j < x.size(); ++j) {
                double t = (x[j] - c) / tau;
                int k = al.alpha[j];
                p *= (k % 2 ? -1.0 : 1.0) * std::pow(tau, -k) * hermite(k, t) * std::exp(-0.5 * t * t);
            }
            return p;
        };
    } else if (name == "sqrt_ridge") {
        if (beta > 0.5) throw std::invalid_argument("sqrt_ridge target: beta must be <= 0.5");
        h.f = [](std::span<const double> x) { return std::sqrt(std::max(0.0, mean(x))); };
        h.deriv = [](const MultiIndex&, std::span<const double> x) { return std::sqrt(std::max(0.0, mean(x))); };
    } else {
        throw std::invalid_argument("unknown target: " + name);
    }
    return h;
}

HolderBudget HolderBudget::make(int W, int L, double beta, int d) {
    HolderBudget b;
    b.W = W;
    b.L = L;
    b.d = d;
    b.beta = beta;
    const int s = holder_s(beta);
    b.K = discretizer_K(W, L, d);
    b.delta = 1.0 / (3.0 * std::pow(static_cast<double>(b.K), std::max(beta, 1.0)));
    b.claimed_error = 6.0 * (s + 1) * (s + 1) * std::pow(static_cast<double>(d), std::max(s + beta / 2, 1.0)) *
                      std::pow(static_cast<double>(b.K), -beta);
    const double WL = static_cast<double>(W) * L;
    b.claimed_lipschitz = (s + 1) * std::pow(static_cast<double>(d), s + 0.5) * L *
                          std::pow(WL, std::max(4 * beta - 4, 0.0) / d) *
                          (1260.0 * WL * WL * std::ldexp(1.0, L * L) + 19.0 * s * std::pow(7.0, s));
    long long p3 = 1;
    for (int i = 0; i < d; ++i) p3 *= 3;
    long long dp = 1;
    for (int i = 0; i <= s; ++i) dp *= d;
    b.claimed_width = 49LL * (s + 1) * (s + 1) * p3 * dp * W * ceil_log2(W);
    b.claimed_depth = 15LL * (s + 1) * (s + 1) * L * ceil_log2(L) + 2LL * d;
    return b;
}

bool HolderBudget::consistent() const {
    auto f = make(W, L, beta, d);
    return f.K == K && f.delta == delta && f.claimed_error == claimed_error &&
           f.claimed_lipschitz == claimed_lipschitz && f.claimed_width == claimed_width &&
           f.claimed_depth == claimed_depth;
}

ReluNet mid_net() {
    // mid = S - max - min with max(a, b) = ((a+b) + |a-b|)/2
    ReluNet n;
    n.input_dim = 3;
    AffineLayer h(6, 3);
    h.add_row({{0, 1}, {1, 1}}, 0);    // relu(t1+t2)
    h.add_row({{0, -1}, {1, -1}}, 0);  // relu(-t1-t2)
    h.add_row({{0, 1}, {1, -1}}, 0);   // relu(t1-t2)
    h.add_row({{0, -1}, {1, 1}}, 0);   // relu(t2-t1)
    h.add_row({{2, 1}}, 0);            // relu(t3)
    h.add_row({{2, -1}}, 0);           // relu(-t3)
    n.layers.push_back(std::move(h));
    // p = t1+t2, q = |t1-t2|, t3 as units
    using E = std::vector<std::pair<int, double>>;
    auto lin = [](double cp, double cq, double c3) {
        E e{{0, cp}, {1, -cp}, {2, cq}, {3, cq}, {4, c3}, {5, -c3}};
        return e;
    };
    AffineLayer g(10, 6);
    // max12 = p/2 + q/2, min12 = p/2 - q/2
    for (double sq : {1.0, -1.0}) {
        // m = p/2 + sq q/2 ; rows relu(m + t3), relu(-m - t3), relu(m - t3), relu(t3 - m)
        g.add_row(lin(0.5, 0.5 * sq, 1.0), 0);
        g.add_row(lin(-0.5, -0.5 * sq, -1.0), 0);
        g.add_row(lin(0.5, 0.5 * sq, -1.0), 0);
        g.add_row(lin(-0.5, -0.5 * sq, 1.0), 0);
    }
    g.add_row(lin(1.0, 0.0, 1.0), 0);    // relu(S)
    g.add_row(lin(-1.0, 0.0, -1.0), 0);  // relu(-S)
    n.layers.push_back(std::move(g));
    // max3 = ((m+t3) + |m-t3|)/2 with m = max12; min3 = ((m+t3) - |m-t3|)/2 with m = min12
    AffineLayer o(1, 10);
    o.add_row({{8, 1.0}, {9, -1.0},
               {0, -0.5}, {1, 0.5}, {2, -0.5}, {3, -0.5},
               {4, -0.5}, {5, 0.5}, {6, 0.5}, {7, 0.5}},
              0);
    n.layers.push_back(std::move(o));
    n.meta = {"mid", 10, 2, std::sqrt(3.0)};
    return n;
}

namespace {

std::vector<std::vector<double>> unit_rows(int in, const std::vector<std::pair<int, double>>& picks) {
    std::vector<std::vector<double>> a;
    for (auto& [c, w] : picks) {
        Vec r(in, 0.0);
        r[c] = w;
        a.push_back(r);
    }
    return a;
}

ReluNet select(int in, const std::vector<int>& idx) {
    std::vector<std::pair<int, double>> p;
    for (int i : idx) p.emplace_back(i, 1.0);
    return affine_net(in, unit_rows(in, p), Vec(idx.size(), 0.0));
}

} // namespace

ReluNet holder_approximator(const HolderTarget& h, const HolderBudget& b) {
    h.validate();
    if (!b.consistent()) throw std::invalid_argument("holder_approximator: budget fields are inconsistent");
    if (h.d != b.d || h.beta != b.beta) throw std::invalid_argument("holder_approximator: target and budget disagree");
    const int d = b.d, W = b.W, L = b.L, K = b.K;
    const int s = holder_s(b.beta);
    if (W < 6 || L < 2) throw BudgetError("holder_approximator: need W >= 6 and L >= 2");
    if (d > 3) throw BudgetError("holder_approximator: need d <= 3, got d = " + std::to_string(d));
    if (s > 2) throw BudgetError("holder_approximator: need s <= 2, got s = " + std::to_string(s));
    long long Kd = 1;
    for (int j = 0; j < d; ++j) Kd *= K;
    const long long cap = static_cast<long long>(W) * W * L * L;
    if (Kd > cap) {
        std::ostringstream m;
        m << "holder_approximator: K^d = " << Kd << " > W^2 L^2 = " << cap;
        throw BudgetError(m.str());
    }
    const double F = h.norm_factor;

    // step 1: per-coordinate discretizer p_j and clamp c_j; outputs (p_1..p_d, c_1..c_d)
    ReluNet disc = discretizer(W, L, d, b.delta);
    std::vector<ReluNet> parts;
    std::vector<std::vector<double>> lower;
    for (int j = 0; j < d; ++j) {
        parts.push_back(compose(disc, select(d, {j})));
        lower.push_back({0.0});
    }
    for (int j = 0; j < d; ++j) {
        parts.push_back(clip_to_box(select(d, {j}), {0.0}, {1.0}));
        lower.push_back({0.0});
    }
    ReluNet front = parallel(parts, lower);

    // step 2: coefficient fits on the cell index and monomials of (c - p)
    auto alphas = multi_indices(d, s);
    const int nA = static_cast<int>(alphas.size());
    const long long N = cap;
    std::vector<double> index_row(2 * d, 0.0);
    for (int j = 0; j < d; ++j) index_row[j] = std::pow(static_cast<double>(K), j + 1);
    ReluNet index = affine_net(2 * d, {index_row}, {0.0});
    std::vector<int> theta(d, 0);
    Vec center(d);
    parts.clear();
    lower.clear();
    for (const auto& al : alphas) {
        Vec xi(N, 0.5);
        for (long long i = 0; i < Kd; ++i) {
            long long t = i;
            for (int j = 0; j < d; ++j) {
                theta[j] = static_cast<int>(t % K);
                t /= K;
                center[j] = static_cast<double>(theta[j]) / K;
            }
            double v = (h.deriv(al, center) / F + 1.0) / 2.0;
            xi[i] = std::clamp(v, 0.0, 1.0);
        }
        ReluNet fit = value_fitter(xi, W, L, s + 1);
        // phi_alpha / alpha! = (2 fit - 1) / alpha!
        fit = then_affine(fit, {{2.0 / al.factorial()}}, {-1.0 / al.factorial()});
        parts.push_back(compose(fit, index));
        lower.push_back({-1.0});
    }
    const int Lp = 2 * (s + 1) * L;
    for (int a = 1; a < nA; ++a) {
        std::vector<std::vector<double>> diff(d, Vec(2 * d, 0.0));
        for (int j = 0; j < d; ++j) {
            diff[j][d + j] = 1.0;
            diff[j][j] = -1.0;
        }
        parts.push_back(compose(monomial_net(alphas[a], W, Lp), affine_net(2 * d, diff, Vec(d, 0.0))));
        lower.push_back({-1.0});
    }
    ReluNet stage2 = parallel(parts, lower);

    // step 3: products, sum, clip
    ReluNet out;
    if (nA == 1) {
        out = stage2;
    } else {
        ReluNet prod = product_net(W, Lp);
        const int m = 2 * nA - 1;
        parts.clear();
        lower.clear();
        parts.push_back(select(m, {0}));
        lower.push_back({-1.0});
        for (int a = 1; a < nA; ++a) {
            parts.push_back(compose(prod, select(m, {a, nA + a - 1})));
            lower.push_back({});
        }
        ReluNet stage3 = parallel(parts, lower);
        stage3 = then_affine(stage3, {Vec(nA, 1.0)}, {0.0});
        out = compose(stage3, stage2);
    }
    ReluNet phi0 = clip_to_box(compose(out, front), {-1.0}, {1.0});

    // step 4: mid extension over 3^d shifted copies, reduced one coordinate at a time;
    // copy c has shift (c_1 - 1, ..., c_d - 1) * delta with c_1 varying fastest
    int copies = 1;
    for (int j = 0; j < d; ++j) copies *= 3;
    parts.clear();
    lower.clear();
    for (int c = 0; c < copies; ++c) {
        Vec shift(d);
        int t = c;
        for (int j = 0; j < d; ++j) {
            shift[j] = (t % 3 - 1) * b.delta;
            t /= 3;
        }
        std::vector<std::vector<double>> I(d, Vec(d, 0.0));
        for (int j = 0; j < d; ++j) I[j][j] = 1.0;
        parts.push_back(compose(phi0, affine_net(d, I, shift)));
        lower.push_back({-1.0});
    }
    ReluNet net = parallel(parts, lower);
    ReluNet mid = mid_net();
    for (int level = 0; level < d; ++level) {
        const int m = copies;
        copies /= 3;
        std::vector<ReluNet> mids;
        for (int g = 0; g < copies; ++g) mids.push_back(compose(mid, select(m, {3 * g, 3 * g + 1, 3 * g + 2})));
        net = compose(mids.size() == 1 ? mids[0] : parallel(mids), net);
    }
    if (F != 1.0) net = then_affine(net, {{F}}, {0.0});
    net.meta = {"holder_approximator", static_cast<int>(std::min<long long>(b.claimed_width, INT32_MAX)),
                static_cast<int>(b.claimed_depth), F * b.claimed_lipschitz};
    return net;
}

double taylor_local_error(const HolderTarget& h, std::span<const double> x, std::span<const double> x0) {
    double p = 0.0;
    Vec dx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) dx[j] = x[j] - x0[j];
    for (const auto& al : multi_indices(h.d, h.s())) p += h.deriv(al, x0) / al.factorial() * al.pow(dx);
    return std::abs(h.f(x) - p);
}

double holder_spot_check(const HolderTarget& h, int pairs, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int s = h.s();
    const double r = h.r();
    auto alphas = multi_indices(h.d, s);
    double worst = 0.0;
    Vec x(h.d), y(h.d);
    for (int t = 0; t < pairs; ++t) {
        double scale = std::pow(10.0, -4.0 * u(rng));
        for (int j = 0; j < h.d; ++j) {
            x[j] = u(rng);
            y[j] = std::clamp(x[j] + scale * (2 * u(rng) - 1), 0.0, 1.0);
        }
        double dist = 0.0;
        for (int j = 0; j < h.d; ++j) dist += (x[j] - y[j]) * (x[j] - y[j]);
        dist = std::sqrt(dist);
        for (const auto& al : alphas) {
            double gx = h.deriv(al, x) / h.norm_factor, gy = h.deriv(al, y) / h.norm_factor;
            worst = std::max(worst, std::abs(gx));
            if (al.order() == s && dist > 0) worst = std::max(worst, std::abs(gx - gy) / std::pow(dist, r));
        }
    }
    return worst;
}

} // namespace hgan
