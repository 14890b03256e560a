#include "hgan/interp.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <sstream>

namespace hgan {

void KnotSamples::validate() const {
    if (xs.empty()) throw std::invalid_argument("knot samples: empty");
    if (xs.size() != ys.size()) throw std::invalid_argument("knot samples: xs/ys length mismatch");
    const std::size_t d = ys[0].size();
    if (d == 0) throw std::invalid_argument("knot samples: zero-dimensional values");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i])) throw std::invalid_argument("knot samples: non-finite x");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw std::invalid_argument("knot samples: xs not strictly increasing");
        if (ys[i].size() != d) throw std::invalid_argument("knot samples: ragged ys");
        for (double v : ys[i])
            if (!std::isfinite(v)) throw std::invalid_argument("knot samples: non-finite y");
    }
}

KnotSamples KnotSamples::scalar(const Vec& xs, const Vec& ys) {
    KnotSamples s;
    s.xs = xs;
    for (double y : ys) s.ys.push_back({y});
    return s;
}

Vec eval_pwl(const KnotSamples& s, double x) {
    const auto& xs = s.xs;
    if (x <= xs.front()) return s.ys.front();
    if (x >= xs.back()) return s.ys.back();
    std::size_t i = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();  // xs[i-1] <= x < xs[i]
    double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    Vec y(s.ys[i].size());
    for (std::size_t c = 0; c < y.size(); ++c) y[c] = s.ys[i - 1][c] + t * (s.ys[i][c] - s.ys[i - 1][c]);
    return y;
}

double max_slope(const KnotSamples& s) {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < s.xs.size(); ++i) {
        double n2 = 0.0;
        for (std::size_t c = 0; c < s.ys[i].size(); ++c) {
            double d = (s.ys[i + 1][c] - s.ys[i][c]) / (s.xs[i + 1] - s.xs[i]);
            n2 += d * d;
        }
        m = std::max(m, std::sqrt(n2));
    }
    return m;
}

namespace {

// A group is a run of knots alpha < interior... < beta. The two edge knots get
// first-layer units; every second-layer unit crosses zero at most once inside
// the group, and between groups it can be re-levelled freely without crossing.
struct Group {
    int alpha, beta;
    std::vector<int> inner;
};

struct Block {
    std::vector<Group> groups;
    std::vector<int> direct;
    int a_units() const { return 2 * static_cast<int>(groups.size()) + static_cast<int>(direct.size()); }
};

struct Pool {
    int coord;
    int sign;
    int size;
};

std::vector<Pool> make_pools(int free, int d) {
    std::vector<Pool> p;
    int n = 2 * d, base = free / n, extra = free % n;
    for (int c = 0; c < d; ++c)
        for (int s : {1, -1}) {
            int i = static_cast<int>(p.size());
            p.push_back({c, s, base + (i < extra ? 1 : 0)});
        }
    return p;
}

int pool_of(const std::vector<Pool>& pools, int c, double a) {
    for (std::size_t i = 0; i < pools.size(); ++i)
        if (pools[i].coord == c && pools[i].sign == (a > 0 ? 1 : -1)) return static_cast<int>(i);
    return -1;
}

std::vector<Block> pack(const std::vector<int>& act, const std::vector<Vec>& kink, const std::vector<Pool>& pools,
                        int free) {
    std::vector<Block> out;
    std::size_t pos = 0;
    const int d = static_cast<int>(kink[0].size());
    while (pos < act.size()) {
        Block b;
        int left = free;
        while (left > 0 && pos < act.size()) {
            if (left >= 2 && pos + 2 < act.size()) {
                std::vector<int> used(pools.size(), 0);
                std::size_t j = pos + 1;
                std::vector<int> inner;
                while (j + 1 < act.size()) {
                    const Vec& a = kink[act[j]];
                    bool fits = true;
                    for (int c = 0; c < d; ++c)
                        if (a[c] != 0.0) {
                            int p = pool_of(pools, c, a[c]);
                            if (used[p] + 1 > pools[p].size) fits = false;
                        }
                    if (!fits) break;
                    for (int c = 0; c < d; ++c)
                        if (a[c] != 0.0) ++used[pool_of(pools, c, a[c])];
                    inner.push_back(act[j]);
                    ++j;
                }
                if (!inner.empty()) {
                    b.groups.push_back({act[pos], act[j], std::move(inner)});
                    pos = j + 1;
                    left -= 2;
                    continue;
                }
            }
            b.direct.push_back(act[pos++]);
            --left;
        }
        out.push_back(std::move(b));
    }
    return out;
}

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

struct Unit2 {
    int pool;
    Vec out;                        // output coefficient (sign * e_c)
    double bias;
    std::vector<std::pair<int, double>> edge_w;  // (knot index, weight on relu(x - knot))
};

double lower_margin(double m) { return m - 1.0 - 1e-6 * std::abs(m); }

} // namespace

LadderResult build_ladder(const KnotSamples& s, int free, bool expose_input) {
    s.validate();
    const int d = s.dim();
    const int nk = static_cast<int>(s.xs.size());
    const double x0 = s.xs.front(), xe = s.xs.back();
    const int nout = d + (expose_input ? 1 : 0);

    LadderResult res;
    ReluNet& net = res.net;
    net.input_dim = 1;
    net.meta = {"ladder", 0, 0, max_slope(s)};

    if (nk == 1) {
        Vec c = s.ys[0];
        if (expose_input) c.push_back(x0);
        net = constant_net(1, c);
        return res;
    }

    // kink[i] is the slope change at knot i; knot 0 carries the initial slope and
    // the last knot is produced by clamping the input
    std::vector<Vec> kink(nk, Vec(d, 0.0));
    Vec prev(d, 0.0);
    for (int i = 0; i + 1 < nk; ++i) {
        for (int c = 0; c < d; ++c) {
            double sl = (s.ys[i + 1][c] - s.ys[i][c]) / (s.xs[i + 1] - s.xs[i]);
            kink[i][c] = sl - prev[c];
            prev[c] = sl;
        }
    }
    std::vector<int> act;
    for (int i = 1; i + 1 < nk; ++i)
        if (std::any_of(kink[i].begin(), kink[i].end(), [](double v) { return v != 0.0; })) act.push_back(i);

    const bool flat = std::all_of(kink.begin(), kink.end(), [](const Vec& k) {
        return std::all_of(k.begin(), k.end(), [](double v) { return v == 0.0; });
    });
    if (flat && !expose_input) {
        net = constant_net(1, s.ys[0]);
        return res;
    }

    auto pools = make_pools(free, d);
    if (!act.empty()) {
        for (auto& p : pools)
            if (p.size < 1) throw std::invalid_argument("build_ladder: too few free units per layer");
    }
    auto blocks = pack(act, kink, pools, free);
    res.blocks = static_cast<int>(blocks.size());

    // running accumulator values at every knot, used only for lower bounds
    std::vector<Vec> accv(nk, Vec(d));
    for (int i = 0; i < nk; ++i)
        for (int c = 0; c < d; ++c) accv[i][c] = s.ys[0][c] + kink[0][c] * (s.xs[i] - x0);
    auto current_lb = [&]() {
        Vec lb(d, 0.0);
        for (int c = 0; c < d; ++c) {
            double m = accv[0][c];
            for (int i = 1; i < nk; ++i) m = std::min(m, accv[i][c]);
            lb[c] = lower_margin(m);
        }
        return lb;
    };

    if (blocks.empty()) {
        AffineLayer h(2, 1);
        h.add_row({{0, 1.0}}, -x0);
        h.add_row({{0, 1.0}}, -xe);
        AffineLayer o(nout, 2);
        for (int c = 0; c < d; ++c) o.add_row({{0, kink[0][c]}, {1, -kink[0][c]}}, s.ys[0][c]);
        if (expose_input) o.add_row({{0, 1.0}, {1, -1.0}}, x0);
        net.layers.push_back(std::move(h));
        net.layers.push_back(std::move(o));
        return res;
    }

    // Build layer by layer. For each hidden layer we keep: carry unit index,
    // accumulator units (d of them, holding acc - lb), and a pending list of
    // contributions (unit, coefficient vector) to be added to the accumulator
    // in the next layer.
    struct Pending {
        int unit;
        Vec coef;
    };

    int prev_carry = -1, prev_acc = -1;  // unit indices in previous hidden layer
    bool prev_is_first_a = false;
    Vec prev_lb(d, 0.0);
    std::vector<Pending> pend;

    auto carry_entries = [&](std::vector<std::pair<int, double>>& e, double w) {
        // adds w * (xc - x0) in terms of previous layer units
        if (prev_is_first_a) {
            e.emplace_back(0, w);
            e.emplace_back(1, -w);
        } else {
            e.emplace_back(prev_carry, w);
        }
    };
    // acc_total(prev) in terms of previous-layer units: returns entries per c and bias per c
    auto acc_entries = [&](int c, std::vector<std::pair<int, double>>& e, double& b) {
        if (prev_is_first_a) {
            b += s.ys[0][c];
            carry_entries(e, kink[0][c]);
        } else {
            e.emplace_back(prev_acc + c, 1.0);
            b += prev_lb[c];
        }
        for (auto& p : pend)
            if (p.coef[c] != 0.0) e.emplace_back(p.unit, p.coef[c]);
    };

    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        const Block& B = blocks[bi];
        // knots getting a first-layer unit: edges then directs
        std::vector<int> aknots;
        for (auto& g : B.groups) {
            aknots.push_back(g.alpha);
            aknots.push_back(g.beta);
        }
        for (int t : B.direct) aknots.push_back(t);

        // ---------- layer A ----------
        const bool first = bi == 0;
        int cols = first ? 1 : net.layers.back().rows;
        AffineLayer A(0, cols);
        int a_carry = -1, a_acc = -1;
        std::vector<int> a_unit(aknots.size());
        Vec a_lb(d, 0.0);
        if (first) {
            A.add_row({{0, 1.0}}, -x0);
            A.add_row({{0, 1.0}}, -xe);
            for (std::size_t i = 0; i < aknots.size(); ++i) a_unit[i] = A.add_row({{0, 1.0}}, -s.xs[aknots[i]]);
        } else {
            a_carry = A.add_row({{prev_carry, 1.0}}, 0.0);
            a_lb = current_lb();
            for (int c = 0; c < d; ++c) {
                std::vector<std::pair<int, double>> e;
                double b = 0.0;
                acc_entries(c, e, b);
                int u = A.add_row(std::move(e), b - a_lb[c]);
                if (c == 0) a_acc = u;
            }
            for (std::size_t i = 0; i < aknots.size(); ++i)
                a_unit[i] = A.add_row({{prev_carry, 1.0}}, x0 - s.xs[aknots[i]]);
        }
        net.layers.push_back(std::move(A));
        pend.clear();

        // now the previous layer is this layer A
        prev_is_first_a = first;
        prev_carry = a_carry;
        prev_acc = a_acc;
        prev_lb = a_lb;

        // feature relu(xc - t) for an A knot, as entries over layer A units
        auto feature = [&](std::size_t i, double w, std::vector<std::pair<int, double>>& e) {
            e.emplace_back(a_unit[i], w);
            if (first) e.emplace_back(1, -w);
        };

        // ---------- second-layer units for the groups ----------
        std::vector<Unit2> units;
        if (!B.groups.empty()) {
            std::vector<int> need(pools.size(), 0);
            // per group, per pool: list of knots
            std::vector<std::vector<std::vector<int>>> assign(B.groups.size(), std::vector<std::vector<int>>(pools.size()));
            for (std::size_t g = 0; g < B.groups.size(); ++g) {
                for (int t : B.groups[g].inner)
                    for (int c = 0; c < d; ++c)
                        if (kink[t][c] != 0.0) assign[g][pool_of(pools, c, kink[t][c])].push_back(t);
                for (std::size_t p = 0; p < pools.size(); ++p)
                    need[p] = std::max(need[p], static_cast<int>(assign[g][p].size()));
            }
            for (std::size_t p = 0; p < pools.size(); ++p)
                for (int k = 0; k < need[p]; ++k) {
                    Unit2 u;
                    u.pool = static_cast<int>(p);
                    u.out.assign(d, 0.0);
                    u.out[pools[p].coord] = pools[p].sign;
                    double cur = -1.0;   // value of g at the end of the previous group
                    double beta_prev = 0.0;
                    for (std::size_t g = 0; g < B.groups.size(); ++g) {
                        const auto& G = B.groups[g];
                        const double xa = s.xs[G.alpha], xb = s.xs[G.beta];
                        double gs, slope;
                        if (k < static_cast<int>(assign[g][p].size())) {
                            int t = assign[g][p][k];
                            double m = std::abs(kink[t][pools[p].coord]);
                            double xt = s.xs[t];
                            if (cur < 0) {
                                slope = m;
                                gs = -m * (xt - xa);
                            } else {
                                slope = -m;
                                gs = m * (xt - xa);
                            }
                        } else {
                            slope = 0.0;
                            gs = cur;
                        }
                        double r;
                        if (g == 0) {
                            u.bias = gs;
                            r = 0.0;
                        } else {
                            r = (gs - cur) / (xa - beta_prev);
                            // slope change at the previous beta: r - s_prev
                            u.edge_w.back().second += r;
                        }
                        u.edge_w.emplace_back(G.alpha, slope - r);
                        u.edge_w.emplace_back(G.beta, -slope);  // completed by the next group's reset slope
                        cur = gs + slope * (xb - xa);
                        beta_prev = xb;
                    }
                    units.push_back(std::move(u));
                }
        }

        auto gval = [&](const Unit2& u, double x) {
            double v = u.bias;
            for (auto& [t, w] : u.edge_w) v += w * relu(x - s.xs[t]);
            return v;
        };

        // coefficients of the first-layer units that feed the accumulator
        std::vector<Vec> dcoef(aknots.size(), Vec(d, 0.0));
        for (std::size_t i = 0; i < aknots.size(); ++i) {
            int t = aknots[i];
            dcoef[i] = kink[t];
            for (auto& u : units) {
                if (!(gval(u, s.xs[t]) > 0.0)) continue;
                double w = 0.0;
                for (auto& [tt, ww] : u.edge_w)
                    if (tt == t) w += ww;
                for (int c = 0; c < d; ++c) dcoef[i][c] -= u.out[c] * w;
            }
        }
        {
            // sum_i dcoef_i relu(x_j - t_i) in one sweep over the sorted knots
            std::vector<std::size_t> by_knot(aknots.size());
            std::iota(by_knot.begin(), by_knot.end(), 0);
            std::sort(by_knot.begin(), by_knot.end(), [&](auto a, auto b) { return aknots[a] < aknots[b]; });
            Vec sc(d, 0.0), sct(d, 0.0);
            std::size_t k = 0;
            for (int j = 0; j < nk; ++j) {
                for (; k < by_knot.size() && aknots[by_knot[k]] <= j; ++k)
                    for (int c = 0; c < d; ++c) {
                        sc[c] += dcoef[by_knot[k]][c];
                        sct[c] += dcoef[by_knot[k]][c] * s.xs[aknots[by_knot[k]]];
                    }
                for (int c = 0; c < d; ++c) accv[j][c] += sc[c] * s.xs[j] - sct[c];
            }
        }

        const bool last_block = bi + 1 == blocks.size();
        if (units.empty() && last_block) {
            // finish directly from layer A
            for (std::size_t i = 0; i < aknots.size(); ++i) {
                // store as pending over layer-A units, expanding the block-1 correction
                Pending p{a_unit[i], dcoef[i]};
                pend.push_back(p);
                if (first) {
                    Vec neg(d);
                    for (int c = 0; c < d; ++c) neg[c] = -dcoef[i][c];
                    pend.push_back({1, neg});
                }
            }
            break;
        }

        // ---------- layer B ----------
        AffineLayer Bl(0, net.layers.back().rows);
        std::vector<std::pair<int, double>> ce;
        carry_entries(ce, 1.0);
        int b_carry = Bl.add_row(std::move(ce), 0.0);
        for (std::size_t i = 0; i < aknots.size(); ++i) {
            pend.push_back({a_unit[i], dcoef[i]});
            if (first) {
                Vec neg(d);
                for (int c = 0; c < d; ++c) neg[c] = -dcoef[i][c];
                pend.push_back({1, neg});
            }
        }
        Vec b_lb = current_lb();
        int b_acc = -1;
        for (int c = 0; c < d; ++c) {
            std::vector<std::pair<int, double>> e;
            double b = 0.0;
            acc_entries(c, e, b);
            int u = Bl.add_row(std::move(e), b - b_lb[c]);
            if (c == 0) b_acc = u;
        }
        pend.clear();
        std::vector<int> b_unit;
        for (auto& u : units) {
            std::vector<std::pair<int, double>> e;
            for (auto& [t, w] : u.edge_w) {
                std::size_t i = std::find(aknots.begin(), aknots.end(), t) - aknots.begin();
                feature(i, w, e);
            }
            b_unit.push_back(Bl.add_row(std::move(e), u.bias));
        }
        net.layers.push_back(std::move(Bl));
        prev_is_first_a = false;
        prev_carry = b_carry;
        prev_acc = b_acc;
        prev_lb = b_lb;
        for (std::size_t k = 0; k < units.size(); ++k) {
            pend.push_back({b_unit[k], units[k].out});
            // g is piecewise linear with kinks at its edge knots: sweep once
            const auto& u = units[k];
            double sw = 0.0, swt = 0.0;
            std::size_t e = 0;
            for (int j = 0; j < nk; ++j) {
                for (; e < u.edge_w.size() && u.edge_w[e].first <= j; ++e) {
                    sw += u.edge_w[e].second;
                    swt += u.edge_w[e].second * s.xs[u.edge_w[e].first];
                }
                double g = relu(u.bias + sw * s.xs[j] - swt);
                if (g != 0.0)
                    for (int c = 0; c < d; ++c) accv[j][c] += u.out[c] * g;
            }
        }
    }

    // ---------- output ----------
    AffineLayer O(0, net.layers.back().rows);
    for (int c = 0; c < d; ++c) {
        std::vector<std::pair<int, double>> e;
        double b = 0.0;
        acc_entries(c, e, b);
        O.add_row(std::move(e), b);
    }
    if (expose_input) {
        std::vector<std::pair<int, double>> e;
        carry_entries(e, 1.0);
        O.add_row(std::move(e), x0);
    }
    net.layers.push_back(std::move(O));
    net.validate();
    return res;
}

ReluNet linear_interpolator(const KnotSamples& s, int W, int L) {
    s.validate();
    if (s.dim() != 1) throw std::invalid_argument("linear_interpolator: samples must be scalar");
    if (W < 6) throw BudgetError("linear_interpolator: need W >= 6, got W = " + std::to_string(W));
    if (L < 1) throw BudgetError("linear_interpolator: need L >= 1, got L = " + std::to_string(L));
    long long N = s.interior();
    long long cap = static_cast<long long>(W / 6) * W * L;
    if (N > cap) {
        std::ostringstream m;
        m << "linear_interpolator: N = " << N << " > floor(W/6)*W*L = " << cap << " (W=" << W << ", L=" << L << ")";
        throw BudgetError(m.str());
    }
    auto r = build_ladder(s, W);
    if (r.blocks > L) throw std::logic_error("linear_interpolator: packing exceeded depth budget");
    r.net.meta = {"linear_interpolator", W + 2, 2 * L, max_slope(s)};
    return r.net;
}

ReluNet pwl_path_net(const KnotSamples& s, int W, int L) {
    s.validate();
    const int d = s.dim();
    if (W < 7 * d + 1) throw BudgetError("pwl_path_net: need W >= 7d+1 = " + std::to_string(7 * d + 1) + ", got W = " + std::to_string(W));
    if (L < 2) throw BudgetError("pwl_path_net: need L >= 2, got L = " + std::to_string(L));
    long long N = s.interior();
    long long cap = static_cast<long long>(W - d - 1) * ((W - d - 1) / (6 * d)) * (L / 2);
    if (N > cap) {
        std::ostringstream m;
        m << "pwl_path_net: N = " << N << " > (W-d-1)*floor((W-d-1)/(6d))*floor(L/2) = " << cap;
        throw BudgetError(m.str());
    }
    auto r = build_ladder(s, W - d - 1);
    if (2 * r.blocks > L) throw std::logic_error("pwl_path_net: packing exceeded depth budget");
    r.net.meta = {"pwl_path_net", W, L, max_slope(s)};
    return r.net;
}

int discretizer_K(int W, int L, int d) {
    if (d < 1) throw std::invalid_argument("discretizer: d must be >= 1");
    // largest K with K^d <= (WL)^2
    const long double t = static_cast<long double>(W) * L * W * L;
    long long K = static_cast<long long>(std::floor(std::pow(t, 1.0L / d)));
    auto pw = [d](long long k) {
        long double p = 1;
        for (int i = 0; i < d; ++i) p *= k;
        return p;
    };
    while (K > 1 && pw(K) > t) --K;
    while (pw(K + 1) <= t) ++K;
    return static_cast<int>(K);
}

KnotSamples plateau_samples(int K, double delta, double scale) {
    KnotSamples s;
    for (int k = 0; k < K; ++k) {
        s.xs.push_back(static_cast<double>(k) / K);
        s.ys.push_back({k * scale});
        if (k < K - 1) {
            s.xs.push_back(static_cast<double>(k + 1) / K - delta);
            s.ys.push_back({k * scale});
        }
    }
    s.xs.push_back(1.0);
    s.ys.push_back({(K - 1) * scale});
    return s;
}

ReluNet discretizer(int W, int L, int d, double delta) {
    if (W < 6 || L < 2) throw BudgetError("discretizer: need W >= 6 and L >= 2");
    const int K = discretizer_K(W, L, d);
    if (!(delta > 0.0) || delta > 1.0 / (3.0 * K)) {
        std::ostringstream m;
        m << "discretizer: delta = " << delta << " outside (0, 1/(3K)] with K = " << K;
        throw BudgetError(m.str());
    }
    ReluNet net;
    if (d == 1) {
        const int M = W * W * L;
        // stage one: integer part on the coarse grid 1/M
        KnotSamples s1;
        for (int m = 0; m < M; ++m) {
            s1.xs.push_back(static_cast<double>(m) / M);
            s1.ys.push_back({static_cast<double>(m)});
            if (m < M - 1) {
                s1.xs.push_back(static_cast<double>(m + 1) / M - delta);
                s1.ys.push_back({static_cast<double>(m)});
            }
        }
        s1.xs.push_back(1.0);
        s1.ys.push_back({static_cast<double>(M - 1)});
        auto p1 = build_ladder(s1, 4 * W, true);
        if (p1.blocks > L) throw std::logic_error("discretizer: first stage too deep");
        // stage two: refinement of the remainder on the grid 1/(ML)
        KnotSamples s2;
        const double ML = static_cast<double>(M) * L;
        for (int l = 0; l < L; ++l) {
            s2.xs.push_back(l / ML);
            s2.ys.push_back({static_cast<double>(l)});
            if (l < L - 1) {
                s2.xs.push_back((l + 1) / ML - delta);
                s2.ys.push_back({static_cast<double>(l)});
            }
        }
        s2.xs.push_back(1.0 / M);
        s2.ys.push_back({static_cast<double>(L - 1)});
        auto p2 = build_ladder(s2, 6);
        if (p2.blocks > L) throw std::logic_error("discretizer: second stage too deep");
        // (p, xc) -> (phi2(xc - p/M), p/M)
        ReluNet rem = compose(p2.net, affine_net(2, {{-1.0 / M, 1.0}}, {0.0}));
        ReluNet keep = affine_net(2, {{1.0 / M, 0.0}}, {0.0});
        ReluNet stage2 = parallel({rem, keep}, {{}, {0.0}});
        stage2 = then_affine(stage2, {{1.0 / ML, 1.0}}, {0.0});
        net = compose(stage2, p1.net);
    } else {
        auto p = build_ladder(plateau_samples(K, delta, 1.0 / K), 4 * W);
        if (p.blocks > L) throw std::logic_error("discretizer: too deep");
        net = p.net;
    }
    net.meta = {"discretizer", 4 * W + 3, 4 * L, 2.0 * L / (static_cast<double>(K) * K * delta * delta)};
    return net;
}

} // namespace hgan
