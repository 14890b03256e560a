#include "hgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace hgan {

double euclidean(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

bool TransportPlan::check(const Vec& a, const Vec& b, double tol) const {
    Vec ra(a.size(), 0.0), rb(b.size(), 0.0);
    for (const auto& e : entries) {
        if (e.mass < 0.0 || e.source < 0 || e.source >= static_cast<int>(a.size()) || e.target < 0 ||
            e.target >= static_cast<int>(b.size()))
            return false;
        ra[e.source] += e.mass;
        rb[e.target] += e.mass;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(ra[i] - a[i]) > tol) return false;
    for (std::size_t j = 0; j < b.size(); ++j)
        if (std::abs(rb[j] - b[j]) > tol) return false;
    return true;
}

void TransportPlan::write_csv(const std::string& path) const {
    std::ostringstream f;
    f.precision(17);
    f << "source_idx,target_idx,mass\n";
    for (const auto& e : entries) f << e.source << ',' << e.target << ',' << e.mass << '\n';
    write_file_atomic(path, f.str());
}

double w1_1d_exact(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    a.validate();
    b.validate();
    if (a.dim() != 1 || b.dim() != 1) throw std::invalid_argument("w1_1d_exact: distributions must be one-dimensional");
    // integrate |F_a - F_b| over the merged breakpoints
    std::vector<std::pair<double, double>> ev;
    for (int i = 0; i < a.size(); ++i) ev.emplace_back(a.atoms[i][0], a.weights[i]);
    for (int i = 0; i < b.size(); ++i) ev.emplace_back(b.atoms[i][0], -b.weights[i]);
    std::sort(ev.begin(), ev.end());
    double diff = 0.0, total = 0.0;
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
        diff += ev[k].second;
        total += std::abs(diff) * (ev[k + 1].first - ev[k].first);
    }
    return total;
}

namespace {

void check_dims(const DiscreteDistribution& a, const DiscreteDistribution& b, const char* who) {
    a.validate();
    b.validate();
    if (a.dim() != b.dim()) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

TransportPlan plan_from(const std::vector<TransportArc>& arcs, const TransportSolution& sol) {
    TransportPlan p;
    for (std::size_t e = 0; e < arcs.size(); ++e)
        if (sol.flow[e] > 0.0) p.entries.push_back({arcs[e].i, arcs[e].j, sol.flow[e]});
    std::sort(p.entries.begin(), p.entries.end(), [](const auto& x, const auto& y) {
        return std::pair(x.source, x.target) < std::pair(y.source, y.target);
    });
    p.cost = sol.cost;
    return p;
}

} // namespace

std::pair<double, TransportPlan> w1_discrete_exact(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    check_dims(a, b, "w1_discrete_exact");
    const long long pairs = static_cast<long long>(a.size()) * b.size();
    if (pairs > kMaxExactPairs) {
        std::ostringstream m;
        m << "w1_discrete_exact: " << a.size() << " x " << b.size() << " = " << pairs << " pairs exceeds " << kMaxExactPairs;
        throw std::invalid_argument(m.str());
    }
    std::vector<TransportArc> arcs;
    arcs.reserve(pairs);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) arcs.push_back({i, j, euclidean(a.atoms[i], b.atoms[j])});
    auto sol = solve_transport(a.weights, b.weights, arcs);
    if (sol.artificial_flow > 1e-9) throw std::runtime_error("w1_discrete_exact: solver left mass unrouted");
    auto plan = plan_from(arcs, sol);
    return {plan.cost, plan};
}

namespace {

// k nearest rows of `to` for every row of `from` (flat, d columns), by ring
// search over a uniform bucket grid; falls back to brute force in high dimension
std::vector<int> knn(const std::vector<double>& from, const std::vector<double>& to, int d, int k) {
    const int nf = static_cast<int>(from.size() / d), nt = static_cast<int>(to.size() / d);
    k = std::min(k, nt);
    std::vector<int> out(static_cast<std::size_t>(nf) * k);
    auto dist2 = [d](const double* x, const double* y) {
        double t = 0.0;
        for (int c = 0; c < d; ++c) t += (x[c] - y[c]) * (x[c] - y[c]);
        return t;
    };
    if (d > 3 || static_cast<long long>(nf) * nt <= 1000000LL) {
#pragma omp parallel
        {
            std::vector<std::pair<double, int>> cand(nt);
#pragma omp for schedule(static)
            for (int i = 0; i < nf; ++i) {
                for (int j = 0; j < nt; ++j) cand[j] = {dist2(&from[static_cast<std::size_t>(i) * d], &to[static_cast<std::size_t>(j) * d]), j};
                std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
                for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(i) * k + t] = cand[t].second;
            }
        }
        return out;
    }
    Vec lo(d, INFINITY), hi(d, -INFINITY);
    for (const auto* f : {&from, &to})
        for (std::size_t r = 0; r < f->size() / d; ++r)
            for (int c = 0; c < d; ++c) {
                lo[c] = std::min(lo[c], (*f)[r * d + c]);
                hi[c] = std::max(hi[c], (*f)[r * d + c]);
            }
    double side = 0.0;
    for (int c = 0; c < d; ++c) side = std::max(side, hi[c] - lo[c]);
    if (side == 0.0) side = 1.0;
    // about two target points per cell if they filled the box
    const int per = std::max(1, std::min(256, static_cast<int>(std::pow(nt / 2.0, 1.0 / d))));
    const double h = side / per;
    std::vector<int> dims(d);
    for (int c = 0; c < d; ++c) dims[c] = std::max(1, std::min(per, static_cast<int>((hi[c] - lo[c]) / h) + 1));
    auto cell_of = [&](const double* x, int c) { return std::clamp(static_cast<int>((x[c] - lo[c]) / h), 0, dims[c] - 1); };
    long long ncell = 1;
    for (int c = 0; c < d; ++c) ncell *= dims[c];
    std::vector<int> start(ncell + 1, 0), items(nt);
    auto flat_cell = [&](const std::vector<int>& cc) {
        long long id = 0;
        for (int c = d - 1; c >= 0; --c) id = id * dims[c] + cc[c];
        return id;
    };
    std::vector<long long> cid(nt);
    std::vector<int> cc(d);
    for (int j = 0; j < nt; ++j) {
        for (int c = 0; c < d; ++c) cc[c] = cell_of(&to[static_cast<std::size_t>(j) * d], c);
        cid[j] = flat_cell(cc);
        ++start[cid[j] + 1];
    }
    for (long long c = 0; c < ncell; ++c) start[c + 1] += start[c];
    {
        std::vector<int> fill(start.begin(), start.end() - 1);
        for (int j = 0; j < nt; ++j) items[fill[cid[j]]++] = j;
    }
    int maxdim = *std::max_element(dims.begin(), dims.end());
#pragma omp parallel
    {
        std::vector<std::pair<double, int>> best;
        std::vector<int> home(d), cur(d);
#pragma omp for schedule(dynamic, 64)
        for (int i = 0; i < nf; ++i) {
            const double* x = &from[static_cast<std::size_t>(i) * d];
            for (int c = 0; c < d; ++c) home[c] = cell_of(x, c);
            best.clear();
            for (int r = 0; r <= maxdim; ++r) {
                // visit cells at Chebyshev distance exactly r from home
                std::function<void(int, bool)> walk = [&](int c, bool on_shell) {
                    if (c == d) {
                        if (!on_shell) return;
                        long long id = flat_cell(cur);
                        for (int t = start[id]; t < start[id + 1]; ++t) {
                            int j = items[t];
                            best.emplace_back(dist2(x, &to[static_cast<std::size_t>(j) * d]), j);
                        }
                        return;
                    }
                    for (int o = -r; o <= r; ++o) {
                        int v = home[c] + o;
                        if (v < 0 || v >= dims[c]) continue;
                        cur[c] = v;
                        walk(c + 1, on_shell || o == -r || o == r);
                    }
                };
                walk(0, r == 0);
                if (static_cast<int>(best.size()) >= k) {
                    std::nth_element(best.begin(), best.begin() + (k - 1), best.end());
                    best.resize(k);
                    // anything unvisited lies at least r*h away
                    double far = 0.0;
                    for (auto& b : best) far = std::max(far, b.first);
                    if (far <= (r * h) * (r * h)) break;
                }
            }
            std::sort(best.begin(), best.end());
            for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(i) * k + t] = best[t].second;
        }
    }
    return out;
}

} // namespace

CertifiedW1 w1_certified(const DiscreteDistribution& a, const DiscreteDistribution& b, int neighbours) {
    check_dims(a, b, "w1_certified");
    if (neighbours < 1) throw std::invalid_argument("w1_certified: neighbours must be >= 1");
    const int na = a.size(), nb = b.size(), d = a.dim();
    auto flat = [d](const DiscreteDistribution& g) {
        std::vector<double> f(static_cast<std::size_t>(g.size()) * d);
        for (int i = 0; i < g.size(); ++i) std::copy(g.atoms[i].begin(), g.atoms[i].end(), f.begin() + static_cast<std::size_t>(i) * d);
        return f;
    };
    const std::vector<double> fa = flat(a), fb = flat(b);
    auto cost = [&](int i, int j) {
        return euclidean(std::span<const double>(&fa[static_cast<std::size_t>(i) * d], d),
                         std::span<const double>(&fb[static_cast<std::size_t>(j) * d], d));
    };
    std::set<std::pair<int, int>> have;
    // a wider candidate list per source is priced every round; the full
    // all-pairs pricing only runs once the candidates are clean
    const int kc = std::min(nb, 4 * neighbours);
    const auto cand = knn(fa, fb, d, kc);
    for (int i = 0; i < na; ++i)
        for (int t = 0; t < std::min(neighbours, kc); ++t) have.insert({i, cand[static_cast<std::size_t>(i) * kc + t]});
    {
        const int kb = std::min(na, neighbours);
        const auto back = knn(fb, fa, d, kb);
        for (int j = 0; j < nb; ++j)
            for (int t = 0; t < kb; ++t) have.insert({back[static_cast<std::size_t>(j) * kb + t], j});
    }
    // north-west corner plan along the coordinate-sum order: its support makes
    // the sparse instance feasible, so the duals are meaningful from round one
    auto order = [](const DiscreteDistribution& g) {
        std::vector<std::pair<double, int>> o(g.size());
        for (int i = 0; i < g.size(); ++i) {
            double t = 0.0;
            for (double v : g.atoms[i]) t += v;
            o[i] = {t, i};
        }
        std::sort(o.begin(), o.end());
        return o;
    };
    {
        auto oa = order(a), ob = order(b);
        std::size_t i = 0, j = 0;
        double ra = a.weights[oa[0].second], rb = b.weights[ob[0].second];
        while (i < oa.size() && j < ob.size()) {
            have.insert({oa[i].second, ob[j].second});
            if (ra < rb) {
                rb -= ra;
                if (++i < oa.size()) ra = a.weights[oa[i].second];
            } else {
                ra -= rb;
                if (++j < ob.size()) rb = b.weights[ob[j].second];
            }
        }
        // rounding can leave one side unfinished; tie the leftovers to the last partner
        for (; i < oa.size(); ++i) have.insert({oa[i].second, ob.back().second});
        for (; j < ob.size(); ++j) have.insert({oa.back().second, ob[j].second});
    }
    // bounding-box diagonal bounds every pair cost
    Vec lo(d, INFINITY), hi(d, -INFINITY);
    for (const auto* g : {&a, &b})
        for (const auto& p : g->atoms)
            for (int k = 0; k < d; ++k) {
                lo[k] = std::min(lo[k], p[k]);
                hi[k] = std::max(hi[k], p[k]);
            }
    const double maxc = euclidean(lo, hi);
    // an eps-feasible dual bounds the optimality gap by eps times the total mass
    const double tol = 1e-10 * (1.0 + maxc);

    CertifiedW1 res;
    TransportSolver solver(a.weights, b.weights, maxc);
    std::vector<TransportArc> arcs;
    for (auto [i, j] : have) arcs.push_back({i, j, cost(i, j)});
    auto take = [&](std::vector<std::vector<int>>& found) {
        arcs.clear();
        for (int i = 0; i < na; ++i)
            for (int j : found[i])
                if (have.insert({i, j}).second) arcs.push_back({i, j, cost(i, j)});
    };
    for (;;) {
        solver.add_arcs(arcs);
        auto sol = solver.solve();
        ++res.rounds;
        std::vector<std::vector<int>> found(na);
        for (int i = 0; i < na; ++i)
            for (int t = 0; t < kc; ++t) {
                int j = cand[static_cast<std::size_t>(i) * kc + t];
                if (cost(i, j) - sol.u[i] - sol.v[j] < -tol) found[i].push_back(j);
            }
        take(found);
        if (!arcs.empty()) continue;
        // full pricing, keeping the most violated few per source row
#pragma omp parallel
        {
            std::vector<std::pair<double, int>> viol;
            std::vector<double> dist(nb);
#pragma omp for schedule(dynamic, 64)
            for (int i = 0; i < na; ++i) {
                viol.clear();
                const double* x = &fa[static_cast<std::size_t>(i) * d];
                const double ui = sol.u[i];
                for (int j = 0; j < nb; ++j) {
                    const double* q = &fb[static_cast<std::size_t>(j) * d];
                    double t = 0.0;
                    for (int c = 0; c < d; ++c) t += (x[c] - q[c]) * (x[c] - q[c]);
                    dist[j] = t;
                }
                for (int j = 0; j < nb; ++j) {
                    // violated iff dist < u + v - tol; compare squares first
                    double r = ui + sol.v[j] - tol;
                    if (r > 0.0 && dist[j] < r * r) viol.emplace_back(std::sqrt(dist[j]) - ui - sol.v[j], j);
                }
                const int keep = std::min<int>(neighbours, static_cast<int>(viol.size()));
                std::partial_sort(viol.begin(), viol.begin() + keep, viol.end());
                for (int t = 0; t < keep; ++t) found[i].push_back(viol[t].second);
            }
        }
        take(found);
        if (arcs.empty()) {
            if (sol.artificial_flow > 1e-9) throw std::runtime_error("w1_certified: dual feasible but mass unrouted");
            res.plan = plan_from(solver.arcs(), sol);
            res.value = res.plan.cost;
            res.arcs = static_cast<long long>(solver.arc_count());
            res.gap_bound = tol;
            return res;
        }
    }
}

PushforwardW1 w1_pushforward(const DiscreteDistribution& gamma, const SampleSet& s, double snap_tol) {
    gamma.validate();
    if (s.points.empty()) throw std::invalid_argument("w1_pushforward: empty sample set");
    if (s.dim() != gamma.dim()) throw std::invalid_argument("w1_pushforward: dimension mismatch");
    const double m = static_cast<double>(s.size());
    PushforwardW1 r;
    double shift = 0.0;
    long long snapped = 0;
    std::map<Vec, long long> count;
    std::vector<Vec> moved(s.points.size());
    for (std::size_t k = 0; k < s.points.size(); ++k) {
        const Vec& p = s.points[k];
        int best = -1;
        double bd = INFINITY;
        for (int i = 0; i < gamma.size(); ++i) {
            double dd = euclidean(p, gamma.atoms[i]);
            if (dd < bd) {
                bd = dd;
                best = i;
            }
        }
        moved[k] = bd <= snap_tol ? gamma.atoms[best] : p;
        if (bd <= snap_tol) {
            shift += bd;
            ++snapped;
        }
        ++count[moved[k]];
    }
    DiscreteDistribution emp;
    for (const auto& [p, c] : count) {
        emp.atoms.push_back(p);
        emp.weights.push_back(static_cast<double>(c) / m);
    }
    r.support = emp.size();
    r.snapped = static_cast<double>(snapped) / m;
    TransportPlan plan;
    if (static_cast<long long>(emp.size()) * gamma.size() <= kMaxExactPairs) plan = w1_discrete_exact(emp, gamma).second;
    else plan = w1_certified(emp, gamma).plan;
    r.value = plan.cost + shift / m;
    // per-sample cost: each merged point spreads its mass over its plan entries
    Vec cost_of(emp.size(), 0.0);
    for (const auto& e : plan.entries)
        cost_of[e.source] += e.mass * euclidean(emp.atoms[e.source], gamma.atoms[e.target]) / emp.weights[e.source];
    double mean = 0.0, sq = 0.0;
    for (int i = 0; i < emp.size(); ++i) {
        mean += emp.weights[i] * cost_of[i];
        sq += emp.weights[i] * cost_of[i] * cost_of[i];
    }
    r.mc_se = std::sqrt(std::max(0.0, sq - mean * mean) / m);
    return r;
}

double lipschitz_lower_sampled(const ReluNet& net, const Box& box, int pairs, unsigned long long seed) {
    const int d = net.input_dim;
    if (pairs < 1) throw std::invalid_argument("lipschitz_lower_sampled: pairs must be >= 1");
    if (static_cast<int>(box.lo.size()) != d || static_cast<int>(box.hi.size()) != d)
        throw std::invalid_argument("lipschitz_lower_sampled: box dimension mismatch");
    for (int j = 0; j < d; ++j)
        if (!(box.hi[j] > box.lo[j])) throw std::invalid_argument("lipschitz_lower_sampled: degenerate box");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> coord(0, d - 1);
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(pairs) * d);
    ys.reserve(static_cast<std::size_t>(pairs) * d);
    const double h = 1e-6;
    for (int t = 0; t < pairs; ++t) {
        Vec x(d), y(d);
        for (int j = 0; j < d; ++j) x[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * u(rng);
        if (t % 2 == 0) {
            for (int j = 0; j < d; ++j) y[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * u(rng);
        } else {
            y = x;
            int j = coord(rng);
            double step = h * (box.hi[j] - box.lo[j]);
            y[j] = x[j] + step <= box.hi[j] ? x[j] + step : x[j] - step;
        }
        xs.insert(xs.end(), x.begin(), x.end());
        ys.insert(ys.end(), y.begin(), y.end());
    }
    auto fx = eval_batch(net, xs), fy = eval_batch(net, ys);
    const int od = net.output_dim();
    double best = 0.0;
    for (int t = 0; t < pairs; ++t) {
        double dx = euclidean(std::span<const double>(&xs[t * d], d), std::span<const double>(&ys[t * d], d));
        if (dx == 0.0) continue;
        double df = euclidean(std::span<const double>(&fx[t * od], od), std::span<const double>(&fy[t * od], od));
        best = std::max(best, df / dx);
    }
    return best;
}

namespace {

double mean_output(const ReluNet& h, const SampleSet& s) {
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(s.size()) * s.dim());
    for (const auto& p : s.points) x.insert(x.end(), p.begin(), p.end());
    auto y = eval_batch(h, x);
    double m = 0.0;
    for (double v : y) m += v;
    return m / static_cast<double>(y.size());
}

} // namespace

double ipm_finite_family(const SampleSet& mu, const SampleSet& gamma, const std::vector<ReluNet>& family) {
    if (family.empty()) throw std::invalid_argument("ipm_finite_family: empty family");
    if (mu.points.empty() || gamma.points.empty()) throw std::invalid_argument("ipm_finite_family: empty sample set");
    if (mu.dim() != gamma.dim()) throw std::invalid_argument("ipm_finite_family: sample dimension mismatch");
    double best = -INFINITY;
    for (const auto& h : family) {
        if (h.input_dim != mu.dim() || h.output_dim() != 1)
            throw std::invalid_argument("ipm_finite_family: family member has the wrong shape");
        best = std::max(best, mean_output(h, mu) - mean_output(h, gamma));
    }
    return best;
}

BoxCount box_counting_dim(const SampleSet& s, const Vec& eps_grid) {
    if (s.points.empty()) throw std::invalid_argument("box_counting_dim: empty sample set");
    if (eps_grid.size() < 2) throw std::invalid_argument("box_counting_dim: need at least two scales");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw std::invalid_argument("box_counting_dim: scales must be positive");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw std::invalid_argument("box_counting_dim: scales must decrease");
    }
    const int d = s.dim();
    Vec lo(d, INFINITY);
    for (const auto& p : s.points)
        for (int j = 0; j < d; ++j) lo[j] = std::min(lo[j], p[j]);
    BoxCount bc;
    std::vector<std::pair<double, double>> pts;
    std::vector<long long> key(d);
    for (double eps : eps_grid) {
        std::set<std::vector<long long>> boxes;
        for (const auto& p : s.points) {
            for (int j = 0; j < d; ++j) key[j] = static_cast<long long>(std::floor((p[j] - lo[j]) / eps));
            boxes.insert(key);
        }
        bc.counts.push_back(static_cast<long long>(boxes.size()));
    }
    // middle window: drop the coarsest and finest scale when there are enough
    std::size_t first = 0, last = eps_grid.size();
    if (eps_grid.size() >= 4) {
        first = 1;
        last = eps_grid.size() - 1;
    }
    bool all_one = std::all_of(bc.counts.begin(), bc.counts.end(), [](long long c) { return c == 1; });
    if (all_one) {
        bc.degenerate = true;
        bc.dimension = 0.0;
        return bc;
    }
    for (std::size_t i = first; i < last; ++i)
        pts.emplace_back(1.0 / eps_grid[i], static_cast<double>(bc.counts[i]));
    if (pts.size() >= 3) {
        bc.dimension = rate_fit(pts).slope;
    } else {
        bc.dimension = std::log(pts[1].second / pts[0].second) / std::log(pts[1].first / pts[0].first);
    }
    return bc;
}

double entropy_integral_bound(double B, long long n, double eta, double C) {
    if (!(B > 0.0) || !(C > 0.0)) throw std::invalid_argument("entropy_integral_bound: B and C must be positive");
    if (n < 1) throw std::invalid_argument("entropy_integral_bound: n must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("entropy_integral_bound: eta must be positive");
    const double top = B / 2, rc = std::sqrt(C), rn = std::sqrt(static_cast<double>(n));
    // closed-form inner integral of sqrt(C) eps^-eta from delta to B/2
    auto integral = [&](double delta) {
        if (std::abs(eta - 1.0) < 1e-12) return rc * std::log(top / delta);
        return rc * (std::pow(top, 1 - eta) - std::pow(delta, 1 - eta)) / (1 - eta);
    };
    const int grid = 10000;
    const double lmin = std::log(top) - 40.0, lmax = std::log(top);
    double best = INFINITY;
    for (int k = 0; k < grid; ++k) {
        double delta = std::exp(lmin + (lmax - lmin) * k / grid);
        best = std::min(best, delta + 3.0 / rn * integral(delta));
    }
    return 8.0 * best;
}

double pdim_bound(double W, double L) {
    if (W < 1 || L < 1) throw std::invalid_argument("pdim_bound: W and L must be >= 1");
    const double U = W * W * L;
    return U * L * std::log(U);
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("rate_fit: need at least three points");
    RateFit f;
    f.points = points;
    double sx = 0, sy = 0;
    for (auto [n, e] : points) {
        if (!(n > 0.0)) throw std::invalid_argument("rate_fit: sizes must be positive");
        if (!(e > 0.0)) throw std::invalid_argument("rate_fit: errors must be positive");
        sx += std::log(n);
        sy += std::log(e);
    }
    const double k = static_cast<double>(points.size()), mx = sx / k, my = sy / k;
    double sxx = 0, sxy = 0, syy = 0;
    for (auto [n, e] : points) {
        double x = std::log(n) - mx, y = std::log(e) - my;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    if (sxx == 0.0) throw std::invalid_argument("rate_fit: sizes must not all be equal");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double res = syy - f.slope * sxy;
    f.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - res / syy, 0.0, 1.0);
    return f;
}

} // namespace hgan
