#include "hgan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hgan/bits.hpp"
#include "hgan/interp.hpp"
#include "hgan/metrics.hpp"
#include "hgan/poly.hpp"

namespace hgan {

using json = nlohmann::json;

BoundReport make_report(const std::string& experiment, const std::string& tag, const json& params, double claimed,
                        double measured, unsigned long long seed, long long runtime_ms) {
    BoundReport r;
    r.experiment = experiment;
    r.tag = tag;
    r.param_json = params.dump();
    r.claimed = claimed;
    r.measured = measured;
    r.margin = claimed - measured;
    r.pass = r.margin >= 0.0;  // NaN fails
    r.runtime_ms = runtime_ms;
    r.seed = seed;
    return r;
}

// ---- configuration ----

namespace {

struct ExperimentKeys {
    std::vector<std::string> required, optional;
};

const std::map<std::string, ExperimentKeys>& experiment_keys() {
    static const std::map<std::string, ExperimentKeys> k = {
        {"verify-interp", {{"W", "L", "seed"}, {"d"}}},
        {"verify-bits", {{"W", "L", "seed"}, {"s"}}},
        {"verify-poly", {{"W", "L", "seed"}, {}}},
        {"verify-holder", {{"W", "L", "beta", "d", "seed"}, {"target", "grid", "lip_pairs"}}},
        {"verify-memorize", {{"d", "seed"}, {"W", "L", "reps", "m", "eps", "source"}}},
        {"rate-empirical", {{"d", "n_min", "n_max", "reps", "seed"}, {"beta", "tol", "memorize"}}},
        {"rate-lowdim", {{"d", "d_star", "n_min", "n_max", "reps", "seed"}, {"beta", "tol", "V", "half_width", "memorize"}}},
        {"oracle-decomposition", {{"seed"}, {"reps"}}},
        {"dim-estimate", {{"d", "d_star", "seed"}, {"n", "V"}}},
    };
    return k;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        T v;
        if constexpr (std::is_same_v<T, int>) v = std::stoi(text, &used);
        else if constexpr (std::is_same_v<T, unsigned long long>) v = std::stoull(text, &used);
        else v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError("parameter '" + key + "': cannot parse '" + text + "'");
    }
}

long long ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

const std::vector<std::string>& ExperimentConfig::experiments() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : experiment_keys()) v.push_back(k);
        return v;
    }();
    return names;
}

void ExperimentConfig::validate() const {
    auto it = experiment_keys().find(experiment);
    if (it == experiment_keys().end()) throw UsageError("unknown experiment '" + experiment + "'");
    for (const auto& k : it->second.required)
        if (!has(k)) throw UsageError(experiment + ": missing required parameter '" + k + "'");
    for (const auto& [k, _] : params) {
        const auto& ks = it->second;
        if (std::find(ks.required.begin(), ks.required.end(), k) == ks.required.end() &&
            std::find(ks.optional.begin(), ks.optional.end(), k) == ks.optional.end())
            throw UsageError(experiment + ": unknown parameter '" + k + "'");
    }
    seed();
}

int ExperimentConfig::get_int(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw UsageError(experiment + ": missing required parameter '" + key + "'");
    return parse_number<int>(key, it->second);
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double ExperimentConfig::get_double(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw UsageError(experiment + ": missing required parameter '" + key + "'");
    return parse_number<double>(key, it->second);
}

double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

unsigned long long ExperimentConfig::seed() const {
    auto it = params.find("seed");
    if (it == params.end()) throw UsageError(experiment + ": missing required parameter 'seed'");
    return parse_number<unsigned long long>("seed", it->second);
}

bool RunResult::all_pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const BoundReport& r) { return r.pass; });
}

// ---- output ----

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

} // namespace

std::string reports_csv(const std::vector<BoundReport>& reports, bool timing) {
    std::ostringstream o;
    o << "experiment,tag,param_json,claimed,measured,margin,pass,runtime_ms,seed\n";
    for (const auto& r : reports)
        o << csv_field(r.experiment) << ',' << csv_field(r.tag) << ',' << csv_field(r.param_json) << ','
          << num(r.claimed) << ',' << num(r.measured) << ',' << num(r.margin) << ',' << (r.pass ? "true" : "false")
          << ',' << (timing ? r.runtime_ms : 0) << ',' << r.seed << '\n';
    return o.str();
}

void write_reports(const std::string& path, const RunResult& result, bool timing) {
    write_file_atomic(path, reports_csv(result.reports, timing));
    json s = result.summary;
    long long passed = std::count_if(result.reports.begin(), result.reports.end(), [](auto& r) { return r.pass; });
    s["reports"] = result.reports.size();
    s["passed"] = passed;
    s["failed"] = static_cast<long long>(result.reports.size()) - passed;
    s["all_pass"] = result.all_pass();
    if (!timing) s.erase("runtime_ms");
    write_file_atomic(path + ".summary.json", s.dump(2) + "\n");
    for (const auto& [suffix, body] : result.files) write_file_atomic(path + suffix, body);
}

// ---- measurement helpers ----

std::vector<double> halton_points(long long n, int d) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    if (d < 1 || d > 10) throw std::invalid_argument("halton_points: d must be in 1..10");
    std::vector<double> x(static_cast<std::size_t>(n) * d);
    for (long long i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            double f = 1.0, r = 0.0;
            for (long long k = i + 1; k > 0; k /= primes[j]) {
                f /= primes[j];
                r += f * static_cast<double>(k % primes[j]);
            }
            x[static_cast<std::size_t>(i) * d + j] = r;
        }
    return x;
}

double holder_sup_error(const ReluNet& net, const HolderTarget& h, int per_axis, double* sup_abs) {
    const int d = h.d;
    std::vector<double> x;
    if (d <= 2) {
        long long total = 1;
        for (int j = 0; j < d; ++j) total *= per_axis;
        x.resize(static_cast<std::size_t>(total) * d);
        for (long long i = 0; i < total; ++i) {
            long long r = i;
            for (int j = 0; j < d; ++j) {
                x[static_cast<std::size_t>(i) * d + j] = static_cast<double>(r % per_axis) / (per_axis - 1);
                r /= per_axis;
            }
        }
    } else {
        x = halton_points(per_axis, d);
    }
    auto y = eval_batch(net, x);
    double err = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        err = std::max(err, std::abs(y[i] - h.f(std::span<const double>(&x[i * d], d))));
        sup = std::max(sup, std::abs(y[i]));
    }
    if (sup_abs) *sup_abs = sup;
    return err;
}

namespace {

constexpr double kRoundoff = 1e-12;

// exceptions may not leave an OpenMP region: keep the first, rethrow after the loop
class FirstError {
public:
    template <class F>
    void guard(F&& f) {
        try {
            f();
        } catch (...) {
#pragma omp critical(hgan_first_error)
            if (!e_) e_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (e_) std::rethrow_exception(e_);
    }

private:
    std::exception_ptr e_;
};

// fixed low-dimensional supports inside [0,1]^d: a segment, or a planar patch
// spanned by two nonnegative direction patterns whose weights sum to one
Vec lowdim_point(int d, int d_star, double u, double v) {
    static const double w1[] = {1.0, 0.3, 0.5}, w2[] = {0.0, 0.7, 0.5}, seg[] = {1.0, 0.6, 0.8};
    Vec p(d);
    for (int j = 0; j < d; ++j) {
        double t = d_star == 1 ? seg[j % 3] * u : w1[j % 3] * u + w2[j % 3] * v;
        p[j] = 0.15 + 0.7 * t;
    }
    return p;
}

Vec lowdim_draw(std::mt19937_64& rng, int d, int d_star, double V) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng), v = d_star == 2 ? unif(rng) : 0.0;
    Vec p = lowdim_point(d, d_star, u, v);
    if (V > 0.0) {
        std::normal_distribution<double> g(0.0, std::sqrt(V / d));
        for (auto& c : p) c += g(rng);
    }
    return p;
}

} // namespace

SampleSet lowdim_samples(int n, int d, int d_star, double V, unsigned long long seed) {
    if (d < 1 || n < 1) throw std::invalid_argument("lowdim_samples: need n, d >= 1");
    if (d_star != 1 && d_star != 2) throw std::invalid_argument("lowdim_samples: d_star must be 1 or 2");
    if (d_star >= d) throw std::invalid_argument("lowdim_samples: d_star must be below d");
    if (V < 0.0) throw std::invalid_argument("lowdim_samples: V must be nonnegative");
    std::mt19937_64 rng(seed);
    SampleSet s;
    s.seed = seed;
    for (int i = 0; i < n; ++i) s.points.push_back(lowdim_draw(rng, d, d_star, V));
    return s;
}

SlopeCI bootstrap_slope(const std::vector<RatePoint>& points, int resamples, unsigned long long seed) {
    std::map<int, std::vector<const RatePoint*>> by_n;
    for (const auto& p : points) by_n[p.n].push_back(&p);
    auto fit_means = [&](auto pick) {
        std::vector<std::pair<double, double>> pts;
        for (auto& [n, reps] : by_n) {
            double s = 0.0;
            for (std::size_t r = 0; r < reps.size(); ++r) {
                const RatePoint* p = reps[pick(reps.size(), r)];
                s += p->w1 + p->certificate;
            }
            pts.emplace_back(n, s / reps.size());
        }
        return rate_fit(pts);
    };
    SlopeCI ci;
    ci.fit = fit_means([](std::size_t, std::size_t r) { return r; });
    std::mt19937_64 rng(seed);
    std::vector<double> slopes;
    for (int b = 0; b < resamples; ++b)
        slopes.push_back(fit_means([&](std::size_t m, std::size_t) {
            return std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        }).slope);
    std::sort(slopes.begin(), slopes.end());
    if (!slopes.empty()) {
        ci.lo = slopes[static_cast<std::size_t>(std::floor(0.025 * (slopes.size() - 1)))];
        ci.hi = slopes[static_cast<std::size_t>(std::ceil(0.975 * (slopes.size() - 1)))];
    }
    return ci;
}

// ---- experiments ----

namespace {

struct Ctx {
    const ExperimentConfig& cfg;
    RunResult& out;
    json base;  // parameters common to every report

    void add(const std::string& tag, json extra, double claimed, double measured, long long ms) {
        json p = base;
        for (auto& [k, v] : extra.items()) p[k] = v;
        out.reports.push_back(make_report(cfg.experiment, tag, p, claimed, measured, cfg.seed(), ms));
    }
    void structural(const std::string& tag, const ReluNet& net, long long ms) {
        auto dm = net.dims();
        add(tag + "/width", {}, net.meta.claimed_width, dm.width, ms);
        add(tag + "/depth", {}, net.meta.claimed_depth, dm.depth, ms);
    }
};

json base_params(const ExperimentConfig& cfg) {
    json p = json::object();
    for (const auto& [k, v] : cfg.params) {
        if (k == "seed") continue;
        try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used == v.size()) {
                if (d == std::floor(d) && std::abs(d) < 1e15) p[k] = static_cast<long long>(d);
                else p[k] = d;
                continue;
            }
        } catch (const std::exception&) {
        }
        p[k] = v;
    }
    return p;
}

void verify_interp(Ctx& c) {
    const int W = c.cfg.get_int("W"), L = c.cfg.get_int("L"), d = c.cfg.get_int("d", 1);
    std::mt19937_64 rng(c.cfg.seed());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto knots = [&](int N, int dim) {
        KnotSamples s;
        double x = 0.0;
        for (int i = 0; i < N + 2; ++i) {
            x += 0.5 + u(rng);
            s.xs.push_back(x);
            Vec y(dim);
            for (auto& v : y) v = u(rng);
            s.ys.push_back(y);
        }
        for (auto& v : s.xs) v /= x;
        return s;
    };
    auto max_err = [](const ReluNet& net, const KnotSamples& s, int pts) {
        double lo = s.xs.front() - 1, hi = s.xs.back() + 1, e = 0.0;
        std::vector<double> x(pts);
        for (int i = 0; i < pts; ++i) x[i] = lo + (hi - lo) * i / (pts - 1);
        x.insert(x.end(), s.xs.begin(), s.xs.end());
        const int dim = s.dim();
        auto y = eval_batch(net, x);
        for (std::size_t i = 0; i < x.size(); ++i) {
            Vec ref = eval_pwl(s, x[i]);
            for (int j = 0; j < dim; ++j) e = std::max(e, std::abs(y[i * dim + j] - ref[j]));
        }
        return e;
    };
    if (W >= 6 && L >= 1) {
        auto t0 = std::chrono::steady_clock::now();
        const int N = (W / 6) * W * L;
        auto s = knots(N, 1);
        auto net = linear_interpolator(s, W, L);
        double e = max_err(net, s, 10 * (N + 2));
        auto ms = ms_since(t0);
        c.add("linear_interpolator/error", {{"N", N}}, 1e-9, e, ms);
        c.structural("linear_interpolator", net, ms);
    }
    if (W >= 7 * d + 1 && L >= 2) {
        auto t0 = std::chrono::steady_clock::now();
        const int N = (W - d - 1) * ((W - d - 1) / (6 * d)) * (L / 2);
        auto s = knots(N, d);
        auto net = pwl_path_net(s, W, L);
        double e = max_err(net, s, 10 * (N + 2));
        auto ms = ms_since(t0);
        c.add("pwl_path_net/error", {{"N", N}}, 1e-9, e, ms);
        c.structural("pwl_path_net", net, ms);
    }
    if (W >= 6 && L >= 2) {
        auto t0 = std::chrono::steady_clock::now();
        const int K = discretizer_K(W, L, d);
        const double delta = 1.0 / (3.0 * K);
        auto net = discretizer(W, L, d, delta);
        std::vector<double> x;
        std::vector<double> want;
        for (int k = 0; k < K; ++k)
            for (int t = 0; t < 10; ++t) {
                double hi = k + 1 == K ? 1.0 : (k + 1.0) / K - delta;
                x.push_back(k / double(K) + (hi - k / double(K)) * t / 9.0);
                want.push_back(k / double(K));
            }
        auto y = eval_batch(net, x);
        double e = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) e = std::max(e, std::abs(y[i] - want[i]));
        std::vector<double> wide(20001);
        for (int i = 0; i <= 20000; ++i) wide[i] = -1.0 + 3.0 * i / 20000;
        auto yw = eval_batch(net, wide);
        double out = 0.0;
        for (double v : yw) out = std::max({out, -v, v - 1.0});
        auto ms = ms_since(t0);
        c.add("discretizer/plateau", {{"K", K}}, 1e-9, e, ms);
        c.add("discretizer/range", {{"K", K}}, 0.0, out, ms);
        c.structural("discretizer", net, ms);
    }
}

void verify_bits(Ctx& c) {
    const int W = c.cfg.get_int("W"), L = c.cfg.get_int("L"), s = c.cfg.get_int("s", 1);
    std::mt19937_64 rng(c.cfg.seed());
    if (L <= kMaxBitLength) {
        auto t0 = std::chrono::steady_clock::now();
        auto net = bit_extractor(L);
        std::vector<double> x;
        std::vector<int> want;
        for (int v = 0; v < (1 << L); ++v)
            for (int l = 1; l <= L; ++l) {
                x.push_back(v / double(1 << L));
                x.push_back(l);
                want.push_back((v >> (L - l)) & 1);
            }
        auto y = eval_batch(net, x);
        double e = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) e = std::max(e, std::abs(y[i] - want[i]));
        auto ms = ms_since(t0);
        c.add("bit_extractor/error", {{"cases", want.size()}}, 1e-9, e, ms);
        c.structural("bit_extractor", net, ms);
    }
    if (W >= 6 && L >= 2) {
        const int n = W * W * L * L;
        auto t0 = std::chrono::steady_clock::now();
        std::vector<int> theta(n);
        for (auto& b : theta) b = static_cast<int>(rng() & 1);
        auto net = binary_fitter(theta, W, L);
        std::vector<double> x(n);
        std::iota(x.begin(), x.end(), 0.0);
        auto y = eval_batch(net, x);
        double e = 0.0;
        for (int i = 0; i < n; ++i) e = std::max(e, std::abs(y[i] - theta[i]));
        auto ms = ms_since(t0);
        c.add("binary_fitter/error", {{"cases", n}}, 1e-9, e, ms);
        c.structural("binary_fitter", net, ms);

        t0 = std::chrono::steady_clock::now();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vec xi(n);
        for (auto& v : xi) v = u(rng);
        xi[0] = 0.0;
        xi[n - 1] = 1.0;
        auto vf = value_fitter(xi, W, L, s);
        auto yv = eval_batch(vf, x);
        double ev = 0.0;
        for (int i = 0; i < n; ++i) ev = std::max(ev, std::abs(yv[i] - xi[i]));
        ms = ms_since(t0);
        c.add("value_fitter/error", {{"cases", n}, {"s", s}}, std::pow(double(W) * L, -2.0 * s), ev, ms);
        c.structural("value_fitter", vf, ms);
    }
}

void verify_poly(Ctx& c) {
    const int W = c.cfg.get_int("W"), L = c.cfg.get_int("L");
    std::mt19937_64 rng(c.cfg.seed());
    auto t0 = std::chrono::steady_clock::now();
    auto prod = product_net(W, L);
    std::vector<double> x;
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 200; ++j) {
            x.push_back(-1.0 + 2.0 * i / 199);
            x.push_back(-1.0 + 2.0 * j / 199);
        }
    auto y = eval_batch(prod, x);
    double e = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) e = std::max(e, std::abs(y[k] - x[2 * k] * x[2 * k + 1]));
    auto ms = ms_since(t0);
    c.add("product_net/error", {{"grid", 200}}, 6.0 * std::pow(double(W), -L), e, ms);

    // modulus on random pairs, half of them at short range
    t0 = std::chrono::steady_clock::now();
    const int pairs = 100000;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> p(4 * static_cast<std::size_t>(pairs));
    for (int k = 0; k < pairs; ++k) {
        double a = u(rng), b = u(rng);
        double scale = k % 2 ? 1e-3 : 1.0;
        double a2 = std::clamp(k % 2 ? a + scale * u(rng) : u(rng), -1.0, 1.0);
        double b2 = std::clamp(k % 2 ? b + scale * u(rng) : u(rng), -1.0, 1.0);
        p[4 * k] = a;
        p[4 * k + 1] = b;
        p[4 * k + 2] = a2;
        p[4 * k + 3] = b2;
    }
    auto yp = eval_batch(prod, p);
    double mod = 0.0;
    for (int k = 0; k < 2 * pairs; k += 2) {
        double den = std::abs(p[2 * k] - p[2 * k + 2]) + std::abs(p[2 * k + 1] - p[2 * k + 3]);
        if (den > 0.0) mod = std::max(mod, std::abs(yp[k] - yp[k + 1]) / den);
    }
    ms = ms_since(t0);
    c.add("product_net/modulus", {{"pairs", pairs}}, 7.0, mod, ms);
    c.structural("product_net", prod, ms);

    t0 = std::chrono::steady_clock::now();
    auto sq = square_net(W, L);
    std::vector<double> g(10001);
    for (int i = 0; i <= 10000; ++i) g[i] = i / 10000.0;
    auto ys = eval_batch(sq, g);
    double es = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) es = std::max(es, std::abs(ys[i] - g[i] * g[i]));
    ms = ms_since(t0);
    c.add("square_net/error", {{"grid", 10001}}, std::pow(double(W), -L) / 4.0, es, ms);
    const int nl = square_level(W) * L;
    if (nl <= 20) {
        std::vector<double> kn((1 << nl) + 1);
        for (int j = 0; j <= (1 << nl); ++j) kn[j] = j / double(1 << nl);
        auto yk = eval_batch(sq, kn);
        double ek = 0.0;
        for (std::size_t j = 0; j < kn.size(); ++j) ek = std::max(ek, std::abs(yk[j] - kn[j] * kn[j]));
        c.add("square_net/knots", {{"knots", kn.size()}}, 1e-9, ek, ms_since(t0));
    }
    c.structural("square_net", sq, ms);
}

void verify_holder(Ctx& c) {
    const int W = c.cfg.get_int("W"), L = c.cfg.get_int("L"), d = c.cfg.get_int("d");
    const double beta = c.cfg.get_double("beta");
    const std::string which = c.cfg.get("target", "all");
    const int pairs = c.cfg.get_int("lip_pairs", 1000);
    HolderBudget b;
    try {
        b = HolderBudget::make(W, L, beta, d);
    } catch (const BudgetError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const int grid = c.cfg.get_int("grid", d == 1 ? 20 * b.K + 1 : d == 2 ? 10 * b.K + 1 : 100000);
    std::vector<std::string> names = which == "all" ? builtin_target_names() : std::vector<std::string>{which};
    for (const auto& name : names) {
        HolderTarget h;
        try {
            h = builtin_target(name, beta, d);
        } catch (const std::invalid_argument& e) {
            if (which == "all") continue;  // target not defined for this smoothness
            throw UsageError(e.what());
        }
        auto t0 = std::chrono::steady_clock::now();
        auto net = holder_approximator(h, b);
        double sup = 0.0;
        double err = holder_sup_error(net, h, grid, &sup);
        auto ms = ms_since(t0);
        json extra = {{"target", name}, {"K", b.K}, {"grid", grid}, {"norm_factor", h.norm_factor}};
        c.add(name + "/error", extra, b.claimed_error * h.norm_factor, err, ms);
        // |net| <= 1 holds exactly; the mid-extension arithmetic can add an ulp
        json sx = extra;
        sx["roundoff"] = kRoundoff;
        c.add(name + "/sup_norm", sx, 1.0 + kRoundoff, sup, ms);
        t0 = std::chrono::steady_clock::now();
        Box box{Vec(d, 0.0), Vec(d, 1.0)};
        double lip = lipschitz_lower_sampled(net, box, pairs, c.cfg.seed());
        c.add(name + "/lipschitz", {{"target", name}, {"pairs", pairs}}, net.meta.claimed_lipschitz.value_or(INFINITY), lip,
              ms_since(t0));
        c.structural(name, net, ms);
    }
}

void verify_memorize(Ctx& c) {
    const int d = c.cfg.get_int("d");
    const int W = c.cfg.get_int("W", 7 * d + 8), L = c.cfg.get_int("L", 4);
    const int reps = c.cfg.get_int("reps", 50), m = c.cfg.get_int("m", 100000);
    const double eps = c.cfg.get_double("eps", 1e-2);
    SourceSpec nu;
    try {
        nu = SourceSpec::parse(c.cfg.get("source", "uniform"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const int n = capacity(W, L, d);
    std::vector<std::vector<BoundReport>> rows(reps);
    FirstError err;
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < reps; ++rep) err.guard([&] {
        auto t0 = std::chrono::steady_clock::now();
        const unsigned long long s = c.cfg.seed() + rep;
        auto gamma = random_discrete(n, d, s);
        auto r = memorize_discrete(gamma, nu, eps, W, L);
        auto pts = push_forward(r.net, sample_source(nu, m, s), s);
        auto w = w1_pushforward(gamma, pts);
        long long outside = 0;
        for (const auto& p : pts.points)
            if (std::any_of(p.begin(), p.end(), [](double v) { return v < 0.0 || v > 1.0; })) ++outside;
        auto ms = ms_since(t0);
        json p = c.base;
        p["target_seed"] = s;
        p["n"] = n;
        p["certificate"] = r.certificate;
        p["mc_se"] = w.mc_se;
        std::string tag = "target" + std::to_string(rep);
        auto& out = rows[rep];
        out.push_back(make_report(c.cfg.experiment, tag + "/w1", p, eps + 3.0 * w.mc_se, w.value, c.cfg.seed(), ms));
        out.push_back(make_report(c.cfg.experiment, tag + "/range", p, 0.0, double(outside), c.cfg.seed(), ms));
        auto dm = r.net.dims();
        out.push_back(make_report(c.cfg.experiment, tag + "/width", p, r.net.meta.claimed_width, dm.width, c.cfg.seed(), ms));
        out.push_back(make_report(c.cfg.experiment, tag + "/depth", p, r.net.meta.claimed_depth, dm.depth, c.cfg.seed(), ms));
    });
    err.rethrow();
    for (auto& r : rows) c.out.reports.insert(c.out.reports.end(), r.begin(), r.end());
    c.out.summary["capacity"] = n;
}

// smallest even depth whose capacity covers n atoms at width w
int depth_for(int n, int w, int d) {
    int L = 2;
    while (capacity(w, L, d) < n) L += 2;
    return L;
}

void rate(Ctx& c, bool lowdim) {
    const int d = c.cfg.get_int("d"), reps = c.cfg.get_int("reps");
    const int n_min = c.cfg.get_int("n_min"), n_max = c.cfg.get_int("n_max");
    const int d_star = lowdim ? c.cfg.get_int("d_star") : d;
    const double V = c.cfg.get_double("V", 0.0);
    const double beta = c.cfg.get_double("beta", 1.0);
    const bool memorize = c.cfg.get_int("memorize", 1) != 0;
    if (beta != 1.0) throw UsageError(c.cfg.experiment + ": parameter 'beta' must be 1 (the measured metric is W1)");
    if (n_min < 4 || n_max < n_min) throw UsageError(c.cfg.experiment + ": need 4 <= n_min <= n_max");
    if (reps < 2) throw UsageError(c.cfg.experiment + ": parameter 'reps' must be >= 2");
    if (d < 1) throw UsageError(c.cfg.experiment + ": parameter 'd' must be >= 1");
    if (lowdim && (d_star < 1 || d_star > 2 || d_star >= d))
        throw UsageError(c.cfg.experiment + ": parameter 'd_star' must be 1 or 2 and below d");
    const double tol = c.cfg.get_double("tol", lowdim ? 0.10 : 0.08);
    const double expected = -std::min(1.0 / d_star, 0.5);
    const double half_width = c.cfg.get_double("half_width", 0.0);

    std::vector<int> sizes;
    for (long long n = n_min; n <= n_max; n *= 2) sizes.push_back(static_cast<int>(n));
    if (sizes.size() < 3) throw UsageError(c.cfg.experiment + ": need at least three sizes between n_min and n_max");
    std::vector<RatePoint> pts(sizes.size() * reps);
    auto t0 = std::chrono::steady_clock::now();
    const int w = 7 * d + 8;
    // one replication per task; each draws from its own seed so the outcome
    // does not depend on scheduling
    FirstError err;
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < static_cast<long long>(pts.size()); ++k) err.guard([&] {
        const int n = sizes[k / reps], rep = static_cast<int>(k % reps);
        const unsigned long long s = c.cfg.seed() + rep;
        std::seed_seq sq{static_cast<unsigned>(s & 0xffffffffu), static_cast<unsigned>(s >> 32), static_cast<unsigned>(n)};
        std::mt19937_64 rng(sq);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        auto draw = [&] {
            SampleSet x;
            for (int i = 0; i < n; ++i) {
                if (lowdim) {
                    x.points.push_back(lowdim_draw(rng, d, d_star, V));
                } else {
                    Vec p(d);
                    for (auto& v : p) v = u(rng);
                    x.points.push_back(p);
                }
            }
            if (half_width > 0.0) x = truncate_distribution(x, half_width);
            return x;
        };
        auto a = draw(), b = draw();
        RatePoint rp;
        rp.n = n;
        rp.rep = rep;
        rp.seed = s;
        auto ua = uniform_weights(a), ub = uniform_weights(b);
        rp.w1 = w1_certified(ua, ub).value;
        if (memorize) {
            // the generator memorizing mu_hat_n adds at most its certificate
            double eps = std::max(1e-4, 4.0 * std::sqrt(double(d)) * n * kMinTransitionMass);
            if (half_width > 0.0 || V > 0.0) eps *= 10.0;
            rp.certificate = memorize_discrete(ua, SourceSpec{}, eps, w, depth_for(n, w, d)).certificate;
        }
        pts[k] = rp;
    });
    err.rethrow();
    auto ci = bootstrap_slope(pts, 200, c.cfg.seed());
    auto ms = ms_since(t0);
    json extra = {{"slope", ci.fit.slope},      {"ci_lo", ci.lo},       {"ci_hi", ci.hi},
                  {"expected", expected},       {"tol", tol},           {"r_squared", ci.fit.r_squared},
                  {"intercept", ci.fit.intercept}};
    c.add("slope", extra, tol, std::abs(ci.fit.slope - expected), ms);

    std::ostringstream o;
    o << "n,rep,seed,w1,certificate\n";
    for (const auto& p : pts) o << p.n << ',' << p.rep << ',' << p.seed << ',' << num(p.w1) << ',' << num(p.certificate) << '\n';
    c.out.files[".points.csv"] = o.str();
    json means = json::array();
    for (int n : sizes) {
        double sw = 0, sc = 0;
        for (const auto& p : pts)
            if (p.n == n) {
                sw += p.w1;
                sc += p.certificate;
            }
        means.push_back({{"n", n}, {"mean_w1", sw / reps}, {"mean_certificate", sc / reps}});
    }
    c.out.summary["slope"] = ci.fit.slope;
    c.out.summary["ci"] = {ci.lo, ci.hi};
    c.out.summary["expected"] = expected;
    c.out.summary["means"] = means;
    c.out.summary["runtime_ms"] = ms;
}

void dim_estimate(Ctx& c) {
    const int d = c.cfg.get_int("d"), d_star = c.cfg.get_int("d_star"), n = c.cfg.get_int("n", 10000);
    const double V = c.cfg.get_double("V", 0.0);
    auto t0 = std::chrono::steady_clock::now();
    SampleSet s;
    try {
        s = lowdim_samples(n, d, d_star, V, c.cfg.seed());
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    Vec eps;
    for (int k = 1; k <= 6; ++k) eps.push_back(std::ldexp(1.0, -k));
    auto bc = box_counting_dim(s, eps);
    c.add("dimension", {{"estimate", bc.dimension}}, 0.2, std::abs(bc.dimension - d_star), ms_since(t0));
    c.out.summary["dimension"] = bc.dimension;
    c.out.summary["counts"] = bc.counts;
}

void oracle(Ctx& c) {
    const int reps = c.cfg.get_int("reps", 20);
    int violations = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const unsigned long long s = c.cfg.seed() + rep;
        for (int variant = 0; variant < (rep == 0 ? 3 : 2); ++variant) {
            auto t0 = std::chrono::steady_clock::now();
            bool same = variant == 2, sub = variant == 1;
            auto t = oracle_decomposition_instance(s, same, sub);
            json extra = {{"instance_seed", s},     {"eps_opt", t.eps_opt},       {"approx", t.approx},
                          {"generator", t.generator}, {"statistical", t.statistical}};
            std::string tag = "seed" + std::to_string(s) + (same ? "/same-family" : sub ? "/suboptimal" : "/optimal");
            c.add(tag, extra, t.rhs(), t.lhs, ms_since(t0));
            if (t.lhs > t.rhs()) ++violations;
        }
    }
    c.out.summary["violations"] = violations;
}

} // namespace

OracleTerms oracle_decomposition_instance(unsigned long long seed, bool same_family, bool suboptimal) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // population: a skewed two-component law on [0,1], represented exactly by M atoms
    SampleSet mu;
    const int M = 2000;
    for (int i = 0; i < M; ++i) {
        double a = u(rng), b = u(rng);
        mu.points.push_back({u(rng) < 0.6 ? 0.5 * a * a : 0.55 + 0.45 * std::sqrt(b)});
    }
    const int W_g = 15, L_g = 2, n = capacity(W_g, L_g, 1);
    SampleSet mu_n;
    std::uniform_int_distribution<int> pick(0, M - 1);
    for (int i = 0; i < n; ++i) mu_n.points.push_back(mu.points[pick(rng)]);

    auto family = [](int W) {
        std::vector<ReluNet> f;
        auto b = HolderBudget::make(W, 2, 1.0, 1);
        for (const char* name : {"sinusoid", "bump", "linear_mean", "quadratic"}) {
            auto net = holder_approximator(builtin_target(name, 1.0, 1), b);
            f.push_back(net);
            f.push_back(then_affine(net, {{-1.0}}, {0.0}));
        }
        return f;
    };
    const auto H = family(8);
    const auto F = same_family ? H : family(6);

    // nu: uniform on a fine midpoint grid of [0,1]
    const int m = 4000;
    std::vector<double> z(m);
    for (int k = 0; k < m; ++k) z[k] = (k + 0.5) / m;
    // G: memorizers of mu_n at several accuracies plus one of a shifted copy
    std::vector<SampleSet> gen;
    auto emp = uniform_weights(mu_n);
    for (double eps : {1e-1, 1e-2, 1e-3}) gen.push_back(push_forward(memorize_discrete(emp, SourceSpec{}, eps, W_g, L_g).net, z, seed));
    {
        auto shifted = emp;
        for (auto& a : shifted.atoms) a[0] = std::min(1.0, a[0] + 0.05);
        gen.push_back(push_forward(memorize_discrete(shifted, SourceSpec{}, 1e-2, W_g, L_g).net, z, seed));
    }
    std::vector<double> dF(gen.size());
    for (std::size_t g = 0; g < gen.size(); ++g) dF[g] = ipm_finite_family(mu_n, gen[g], F);
    auto best = std::min_element(dF.begin(), dF.end()) - dF.begin();
    auto worst = std::max_element(dF.begin(), dF.end()) - dF.begin();
    const auto chosen = suboptimal ? worst : best;

    OracleTerms t;
    t.generator = dF[best];
    t.eps_opt = dF[chosen] - dF[best];
    t.lhs = ipm_finite_family(mu, gen[chosen], H);
    t.statistical = std::min(ipm_finite_family(mu, mu_n, F), ipm_finite_family(mu, mu_n, H));
    // Omega: every point any of the distributions charges
    std::vector<double> omega;
    for (const auto& p : mu.points) omega.push_back(p[0]);
    for (const auto& g : gen)
        for (const auto& p : g.points) omega.push_back(p[0]);
    std::vector<std::vector<double>> hv, fv;
    for (const auto& h : H) hv.push_back(eval_batch(h, omega));
    for (const auto& f : F) fv.push_back(eval_batch(f, omega));
    for (const auto& hy : hv) {
        double inf = INFINITY;
        for (const auto& fy : fv) {
            double sup = 0.0;
            for (std::size_t k = 0; k < omega.size(); ++k) sup = std::max(sup, std::abs(hy[k] - fy[k]));
            inf = std::min(inf, sup);
        }
        t.approx = std::max(t.approx, inf);
    }
    return t;
}

RunResult run(const ExperimentConfig& cfg) {
    cfg.validate();
    RunResult out;
    Ctx c{cfg, out, base_params(cfg)};
    out.summary["experiment"] = cfg.experiment;
    out.summary["params"] = c.base;
    out.summary["seed"] = cfg.seed();
    const auto& e = cfg.experiment;
    if (e == "verify-interp") verify_interp(c);
    else if (e == "verify-bits") verify_bits(c);
    else if (e == "verify-poly") verify_poly(c);
    else if (e == "verify-holder") verify_holder(c);
    else if (e == "verify-memorize") verify_memorize(c);
    else if (e == "rate-empirical") rate(c, false);
    else if (e == "rate-lowdim") rate(c, true);
    else if (e == "oracle-decomposition") oracle(c);
    else if (e == "dim-estimate") dim_estimate(c);
    return out;
}

} // namespace hgan
