#include "hgan/genmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hgan/interp.hpp"

namespace hgan {

void DiscreteDistribution::validate() const {
    if (atoms.empty()) throw std::invalid_argument("discrete distribution: no atoms");
    if (atoms.size() != weights.size()) throw std::invalid_argument("discrete distribution: atoms/weights length mismatch");
    const std::size_t d = atoms[0].size();
    if (d == 0) throw std::invalid_argument("discrete distribution: zero-dimensional atoms");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (atoms[i].size() != d) throw std::invalid_argument("discrete distribution: ragged atoms");
        for (double v : atoms[i])
            if (!std::isfinite(v)) throw std::invalid_argument("discrete distribution: non-finite atom");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            throw std::invalid_argument("discrete distribution: weights must be positive");
        total += weights[i];
    }
    // summation rounding grows with the atom count
    if (std::abs(total - 1.0) > std::max(1e-12, 1e-15 * static_cast<double>(atoms.size())))
        throw std::invalid_argument("discrete distribution: weights do not sum to 1");
}

void SampleSet::validate() const {
    if (points.empty()) return;
    const std::size_t d = points[0].size();
    for (const auto& p : points) {
        if (p.size() != d) throw std::invalid_argument("sample set: ragged points");
        for (double v : p)
            if (!std::isfinite(v)) throw std::invalid_argument("sample set: non-finite coordinate");
    }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("normal_quantile: u must lie in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double e[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double lo = 0.02425;
    double x;
    if (u < lo || u > 1 - lo) {
        double q = std::sqrt(-2 * std::log(u < lo ? u : 1 - u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1);
        if (u > 1 - lo) x = -x;
    } else {
        double q = u - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    // one Halley step against the erfc-based cdf
    double err = normal_cdf(x) - u;
    double t = err * std::sqrt(2 * M_PI) * std::exp(0.5 * x * x);
    return x - t / (1 + 0.5 * x * t);
}

double SourceSpec::quantile(double u) const { return kind == Kind::uniform01 ? u : normal_quantile(u); }

double SourceSpec::cdf(double z) const {
    return kind == Kind::uniform01 ? std::clamp(z, 0.0, 1.0) : normal_cdf(z);
}

std::string SourceSpec::name() const { return kind == Kind::uniform01 ? "uniform01" : "gaussian"; }

SourceSpec SourceSpec::parse(const std::string& s) {
    SourceSpec nu;
    if (s == "uniform01" || s == "uniform") nu.kind = Kind::uniform01;
    else if (s == "gaussian" || s == "normal") nu.kind = Kind::gaussian;
    else throw std::invalid_argument("unknown source: " + s);
    return nu;
}

int capacity(int W, int L, int d) {
    if (d < 1) throw std::invalid_argument("capacity: d must be >= 1");
    if (W < 7 * d + 1) throw BudgetError("capacity: need W >= 7d+1 = " + std::to_string(7 * d + 1));
    if (L < 2) throw BudgetError("capacity: need L >= 2");
    const long long a = W - d - 1;
    // floor(a/2 * q * h + 2) computed in integers
    return static_cast<int>(a * ((W - d - 1) / (6 * d)) * (L / 2) / 2 + 2);
}

namespace {

double dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace

MemorizeResult memorize_discrete(const DiscreteDistribution& gamma, const SourceSpec& nu, double eps, int W, int L) {
    gamma.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("memorize_discrete: eps must be positive");
    const int n = gamma.size(), d = gamma.dim();
    const int cap = capacity(W, L, d);
    if (n > cap) {
        std::ostringstream m;
        m << "memorize_discrete: n = " << n << " atoms exceeds capacity(W=" << W << ", L=" << L << ", d=" << d
          << ") = " << cap;
        throw BudgetError(m.str());
    }
    MemorizeResult res;
    res.order.resize(n);
    std::iota(res.order.begin(), res.order.end(), 0);
    std::stable_sort(res.order.begin(), res.order.end(),
                     [&](int i, int j) { return gamma.atoms[i] < gamma.atoms[j]; });
    if (n == 1) {
        res.net = constant_net(1, gamma.atoms[0]);
        res.net.meta = {"memorize", W, L, 0.0};
        return res;
    }
    std::vector<const Vec*> x(n);
    Vec p(n);
    for (int i = 0; i < n; ++i) {
        x[i] = &gamma.atoms[res.order[i]];
        p[i] = gamma.weights[res.order[i]];
    }
    double lmax = 0.0, diam = 0.0;
    for (int i = 0; i + 1 < n; ++i) lmax = std::max(lmax, dist(*x[i], *x[i + 1]));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) diam = std::max(diam, dist(*x[i], *x[j]));
    const double pmin = *std::min_element(p.begin(), p.end());
    double total = 0.1 * pmin;
    if (lmax > 0.0) total = std::min(total, eps / (2.0 * lmax));
    const double each = total / (n - 1);
    if (each < kMinTransitionMass) {
        std::ostringstream m;
        if (lmax > 0.0 && eps / (2.0 * lmax) < 0.1 * pmin)
            m << "memorize_discrete: eps = " << eps << " is below the minimum achievable "
              << 2.0 * lmax * (n - 1) * kMinTransitionMass;
        else
            m << "memorize_discrete: smallest weight " << pmin << " is too small to resolve";
        throw BudgetError(m.str());
    }
    // plateau i covers [a_i, b_i] in probability space, transitions carry `each`
    Vec a(n), b(n);
    double cur = 0.0;
    for (int i = 0; i < n; ++i) {
        a[i] = cur;
        double share = (i > 0 ? 0.5 : 0.0) + (i + 1 < n ? 0.5 : 0.0);
        b[i] = a[i] + p[i] - share * each;
        cur = b[i] + each;
    }
    KnotSamples ks;
    for (int i = 0; i + 1 < n; ++i) {
        ks.xs.push_back(nu.quantile(b[i]));
        ks.ys.push_back(*x[i]);
        ks.xs.push_back(nu.quantile(a[i + 1]));
        ks.ys.push_back(*x[i + 1]);
    }
    res.net = pwl_path_net(ks, W, L);
    res.knots = ks.xs;
    // certificate from the masses the realized knots actually carry: split each
    // transition evenly between its endpoints, then repair any residual mismatch
    // at the atom-set diameter
    Vec cdf(ks.xs.size());
    for (std::size_t k = 0; k < ks.xs.size(); ++k) cdf[k] = nu.cdf(ks.xs[k]);
    double cert = 0.0, mismatch = 0.0, tmass = 0.0;
    for (int i = 0; i < n; ++i) {
        double lo = i == 0 ? 0.0 : cdf[2 * i - 1];
        double hi = i + 1 == n ? 1.0 : cdf[2 * i];
        double mass = hi - lo;
        if (i > 0) mass += 0.5 * (cdf[2 * i - 1] - cdf[2 * i - 2]);
        if (i + 1 < n) {
            double t = cdf[2 * i + 1] - cdf[2 * i];
            mass += 0.5 * t;
            tmass += t;
            cert += t * dist(*x[i], *x[i + 1]);
        }
        mismatch += std::abs(mass - p[i]);
    }
    cert += 0.5 * mismatch * diam;
    res.certificate = cert;
    res.transition_mass = tmass;
    if (!(cert < eps)) {
        std::ostringstream m;
        m << "memorize_discrete: certificate " << cert << " does not reach eps = " << eps;
        throw BudgetError(m.str());
    }
    res.net.meta = {"memorize", W, L, max_slope(ks)};
    return res;
}

std::vector<double> sample_source(const SourceSpec& nu, int m, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> z(m);
    if (nu.kind == SourceSpec::Kind::uniform01) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : z) v = u(rng);
    } else {
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& v : z) v = g(rng);
    }
    return z;
}

SampleSet push_forward(const ReluNet& g, const std::vector<double>& z, unsigned long long seed) {
    if (g.input_dim != 1) throw std::invalid_argument("push_forward: generator must take a scalar input");
    const int od = g.output_dim();
    auto y = eval_batch(g, z);
    SampleSet s;
    s.seed = seed;
    s.points.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) s.points[i].assign(y.begin() + i * od, y.begin() + (i + 1) * od);
    return s;
}

DiscreteDistribution uniform_weights(const SampleSet& s) {
    if (s.points.empty()) throw std::invalid_argument("uniform_weights: empty sample set");
    DiscreteDistribution g;
    g.atoms = s.points;
    g.weights.assign(s.points.size(), 1.0 / s.points.size());
    return g;
}

DiscreteDistribution random_discrete(int n, int d, unsigned long long seed) {
    if (n < 1 || d < 1) throw std::invalid_argument("random_discrete: need n, d >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DiscreteDistribution g;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        Vec a(d);
        for (auto& v : a) v = u(rng);
        g.atoms.push_back(a);
        g.weights.push_back(0.5 + u(rng));
        total += g.weights.back();
    }
    for (auto& w : g.weights) w /= total;
    return g;
}

SampleSet uniform_cube_samples(int n, int d, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SampleSet s;
    s.seed = seed;
    s.points.assign(n, Vec(d));
    for (auto& p : s.points)
        for (auto& v : p) v = u(rng);
    return s;
}

DiscreteDistribution grid_quantize(const SampleSet& s, int k) {
    if (k < 1) throw std::invalid_argument("grid_quantize: k must be >= 1");
    if (s.points.empty()) throw std::invalid_argument("grid_quantize: empty sample set");
    s.validate();
    const int d = s.dim();
    std::map<std::vector<int>, long long> count;
    std::vector<int> cell(d);
    for (const auto& p : s.points) {
        for (int j = 0; j < d; ++j) {
            if (p[j] < 0.0 || p[j] > 1.0) throw std::invalid_argument("grid_quantize: point outside [0,1]^d");
            cell[j] = std::min(static_cast<int>(std::floor(p[j] * k)), k - 1);
        }
        ++count[cell];
    }
    DiscreteDistribution g;
    for (const auto& [c, m] : count) {
        Vec a(d);
        for (int j = 0; j < d; ++j) a[j] = static_cast<double>(c[j] + 1) / k;
        g.atoms.push_back(a);
        g.weights.push_back(static_cast<double>(m) / s.points.size());
    }
    return g;
}

DiscreteDistribution grid_quantize(const std::function<Vec(std::mt19937_64&)>& sampler, int n, int k,
                                   unsigned long long seed) {
    std::mt19937_64 rng(seed);
    SampleSet s;
    s.seed = seed;
    for (int i = 0; i < n; ++i) s.points.push_back(sampler(rng));
    return grid_quantize(s, k);
}

SampleSet truncate_distribution(const SampleSet& s, double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("truncate_distribution: half_width must be positive");
    SampleSet t = s;
    for (auto& p : t.points) {
        double m = 0.0;
        for (double v : p) m = std::max(m, std::abs(v));
        if (m > half_width) std::fill(p.begin(), p.end(), 0.0);
    }
    return t;
}

void write_samples(const std::string& path, const SampleSet& s) {
    s.validate();
    std::ostringstream o;
    o.precision(17);
    for (const auto& p : s.points) {
        for (std::size_t j = 0; j < p.size(); ++j) o << (j ? "," : "") << p[j];
        o << '\n';
    }
    write_file_atomic(path, o.str());
    nlohmann::json meta = {{"seed", s.seed}, {"n", s.size()}, {"d", s.dim()}};
    write_file_atomic(path + ".meta.json", meta.dump(2) + "\n");
}

SampleSet read_samples(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    SampleSet s;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        Vec p;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                p.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (!s.points.empty() && p.size() != s.points[0].size())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": ragged row");
        s.points.push_back(std::move(p));
    }
    std::ifstream mf(path + ".meta.json");
    if (mf) s.seed = nlohmann::json::parse(mf).value("seed", 0ULL);
    s.validate();
    return s;
}

} // namespace hgan
