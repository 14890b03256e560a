#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgan/genmap.hpp"
#include "hgan/holder.hpp"
#include "hgan/metrics.hpp"

namespace hgan {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BoundReport {
    std::string experiment;
    std::string tag;
    std::string param_json;
    double claimed = 0;
    double measured = 0;
    double margin = 0;  // claimed - measured
    bool pass = false;  // margin >= 0
    long long runtime_ms = 0;
    unsigned long long seed = 0;
};

BoundReport make_report(const std::string& experiment, const std::string& tag, const nlohmann::json& params,
                        double claimed, double measured, unsigned long long seed, long long runtime_ms);

struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> params;

    static const std::vector<std::string>& experiments();
    void validate() const;  // throws UsageError naming the offending key
    bool has(const std::string& key) const { return params.count(key) > 0; }
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::string get(const std::string& key, const std::string& fallback) const;
    unsigned long long seed() const;
};

struct RunResult {
    std::vector<BoundReport> reports;
    nlohmann::json summary;  // experiment-specific aggregates (slopes, intervals, counts)
    std::map<std::string, std::string> files;  // extra data files: path suffix -> contents
    bool all_pass() const;
};

RunResult run(const ExperimentConfig& config);

// report CSV plus <path>.summary.json; with timing off runtime_ms is written as 0
// so reruns are byte-identical
void write_reports(const std::string& path, const RunResult& result, bool timing = true);
std::string reports_csv(const std::vector<BoundReport>& reports, bool timing = true);

// ---- measurement helpers shared with the acceptance binary ----

// sup |net - h| on a uniform grid with `per_axis` points per axis (d <= 2) or on
// `per_axis` Halton points (d = 3); optionally also sup |net|
double holder_sup_error(const ReluNet& net, const HolderTarget& h, int per_axis, double* sup_abs = nullptr);
// first n points of the Halton sequence in [0,1]^d (bases 2, 3, 5, ...)
std::vector<double> halton_points(long long n, int d);

// X = X~ + xi with X~ uniform on a fixed segment (d_star = 1) or planar patch
// (d_star = 2) inside [0,1]^d and xi Gaussian with E|xi|^2 = V
SampleSet lowdim_samples(int n, int d, int d_star, double V, unsigned long long seed);

struct RatePoint {
    int n = 0;
    int rep = 0;
    unsigned long long seed = 0;
    double w1 = 0;           // two-sample certified W1 estimate of W1(mu, mu_hat_n)
    double certificate = 0;  // memorization certificate for the generator fitted to mu_hat_n
};

struct SlopeCI {
    RateFit fit;
    double lo = 0, hi = 0;
};

// bootstrap percentile interval of the fitted slope, resampling replications within each n
SlopeCI bootstrap_slope(const std::vector<RatePoint>& points, int resamples, unsigned long long seed);

struct OracleTerms {
    double lhs = 0;            // d_H(mu, g*_# nu)
    double eps_opt = 0;
    double approx = 0;         // E(H, F, Omega)
    double generator = 0;      // inf_G d_F(mu_hat_n, g_# nu)
    double statistical = 0;    // min(d_F(mu, mu_hat_n), d_H(mu, mu_hat_n))
    double rhs() const { return eps_opt + 2 * approx + generator + statistical; }
};

// one instance of the error decomposition with finite families; `same_family`
// uses F = H, `suboptimal` picks the worst generator and charges its excess as eps_opt
OracleTerms oracle_decomposition_instance(unsigned long long seed, bool same_family, bool suboptimal);

} // namespace hgan
