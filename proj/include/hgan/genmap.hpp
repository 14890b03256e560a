#pragma once

#include <functional>
#include <random>
#include <string>

#include "hgan/net.hpp"

namespace hgan {

struct DiscreteDistribution {
    std::vector<Vec> atoms;
    Vec weights;

    int size() const { return static_cast<int>(atoms.size()); }
    int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms[0].size()); }
    void validate() const;
};

struct SourceSpec {
    enum class Kind { uniform01, gaussian };
    Kind kind = Kind::uniform01;

    double quantile(double u) const;
    double cdf(double z) const;
    std::string name() const;
    static SourceSpec parse(const std::string& s);
};

struct SampleSet {
    std::vector<Vec> points;
    unsigned long long seed = 0;

    int size() const { return static_cast<int>(points.size()); }
    int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
    void validate() const;
};

// standard normal quantile: rational approximation plus one Halley step
double normal_quantile(double u);
double normal_cdf(double z);

int capacity(int W, int L, int d);

struct MemorizeResult {
    ReluNet net;
    double certificate = 0;       // analytic upper bound on W1(gamma, g_# nu)
    double transition_mass = 0;   // total source mass on the linear pieces
    Vec knots;                    // source-space breakpoints
    std::vector<int> order;       // atom visiting order along the path
};

MemorizeResult memorize_discrete(const DiscreteDistribution& gamma, const SourceSpec& nu, double eps, int W, int L);

// smallest transition mass per linear piece the construction accepts
inline constexpr double kMinTransitionMass = 1e-9;

std::vector<double> sample_source(const SourceSpec& nu, int m, unsigned long long seed);
SampleSet push_forward(const ReluNet& g, const std::vector<double>& z, unsigned long long seed);

DiscreteDistribution uniform_weights(const SampleSet& s);
// random atoms in [0,1]^d with weights bounded away from zero
DiscreteDistribution random_discrete(int n, int d, unsigned long long seed);
SampleSet uniform_cube_samples(int n, int d, unsigned long long seed);

// atoms are upper cell corners (i_1, ..., i_d)/k of occupied cells
DiscreteDistribution grid_quantize(const SampleSet& s, int k);
DiscreteDistribution grid_quantize(const std::function<Vec(std::mt19937_64&)>& sampler, int n, int k,
                                   unsigned long long seed);

SampleSet truncate_distribution(const SampleSet& s, double half_width);

// CSV with d columns and no header; the seed goes to <path>.meta.json
void write_samples(const std::string& path, const SampleSet& s);
SampleSet read_samples(const std::string& path);

} // namespace hgan
