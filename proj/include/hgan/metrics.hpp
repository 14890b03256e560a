#pragma once

#include <string>
#include <utility>

#include "hgan/genmap.hpp"
#include "hgan/net.hpp"
#include "hgan/ot.hpp"

namespace hgan {

struct TransportPlan {
    struct Entry {
        int source = 0, target = 0;
        double mass = 0;
    };
    std::vector<Entry> entries;
    double cost = 0;

    // marginals match a and b within tol and all masses are nonnegative
    bool check(const Vec& a, const Vec& b, double tol = 1e-9) const;
    void write_csv(const std::string& path) const;
};

inline constexpr long long kMaxExactPairs = 250000;

double euclidean(std::span<const double> x, std::span<const double> y);

double w1_1d_exact(const DiscreteDistribution& a, const DiscreteDistribution& b);

// exact OT over all pairs; a.size() * b.size() <= kMaxExactPairs
std::pair<double, TransportPlan> w1_discrete_exact(const DiscreteDistribution& a, const DiscreteDistribution& b);

struct CertifiedW1 {
    double value = 0;
    TransportPlan plan;
    long long arcs = 0;   // arcs in the final sparse instance
    int rounds = 0;       // solve/price rounds until the dual was feasible on every pair
    double gap_bound = 0; // value exceeds the optimum by at most this much
};

// Exact OT for large instances: solve on nearest-neighbour arcs, then price
// every pair against the duals and add violators until none remain.
CertifiedW1 w1_certified(const DiscreteDistribution& a, const DiscreteDistribution& b, int neighbours = 8);

struct PushforwardW1 {
    double value = 0;     // exact OT after snapping, plus the total snap displacement
    double mc_se = 0;     // standard error of the per-sample transport cost
    long long support = 0;
    double snapped = 0;   // fraction of samples snapped onto an atom
};

// W1 between a discrete target and the empirical law of samples; points within
// snap_tol of an atom are moved onto it and the displacement is added back
PushforwardW1 w1_pushforward(const DiscreteDistribution& gamma, const SampleSet& s, double snap_tol = 1e-7);

struct Box {
    Vec lo, hi;
};

double lipschitz_lower_sampled(const ReluNet& net, const Box& box, int pairs, unsigned long long seed);

double ipm_finite_family(const SampleSet& mu, const SampleSet& gamma, const std::vector<ReluNet>& family);

struct BoxCount {
    double dimension = 0;
    std::vector<long long> counts;
    bool degenerate = false;  // all scales saw a single box
};

BoxCount box_counting_dim(const SampleSet& s, const Vec& eps_grid);

double entropy_integral_bound(double B, long long n, double eta, double C);

double pdim_bound(double W, double L);

struct RateFit {
    double slope = 0, intercept = 0, r_squared = 0;
    std::vector<std::pair<double, double>> points;
};

RateFit rate_fit(const std::vector<std::pair<double, double>>& points);

} // namespace hgan
