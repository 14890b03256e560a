#pragma once

#include <functional>

#include "hgan/net.hpp"
#include "hgan/poly.hpp"

namespace hgan {

struct HolderTarget {
    std::string name;
    double beta = 1.0;
    int d = 1;
    std::function<double(std::span<const double>)> f;
    // partial derivative for a multi-index of order <= s
    std::function<double(const MultiIndex&, std::span<const double>)> deriv;
    double norm_factor = 1.0;  // target = norm_factor * (member of the unit ball)

    int s() const;
    double r() const;
    void validate() const;
};

// beta = s + r with r in (0, 1]
int holder_s(double beta);

// Built-in members of the unit Hoelder ball with analytic derivatives:
// zero, linear_mean, quadratic, sinusoid, bump, sqrt_ridge (beta <= 0.5 only).
HolderTarget builtin_target(const std::string& name, double beta, int d);
std::vector<std::string> builtin_target_names();

struct HolderBudget {
    int W = 0, L = 0, d = 0;
    double beta = 0;
    int K = 0;
    double delta = 0;
    double claimed_error = 0;
    double claimed_lipschitz = 0;
    long long claimed_width = 0;
    long long claimed_depth = 0;

    static HolderBudget make(int W, int L, double beta, int d);
    bool consistent() const;  // stored fields equal a fresh recomputation
};

// middle value of three reals; width 10, depth 2
ReluNet mid_net();

ReluNet holder_approximator(const HolderTarget& h, const HolderBudget& b);

// |h(x) - Taylor polynomial of order s at x0|
double taylor_local_error(const HolderTarget& h, std::span<const double> x, std::span<const double> x0);

// sampled Hoelder seminorm check; returns the largest ratio found (<= 1 expected)
double holder_spot_check(const HolderTarget& h, int pairs, unsigned long long seed);

} // namespace hgan
