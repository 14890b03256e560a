#pragma once

#include <cstdint>

#include "hgan/net.hpp"

namespace hgan {

constexpr int kMaxBitLength = 10;

struct BitString {
    std::vector<int> bits;  // bits[0] is the most significant (weight 1/2)

    double value() const;
    static BitString from_value(double v, int L);  // v must be an exact L-bit dyadic in [0,1)
};

// (x, l) -> l-th bit of x for L-bit dyadic x and l in {1..L}; width 8, depth 2L
ReluNet bit_extractor(int L);

// t -> theta_t for t in {0..W^2 L^2 - 1}; width 8W+4, depth 4L
ReluNet binary_fitter(const std::vector<int>& theta, int W, int L);

// t -> approximately xi_t in [0,1]; width 8s(2W+1)ceil(log2 2W)+2, depth 4L ceil(log2 2L)+1
ReluNet value_fitter(const Vec& xi, int W, int L, int s);

// number of binary digits used by value_fitter; the first J digits of xi (with
// xi = 1 mapped to all ones) and the value the fitter reproduces from them
int value_fitter_digits(int W, int L, int s);
std::uint64_t binary_digits(double xi, int J);
double fitted_binary(double xi, int J);

int ceil_log2(long long v);

} // namespace hgan
