#pragma once

#include "hgan/net.hpp"

namespace hgan {

struct MultiIndex {
    std::vector<int> alpha;

    int order() const;
    int dim() const { return static_cast<int>(alpha.size()); }
    int max_entry() const;
    double factorial() const;  // alpha! = prod alpha_j!
    double pow(std::span<const double> x) const;
};

// all multi-indices of dimension d with order <= s, graded then lexicographic
std::vector<MultiIndex> multi_indices(int d, int s);

// the unique n with (n-1) 2^(n-1) + 1 <= W <= n 2^n
int square_level(int W);

// x -> x^2 on [0,1], error <= W^-L / 4; width 3W, depth L
ReluNet square_net(int W, int L);

// (x, y) -> xy on [-1,1]^2, error <= 6 W^-L; width 9W+1, depth L
ReluNet product_net(int W, int L);

// x -> x^alpha on [-1,1]^d, clipped to [-1,1]; error <= 6(k-1) W^-L with k = |alpha|
ReluNet monomial_net(const MultiIndex& alpha, int W, int L);

} // namespace hgan
