#pragma once

#include "hgan/net.hpp"

namespace hgan {

struct KnotSamples {
    Vec xs;                 // strictly increasing
    std::vector<Vec> ys;    // one vector per knot, all of the same dimension

    int dim() const { return ys.empty() ? 0 : static_cast<int>(ys[0].size()); }
    int interior() const { return static_cast<int>(xs.size()) - 2; }
    void validate() const;
    static KnotSamples scalar(const Vec& xs, const Vec& ys);
};

// reference piecewise-linear interpolant, constant outside [x_0, x_{N+1}]
Vec eval_pwl(const KnotSamples& s, double x);

double max_slope(const KnotSamples& s);

// Builds the interpolant of s on a width (free + dim + 1) network. Each block of
// two hidden layers places `free` units on each layer; returns the net and the
// number of blocks used. expose_input adds the clamped input as a last output.
struct LadderResult {
    ReluNet net;
    int blocks = 0;
};
LadderResult build_ladder(const KnotSamples& s, int free, bool expose_input = false);

// d=1 output, width <= W+2, depth <= 2L; needs N <= floor(W/6) W L
ReluNet linear_interpolator(const KnotSamples& s, int W, int L);

// d-dimensional path, width <= W, depth <= L; needs W >= 7d+1, L >= 2 and
// N <= (W-d-1) floor((W-d-1)/(6d)) floor(L/2)
ReluNet pwl_path_net(const KnotSamples& s, int W, int L);

int discretizer_K(int W, int L, int d);

// plateaus: value k/K on [k/K, (k+1)/K - delta] (last plateau closed at 1)
ReluNet discretizer(int W, int L, int d, double delta);

// sample set used by the one-stage discretizer; exposed for tests
KnotSamples plateau_samples(int K, double delta, double scale_out);

} // namespace hgan
