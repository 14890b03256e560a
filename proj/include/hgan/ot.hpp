#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace hgan {

struct TransportArc {
    int i = 0, j = 0;
    double cost = 0;
};

struct TransportSolution {
    std::vector<double> flow;  // per input arc
    std::vector<double> u, v;  // duals: u[i] + v[j] <= cost(i,j) on every arc, tight where flow > 0
    double cost = 0;
    double artificial_flow = 0;  // supply that could not be routed over the given arcs
    long long pivots = 0;
};

// Uncapacitated transportation problem over an explicit arc set, solved by a
// primal network simplex with block pivoting. Supplies a and demands b must be
// nonnegative with equal totals (up to rounding).
TransportSolution solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<TransportArc>& arcs);

// Incremental form: arcs may be added between solves and each solve restarts
// from the previous basis. max_cost bounds every arc cost ever added.
class TransportSolver {
public:
    TransportSolver(const std::vector<double>& a, const std::vector<double>& b, double max_cost);
    ~TransportSolver();
    void add_arcs(const std::vector<TransportArc>& arcs);
    std::size_t arc_count() const;
    const std::vector<TransportArc>& arcs() const;
    TransportSolution solve();  // flow is indexed like the arcs in insertion order

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace hgan
