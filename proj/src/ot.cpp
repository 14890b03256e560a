#include "hgan/ot.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace hgan {

namespace {

// Spanning-tree network simplex on nodes 0..n-1 plus an artificial root.
// Tree bookkeeping (parent, pred, thread, succ_num, last_succ) follows the
// usual strongly feasible tree scheme.
class NetworkSimplex {
public:
    // artificial arcs occupy indices 0..n-1, real arcs follow and may be appended later
    NetworkSimplex(const std::vector<double>& supply, double max_cost) : n_(static_cast<int>(supply.size())) {
        art_cost_ = (max_cost + 1.0) * (n_ + 1);
        scale_ = max_cost + 1.0;
        source_.resize(n_);
        target_.resize(n_);
        cost_.resize(n_);
        flow_.assign(n_, 0.0);
        state_.assign(n_, kTree);
        const int N = n_ + 1;
        parent_.resize(N);
        pred_.resize(N);
        thread_.resize(N);
        rev_thread_.resize(N);
        succ_num_.resize(N);
        last_succ_.resize(N);
        dir_.resize(N);
        pi_.resize(N);

        root_ = n_;
        parent_[root_] = -1;
        pred_[root_] = -1;
        thread_[root_] = 0;
        rev_thread_[0] = root_;
        succ_num_[root_] = n_ + 1;
        last_succ_[root_] = root_ - 1;
        pi_[root_] = 0.0;
        for (int u = 0; u < n_; ++u) {
            const int e = u;
            parent_[u] = root_;
            pred_[u] = e;
            thread_[u] = u + 1;
            rev_thread_[u + 1] = u;
            succ_num_[u] = 1;
            last_succ_[u] = u;
            if (supply[u] >= 0) {
                dir_[u] = kUp;
                pi_[u] = 0.0;
                source_[e] = u;
                target_[e] = root_;
                flow_[e] = supply[u];
                cost_[e] = 0.0;
            } else {
                dir_[u] = kDown;
                pi_[u] = art_cost_;
                source_[e] = root_;
                target_[e] = u;
                flow_[e] = -supply[u];
                cost_[e] = art_cost_;
            }
        }
    }

    void add_arc(int s, int t, double c) {
        source_.push_back(s);
        target_.push_back(t);
        cost_.push_back(c);
        flow_.push_back(0.0);
        state_.push_back(kLower);
    }

    long long run() {
        m_ = static_cast<int>(source_.size());
        block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(m_ - n_))));
        if (next_ < n_ || next_ >= m_) next_ = n_;
        long long pivots = 0;
        while (find_entering()) {
            find_join();
            bool change = find_leaving();
            if (!change) throw std::runtime_error("solve_transport: unbounded pivot");
            change_flow();
            update_tree();
            update_potential();
            ++pivots;
        }
        return pivots;
    }

    double flow(int e) const { return flow_[e]; }
    double pi(int u) const { return pi_[u]; }
    double artificial_flow() const {
        double s = 0.0;
        for (int e = 0; e < n_; ++e) s += flow_[e];
        return s;
    }

private:
    static constexpr int kTree = 0, kLower = 1;
    static constexpr int kUp = 1, kDown = -1;

    double reduced(int e) const { return cost_[e] + pi_[source_[e]] - pi_[target_[e]]; }

    bool find_entering() {
        const double tol = -1e-12 * scale_;
        double best = tol;
        int cnt = block_;
        int e;
        for (e = next_; e < m_; ++e) {
            if (state_[e] == kLower) {
                double c = reduced(e);
                if (c < best) {
                    best = c;
                    in_ = e;
                }
            }
            if (--cnt == 0) {
                if (best < tol) goto found;
                cnt = block_;
            }
        }
        for (e = n_; e < next_; ++e) {
            if (state_[e] == kLower) {
                double c = reduced(e);
                if (c < best) {
                    best = c;
                    in_ = e;
                }
            }
            if (--cnt == 0) {
                if (best < tol) goto found;
                cnt = block_;
            }
        }
        if (!(best < tol)) return false;
    found:
        next_ = e;
        return true;
    }

    void find_join() {
        int u = source_[in_], v = target_[in_];
        while (u != v) {
            if (succ_num_[u] < succ_num_[v]) u = parent_[u];
            else v = parent_[v];
        }
        join_ = u;
    }

    bool find_leaving() {
        const int first = source_[in_], second = target_[in_];
        delta_ = INFINITY;
        int result = 0;
        for (int u = first; u != join_; u = parent_[u]) {
            if (dir_[u] == kUp && flow_[pred_[u]] < delta_) {
                delta_ = flow_[pred_[u]];
                u_out_ = u;
                result = 1;
            }
        }
        for (int u = second; u != join_; u = parent_[u]) {
            if (dir_[u] == kDown && flow_[pred_[u]] <= delta_) {
                delta_ = flow_[pred_[u]];
                u_out_ = u;
                result = 2;
            }
        }
        if (result == 1) {
            u_in_ = first;
            v_in_ = second;
        } else {
            u_in_ = second;
            v_in_ = first;
        }
        return result != 0;
    }

    void change_flow() {
        if (delta_ > 0) {
            const double val = delta_;
            flow_[in_] += val;
            for (int u = source_[in_]; u != join_; u = parent_[u]) flow_[pred_[u]] -= dir_[u] * val;
            for (int u = target_[in_]; u != join_; u = parent_[u]) flow_[pred_[u]] += dir_[u] * val;
            flow_[pred_[u_out_]] = 0.0;
        }
        state_[in_] = kTree;
        state_[pred_[u_out_]] = kLower;
    }

    void update_tree() {
        const int old_rev_thread = rev_thread_[u_out_];
        const int old_succ_num = succ_num_[u_out_];
        const int old_last_succ = last_succ_[u_out_];
        v_out_ = parent_[u_out_];

        if (u_in_ == u_out_) {
            parent_[u_in_] = v_in_;
            pred_[u_in_] = in_;
            dir_[u_in_] = u_in_ == source_[in_] ? kUp : kDown;
            if (thread_[v_in_] != u_out_) {
                int after = thread_[old_last_succ];
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
                after = thread_[v_in_];
                thread_[v_in_] = u_out_;
                rev_thread_[u_out_] = v_in_;
                thread_[old_last_succ] = after;
                rev_thread_[after] = old_last_succ;
            }
        } else {
            const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
            int stem = u_in_, par_stem = v_in_, next_stem;
            int last = last_succ_[u_in_];
            int before, after = thread_[last];
            thread_[v_in_] = u_in_;
            dirty_.clear();
            dirty_.push_back(v_in_);
            while (stem != u_out_) {
                next_stem = parent_[stem];
                thread_[last] = next_stem;
                dirty_.push_back(last);
                before = rev_thread_[stem];
                thread_[before] = after;
                rev_thread_[after] = before;
                parent_[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
                after = thread_[last];
            }
            parent_[u_out_] = par_stem;
            thread_[last] = thread_continue;
            rev_thread_[thread_continue] = last;
            last_succ_[u_out_] = last;
            if (old_rev_thread != v_in_) {
                thread_[old_rev_thread] = after;
                rev_thread_[after] = old_rev_thread;
            }
            for (int u : dirty_) rev_thread_[thread_[u]] = u;

            int tmp_sc = 0, tmp_ls = last_succ_[u_out_];
            for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
                pred_[u] = pred_[p];
                dir_[u] = -dir_[p];
                tmp_sc += succ_num_[u] - succ_num_[p];
                succ_num_[u] = tmp_sc;
                last_succ_[p] = tmp_ls;
            }
            pred_[u_in_] = in_;
            dir_[u_in_] = u_in_ == source_[in_] ? kUp : kDown;
            succ_num_[u_in_] = old_succ_num;
        }

        const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
        const int last_succ_out = last_succ_[u_out_];
        for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;
        if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
            for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = old_rev_thread;
        } else if (last_succ_out != old_last_succ) {
            for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
                last_succ_[u] = last_succ_out;
        }
        for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
        for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
    }

    void update_potential() {
        const double sigma = pi_[v_in_] - pi_[u_in_] - dir_[u_in_] * cost_[in_];
        const int end = thread_[last_succ_[u_in_]];
        for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
    }

    int n_, m_ = 0, root_ = 0;
    std::vector<int> source_, target_, state_;
    std::vector<double> cost_, flow_;
    std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, dir_, dirty_;
    std::vector<double> pi_;
    double art_cost_ = 0, scale_ = 1, delta_ = 0;
    int block_ = 10, next_ = 0;
    int in_ = -1, join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1, v_out_ = -1;
};

} // namespace

struct TransportSolver::Impl {
    NetworkSimplex ns;
    int na, nb;
    std::vector<TransportArc> arcs;
    Impl(const std::vector<double>& supply, double max_cost, int na_, int nb_) : ns(supply, max_cost), na(na_), nb(nb_) {}
};

namespace {

std::vector<double> make_supply(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("solve_transport: empty marginal");
    double sa = 0.0, sb = 0.0;
    for (double x : a) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("solve_transport: bad supply");
        sa += x;
    }
    for (double x : b) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("solve_transport: bad demand");
        sb += x;
    }
    if (std::abs(sa - sb) > 1e-9 * std::max(1.0, sa)) throw std::invalid_argument("solve_transport: unbalanced marginals");
    std::vector<double> supply(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) supply[i] = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) supply[a.size() + j] = -b[j];
    return supply;
}

} // namespace

TransportSolver::TransportSolver(const std::vector<double>& a, const std::vector<double>& b, double max_cost)
    : impl_(std::make_unique<Impl>(make_supply(a, b), max_cost, static_cast<int>(a.size()), static_cast<int>(b.size()))) {
    if (!(max_cost >= 0.0) || !std::isfinite(max_cost)) throw std::invalid_argument("solve_transport: bad cost bound");
}

TransportSolver::~TransportSolver() = default;

void TransportSolver::add_arcs(const std::vector<TransportArc>& arcs) {
    for (const auto& e : arcs) {
        if (e.i < 0 || e.i >= impl_->na || e.j < 0 || e.j >= impl_->nb)
            throw std::invalid_argument("solve_transport: arc out of range");
        if (!std::isfinite(e.cost)) throw std::invalid_argument("solve_transport: non-finite cost");
        impl_->ns.add_arc(e.i, impl_->na + e.j, e.cost);
        impl_->arcs.push_back(e);
    }
}

std::size_t TransportSolver::arc_count() const { return impl_->arcs.size(); }

const std::vector<TransportArc>& TransportSolver::arcs() const { return impl_->arcs; }

TransportSolution TransportSolver::solve() {
    auto& ns = impl_->ns;
    const int na = impl_->na, nb = impl_->nb, n = na + nb;
    TransportSolution sol;
    sol.pivots = ns.run();
    sol.flow.resize(impl_->arcs.size());
    for (std::size_t e = 0; e < impl_->arcs.size(); ++e) {
        sol.flow[e] = ns.flow(n + static_cast<int>(e));
        sol.cost += sol.flow[e] * impl_->arcs[e].cost;
    }
    // reduced cost is c + pi_i - pi_j, so u = -pi on sources and v = pi on sinks
    sol.u.resize(na);
    sol.v.resize(nb);
    for (int i = 0; i < na; ++i) sol.u[i] = -ns.pi(i);
    for (int j = 0; j < nb; ++j) sol.v[j] = ns.pi(na + j);
    sol.artificial_flow = ns.artificial_flow();
    return sol;
}

TransportSolution solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<TransportArc>& arcs) {
    double maxc = 0.0;
    for (const auto& e : arcs) maxc = std::max(maxc, std::abs(e.cost));
    if (!std::isfinite(maxc)) throw std::invalid_argument("solve_transport: non-finite cost");
    TransportSolver s(a, b, maxc);
    s.add_arcs(arcs);
    return s.solve();
}

} // namespace hgan
