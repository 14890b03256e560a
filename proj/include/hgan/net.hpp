#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hgan {

// Thrown by constructions whose preconditions fail; the message carries the
// inequality that was violated.
struct BudgetError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// One affine map y = A x + b. A is kept in compressed rows: the constructions
// produce layers with thousands of units but only a handful of entries per row.
struct AffineLayer {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;
    std::vector<double> bias;

    AffineLayer() = default;
    AffineLayer(int r, int c) : rows(0), cols(c) { row_ptr.reserve(r + 1); bias.reserve(r); }

    static AffineLayer dense(int rows, int cols, const std::vector<double>& w, std::vector<double> b);

    // append a row given as (column, weight) pairs; duplicate columns are summed
    int add_row(std::vector<std::pair<int, double>> entries, double b);

    double at(int r, int c) const;
    std::vector<double> to_dense() const;
    std::size_t nnz() const { return val.size(); }
    void validate() const;
};

struct NetMeta {
    std::string tag;
    int claimed_width = 0;
    int claimed_depth = 0;
    std::optional<double> claimed_lipschitz;
};

struct NetDims {
    int width = 0;
    int depth = 0;
    long long parameter_count = 0;
};

struct ReluNet {
    std::vector<AffineLayer> layers;
    int input_dim = 0;
    NetMeta meta;

    int output_dim() const { return layers.empty() ? 0 : layers.back().rows; }
    int depth() const { return static_cast<int>(layers.size()) - 1; }
    int width() const;
    NetDims dims() const;
    void validate() const;
    bool within_budget() const;
};

using Vec = std::vector<double>;

Vec eval(const ReluNet& net, std::span<const double> x);
inline double eval1(const ReluNet& net, std::span<const double> x) { return eval(net, x)[0]; }
inline double eval1(const ReluNet& net, double x) { return eval(net, std::span<const double>(&x, 1))[0]; }

// Batched evaluation of n points stored row-major (n x input_dim) into
// out (n x output_dim). The parallel version splits points across threads;
// the serial one is the per-point reference used in tests and benchmarks.
void eval_batch(const ReluNet& net, const double* x, std::size_t n, double* out);
void eval_batch_serial(const ReluNet& net, const double* x, std::size_t n, double* out);
std::vector<double> eval_batch(const ReluNet& net, const std::vector<double>& x);

// ---- building blocks ----
ReluNet affine_net(int in_dim, const std::vector<std::vector<double>>& a, const Vec& b);
ReluNet identity_net(int dim);
ReluNet constant_net(int in_dim, const Vec& c);

enum class Junction { merge, split };

// outer(inner(x)). merge folds the two junction maps into one affine layer
// (depth adds); split inserts a ReLU layer holding (t, -t).
ReluNet compose(const ReluNet& outer, const ReluNet& inner, Junction j = Junction::merge);

// Apply an affine map to the output of net (merged into its last layer).
ReluNet then_affine(const ReluNet& net, const std::vector<std::vector<double>>& a, const Vec& b);

// Extend net to `depth` hidden layers without changing its function. lower, when
// given, holds a lower bound for every output; otherwise outputs are carried as
// (t, -t) pairs.
ReluNet pad_depth(const ReluNet& net, int depth, const std::vector<double>& lower = {});

// Stack nets sharing an input; outputs are concatenated. lower[i] is an optional
// per-output lower bound for net i (empty = unknown).
ReluNet parallel(const std::vector<ReluNet>& nets, const std::vector<std::vector<double>>& lower = {});

ReluNet clip_to_box(const ReluNet& net, const Vec& lo, const Vec& hi);

double spectral_norm(const AffineLayer& layer, double rel_tol = 1e-8, int max_iter = 5000);
double lipschitz_upper(const ReluNet& net);

// ---- file format ----
std::string serialize(const ReluNet& net);
ReluNet deserialize(const std::string& text);
void save_net(const ReluNet& net, const std::string& path);
ReluNet load_net(const std::string& path);
// writes to <path>.tmp, then renames over path
void write_file_atomic(const std::string& path, const std::string& body);

} // namespace hgan
