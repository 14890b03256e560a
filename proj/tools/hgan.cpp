#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "hgan/bits.hpp"
#include "hgan/harness.hpp"
#include "hgan/interp.hpp"
#include "hgan/poly.hpp"

using namespace hgan;

namespace {

enum Exit { kOk = 0, kFail = 1, kUsage = 2, kBudget = 3, kError = 4 };

// optional CLI values land in the parameter map only when given
struct Params {
    std::map<std::string, std::optional<std::string>> vals;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        app->add_option_function<std::string>(flag, [this, key](const std::string& v) { vals[key] = v; }, help);
    }
    std::map<std::string, std::string> collect() const {
        std::map<std::string, std::string> m;
        for (const auto& [k, v] : vals)
            if (v) m[k] = *v;
        return m;
    }
};

void print_table(const RunResult& r) {
    for (const auto& b : r.reports)
        std::printf("%-4s %-40s claimed=%-12.6g measured=%-12.6g margin=%.3g\n", b.pass ? "PASS" : "FAIL", b.tag.c_str(),
                    b.claimed, b.measured, b.margin);
    long long passed = 0;
    for (const auto& b : r.reports) passed += b.pass;
    std::printf("%lld/%zu passed\n", passed, r.reports.size());
}

int execute(const ExperimentConfig& cfg, const std::string& out, bool timing) {
    auto r = run(cfg);
    print_table(r);
    if (r.summary.contains("slope"))
        std::printf("slope %.4f  95%% CI [%.4f, %.4f]  expected %.4f\n", r.summary["slope"].get<double>(),
                    r.summary["ci"][0].get<double>(), r.summary["ci"][1].get<double>(), r.summary["expected"].get<double>());
    if (!out.empty()) write_reports(out, r, timing);
    return r.all_pass() ? kOk : kFail;
}

// the default sweep: every in-guard combination of the verification grid
int verify_all(const std::string& seed, const std::string& out, bool timing) {
    RunResult all;
    auto take = [&](const std::string& e, std::map<std::string, std::string> p) {
        p["seed"] = seed;
        auto r = run({e, p});
        all.reports.insert(all.reports.end(), r.reports.begin(), r.reports.end());
    };
    for (int W : {6, 8, 12})
        for (int L : {1, 2, 3}) take("verify-poly", {{"W", std::to_string(W)}, {"L", std::to_string(L)}});
    for (auto [W, L] : {std::pair{6, 2}, {8, 2}}) take("verify-bits", {{"W", std::to_string(W)}, {"L", std::to_string(L)}});
    for (int L = 1; L <= 8; ++L) take("verify-bits", {{"W", "1"}, {"L", std::to_string(L)}});
    for (auto [W, L] : {std::pair{6, 2}, {8, 2}, {15, 4}}) take("verify-interp", {{"W", std::to_string(W)}, {"L", std::to_string(L)}});
    for (int d = 1; d <= 2; ++d)
        for (const char* beta : {"0.5", "1", "2"})
            for (int W : {6, 8})
                take("verify-holder", {{"W", std::to_string(W)}, {"L", "2"}, {"beta", beta}, {"d", std::to_string(d)}});
    for (int d = 1; d <= 3; ++d) take("verify-memorize", {{"d", std::to_string(d)}});
    all.summary["experiment"] = "verify-all";
    print_table(all);
    if (!out.empty()) write_reports(out, all, timing);
    return all.all_pass() ? kOk : kFail;
}

ReluNet build_net(const std::string& construction, int W, int L, double beta, int d, int s, unsigned long long seed) {
    if (construction == "product") return product_net(W, L);
    if (construction == "square") return square_net(W, L);
    if (construction == "bits") return bit_extractor(L);
    if (construction == "discretizer") return discretizer(W, L, d, 1.0 / (3.0 * discretizer_K(W, L, d)));
    if (construction == "holder") return holder_approximator(builtin_target("sinusoid", beta, d), HolderBudget::make(W, L, beta, d));
    if (construction == "memorize") {
        auto g = random_discrete(capacity(W, L, d), d, seed);
        return memorize_discrete(g, SourceSpec{}, 1e-2, W, L).net;
    }
    if (construction == "value") {
        Vec xi(static_cast<std::size_t>(W) * W * L * L);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = static_cast<double>((i * 2654435761u) % 1000) / 999.0;
        return value_fitter(xi, W, L, s);
    }
    throw UsageError("unknown construction '" + construction + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit ReLU constructions, generator memorization and bound verification"};
    app.require_subcommand(1);
    bool timing = true;
    app.add_flag("!--no-timing", timing, "write runtime_ms as 0 so reruns are byte-identical");

    // verify
    auto* verify = app.add_subcommand("verify", "certify a construction's bounds");
    std::string construction, seed = "1", out;
    Params vp;
    verify->add_option("construction", construction, "interp | bits | poly | holder | memorize | all")->required();
    vp.add(verify, "--W", "W", "width budget");
    vp.add(verify, "--L", "L", "depth budget");
    vp.add(verify, "--beta", "beta", "smoothness index");
    vp.add(verify, "--d", "d", "input dimension");
    vp.add(verify, "--s", "s", "value fitter precision order");
    vp.add(verify, "--target", "target", "built-in Hoelder target or 'all'");
    vp.add(verify, "--reps", "reps", "random targets (memorize)");
    vp.add(verify, "--m", "m", "source samples (memorize)");
    vp.add(verify, "--eps", "eps", "W1 accuracy (memorize)");
    vp.add(verify, "--source", "source", "uniform | gaussian (memorize)");
    vp.add(verify, "--grid", "grid", "grid points per axis (holder)");
    verify->add_option("--seed", seed, "random seed");
    verify->add_option("--out", out, "report CSV path");

    // rate
    auto* rate = app.add_subcommand("rate", "empirical convergence rate experiment");
    std::string kind;
    Params rp;
    rate->add_option("kind", kind, "empirical | lowdim")->required()->check(CLI::IsMember({"empirical", "lowdim"}));
    rp.add(rate, "--d", "d", "ambient dimension");
    rp.add(rate, "--d-star", "d_star", "intrinsic dimension (lowdim)");
    rp.add(rate, "--beta", "beta", "smoothness of the evaluation class (1 = W1)");
    rp.add(rate, "--V", "V", "noise variance (lowdim)");
    rp.add(rate, "--half-width", "half_width", "truncation half width");
    rp.add(rate, "--n-min", "n_min", "smallest sample size");
    rp.add(rate, "--n-max", "n_max", "largest sample size");
    rp.add(rate, "--reps", "reps", "replications per size");
    rp.add(rate, "--tol", "tol", "slope tolerance");
    rp.add(rate, "--memorize", "memorize", "1 to add the memorization certificate, 0 to skip");
    rate->add_option("--seed", seed, "random seed");
    rate->add_option("--out", out, "report CSV path");

    // oracle-check
    auto* oc = app.add_subcommand("oracle-check", "numeric check of the error decomposition");
    Params op;
    op.add(oc, "--reps", "reps", "number of seeded instances");
    oc->add_option("--seed", seed, "random seed");
    oc->add_option("--out", out, "report CSV path");

    // dim-estimate
    auto* de = app.add_subcommand("dim-estimate", "box-counting dimension of low-dimensional samples");
    Params dp;
    dp.add(de, "--d", "d", "ambient dimension");
    dp.add(de, "--d-star", "d_star", "intrinsic dimension");
    dp.add(de, "--n", "n", "sample size");
    dp.add(de, "--V", "V", "noise variance");
    de->add_option("--seed", seed, "random seed");
    de->add_option("--out", out, "report CSV path");

    // net export / import
    auto* net = app.add_subcommand("net", "export or import a network file");
    net->require_subcommand(1);
    auto* ex = net->add_subcommand("export", "build a construction and save it");
    std::string path;
    int W = 6, L = 2, d = 1, s = 1;
    double beta = 1.0;
    ex->add_option("construction", construction, "product | square | bits | discretizer | value | holder | memorize")->required();
    ex->add_option("path", path, "output file")->required();
    ex->add_option("--W", W, "width budget");
    ex->add_option("--L", L, "depth budget");
    ex->add_option("--beta", beta, "smoothness index (holder)");
    ex->add_option("--d", d, "input dimension");
    ex->add_option("--s", s, "precision order (value)");
    ex->add_option("--seed", seed, "random seed (memorize)");
    auto* im = net->add_subcommand("import", "load a network file and check its budget");
    im->add_option("path", path, "input file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*verify) {
            if (construction == "all") return verify_all(seed, out, timing);
            auto p = vp.collect();
            p["seed"] = seed;
            return execute({"verify-" + construction, p}, out, timing);
        }
        if (*rate) {
            auto p = rp.collect();
            p["seed"] = seed;
            return execute({"rate-" + kind, p}, out, timing);
        }
        if (*oc) {
            auto p = op.collect();
            p["seed"] = seed;
            return execute({"oracle-decomposition", p}, out, timing);
        }
        if (*de) {
            auto p = dp.collect();
            p["seed"] = seed;
            return execute({"dim-estimate", p}, out, timing);
        }
        if (*ex) {
            auto n = build_net(construction, W, L, beta, d, s, std::stoull(seed));
            save_net(n, path);
            auto dm = n.dims();
            std::printf("%s: width %d depth %d parameters %lld\n", path.c_str(), dm.width, dm.depth, dm.parameter_count);
            return kOk;
        }
        if (*im) {
            auto n = load_net(path);
            auto dm = n.dims();
            std::printf("%s: tag %s input %d output %d width %d/%d depth %d/%d parameters %lld\n", path.c_str(),
                        n.meta.tag.c_str(), n.input_dim, n.output_dim(), dm.width, n.meta.claimed_width, dm.depth,
                        n.meta.claimed_depth, dm.parameter_count);
            return n.within_budget() ? kOk : kFail;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return kBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kUsage;
}
