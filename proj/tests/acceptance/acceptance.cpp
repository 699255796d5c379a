// Acceptance suite: one pass/fail line per criterion.
//   volinfo_acceptance [--out DIR] N [N ...]     (or "all")
// Data files go to DIR/cN/; criteria 4 and 5 reuse the curve from criterion 3
// when present, and criterion 12 reruns 3, 8 and 10 and compares bytes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "cli/commands.hpp"
#include "volinfo/errors.hpp"
#include "volinfo/gp_stochvol.hpp"
#include "volinfo/info_measures.hpp"
#include "volinfo/laplace_inversion.hpp"

using namespace volinfo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [FAIL]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_runtime(Outcome& o, double elapsed, double budget) {
    o.check(elapsed < budget, fmt("runtime %.1f s < %.0f s", elapsed, budget));
}

const HestonParams kParams{};

// ---------------------------------------------------------------- 1
Outcome stationary_law(const fs::path&) {
    const auto t0 = std::chrono::steady_clock::now();
    HestonParams p = kParams;
    const double alpha = 2.011;
    p.gamma = alpha * p.kappa * p.kappa / (2.0 * p.theta);
    DensityGrid1D g;
    g.axis = default_v_axis(p, 128);
    for (double v : g.axis.nodes) g.values.push_back(stationary_pdf(v, p));
    recompute_mass(g);
    const double rate = alpha / p.theta;
    const double h_exact =
        (alpha - std::log(rate) + std::lgamma(alpha) + (1.0 - alpha) * boost::math::digamma(alpha)) / std::numbers::ln2;
    const double dh = std::abs(differential_entropy(g) - h_exact);
    const double dm = std::abs(g.mean() - p.theta);
    const double dv = std::abs(g.central_moment(2) - p.theta * p.theta / alpha);
    Outcome o;
    o.check(dh < 1e-4, fmt("|entropy error| %.2e bits < 1e-4", dh));
    o.check(dm < 1e-6, fmt("|mean error| %.2e < 1e-6", dm));
    o.check(dv < 1e-6, fmt("|variance error| %.2e < 1e-6", dv));
    check_runtime(o, seconds_since(t0), 1.0);
    return o;
}

// ---------------------------------------------------------------- 2
Outcome stehfest_suite(const fs::path&) {
    const auto t0 = std::chrono::steady_clock::now();
    const StehfestScheme& s = stehfest_weights(12);
    struct Pair {
        std::string name;
        std::function<double(double)> transform, exact;
        double tol;
    };
    const double a = 1.0;
    auto gamma_pair = [](double shape, double rate) {
        return Pair{fmt("Gamma(%g,%g)", shape, rate),
                    [=](double x) { return std::pow(rate / (x + rate), shape); },
                    [=](double v) {
                        return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(v) - rate * v -
                                        std::lgamma(shape));
                    },
                    1e-6};
    };
    // Constants are exact to rounding; every other pair here is smooth and non-oscillatory.
    const std::vector<Pair> pairs = {
        {"1/s", [](double x) { return 1.0 / x; }, [](double) { return 1.0; }, 1e-10},
        {"1/s^2", [](double x) { return 1.0 / (x * x); }, [](double v) { return v; }, 1e-6},
        {"1/(s+a)", [=](double x) { return 1.0 / (x + a); }, [=](double v) { return std::exp(-a * v); }, 1e-6},
        gamma_pair(1.0, 2.0),
        gamma_pair(0.5, 1.0),
        gamma_pair(2.0, 2.0),
    };
    Outcome o;
    for (const Pair& pr : pairs) {
        double worst = 0.0;
        for (double v : {0.5, 1.0, 2.0}) worst = std::max(worst, std::abs(s.invert(pr.transform, v) - pr.exact(v)));
        o.check(worst <= pr.tol, pr.name + fmt(" max error %.2e <= %.0e", worst, pr.tol));
    }
    check_runtime(o, seconds_since(t0), 1.0);
    return o;
}

// ---------------------------------------------------------------- 3, 4, 5
struct Curve {
    std::vector<double> days, bits;
};

Curve read_curve(const fs::path& csv, double rho) {
    Curve c;
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() < 4 || std::stod(f[0]) != rho) continue;
        c.days.push_back(std::stod(f[1]));
        c.bits.push_back(std::stod(f[3]));
    }
    return c;
}

double run_mi_curve(const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    cli::RunConfig cfg;
    cfg.out = dir;
    cli::cmd_mi_curve(cfg, cli::MiCurveArgs{});
    return seconds_since(t0);
}

Curve base_curve(const fs::path& out) {
    const fs::path csv = out / "c3" / "mi_curve.csv";
    if (!fs::exists(csv)) run_mi_curve(out / "c3");
    return read_curve(csv, kParams.rho);
}

Outcome mi_curve_shape(const fs::path& out) {
    const double elapsed = run_mi_curve(out / "c3");
    const Curve c = read_curve(out / "c3" / "mi_curve.csv", kParams.rho);
    const auto best = static_cast<std::size_t>(std::max_element(c.bits.begin(), c.bits.end()) - c.bits.begin());
    int maxima = 0;
    for (std::size_t i = 1; i + 1 < c.bits.size(); ++i)
        if (c.bits[i] > c.bits[i - 1] && c.bits[i] >= c.bits[i + 1]) ++maxima;
    Outcome o;
    o.check(maxima == 1 && best > 0 && best + 1 < c.bits.size(),
            "single interior maximum (" + std::to_string(maxima) + " found)");
    o.check(std::abs(c.bits[best] - 0.48) <= 0.05, fmt("peak %.4f bits in 0.48 +- 0.05", c.bits[best]));
    o.check(std::abs(c.days[best] - 55.0) <= 12.0, fmt("peak at %.0f days in 55 +- 12", c.days[best]));
    check_runtime(o, elapsed, 600.0);
    return o;
}

Outcome small_t_level(const fs::path& out) {
    const Curve c = base_curve(out);
    Outcome o;
    o.check(c.days.front() >= 2.0 && c.days.front() <= 5.0, fmt("smallest t = %.0f days in [2, 5]", c.days.front()));
    o.check(c.bits.front() >= 0.10 && c.bits.front() <= 0.22, fmt("MI %.4f bits in [0.10, 0.22]", c.bits.front()));
    return o;
}

Outcome long_t_decay(const fs::path& out) {
    const Curve c = base_curve(out);
    const double peak = *std::max_element(c.bits.begin(), c.bits.end());
    const double cut = c.days.back() - 0.25 * (c.days.back() - c.days.front());
    bool decreasing = true;
    for (std::size_t i = 1; i < c.days.size(); ++i)
        if (c.days[i - 1] >= cut) decreasing = decreasing && c.bits[i] < c.bits[i - 1];
    Outcome o;
    o.check(c.bits.back() <= 0.75 * peak, fmt("MI(554) %.4f <= 0.75 x peak %.4f", c.bits.back(), peak));
    o.check(decreasing, fmt("decreasing for t >= %.0f days", cut));
    return o;
}

// ---------------------------------------------------------------- 6
Outcome rho_sweep(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    cli::RunConfig cfg;
    cfg.out = out / "c6";
    cli::MiCurveArgs args;
    args.rhos = {-0.767, -0.4, 0.0};
    cli::cmd_mi_curve(cfg, args);
    const fs::path csv = cfg.out / "mi_curve.csv";
    const Curve a = read_curve(csv, -0.767), b = read_curve(csv, -0.4), z = read_curve(csv, 0.0);
    std::size_t violations = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        if (!(a.bits[i] >= b.bits[i] && b.bits[i] >= z.bits[i])) ++violations;
    const double zmax = *std::max_element(z.bits.begin(), z.bits.end());
    Outcome o;
    o.check(violations == 0, "pointwise ordered (" + std::to_string(violations) + " violations)");
    o.check(zmax < 0.05, fmt("max MI at rho = 0 is %.4f bits < 0.05", zmax));
    check_runtime(o, seconds_since(t0), 1800.0);
    return o;
}

// ---------------------------------------------------------------- 7
Outcome flow_ratio_bounds(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    cli::RunConfig cfg;
    cfg.out = out / "c7";
    const Json doc = cli::cmd_flow(cfg, cli::FlowArgs{});
    std::istringstream in(slurp(cfg.out / "flow.csv"));
    std::string line;
    std::getline(in, line);
    std::map<double, double> top;
    std::vector<std::tuple<int, double, double, double>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        rows.emplace_back(std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]));
        if (std::stoi(f[0]) == 0) top[std::stod(f[1])] = std::stod(f[2]);
    }
    std::size_t violations = 0;
    bool zero_stock = true;
    for (const auto& [n, tau, flow, stock] : rows) {
        if (n > 0 && flow > top[tau]) ++violations;
        if (n == 0) zero_stock = zero_stock && stock == 0.0;
    }
    const double ratio = doc["summary"]["max_ratio"].is_number() ? doc["summary"]["max_ratio"].get<double>() : -1.0;
    Outcome o;
    o.check(violations == 0, "flow(n=0) dominates (" + std::to_string(violations) + " violations)");
    o.check(zero_stock, "stock MI at n = 0 is exactly 0");
    o.check(std::abs(ratio - 0.27) <= 0.04, fmt("max ratio %.4f in 0.27 +- 0.04", ratio));
    check_runtime(o, seconds_since(t0), 3600.0);
    return o;
}

// ---------------------------------------------------------------- 8
Json run_triangle(const fs::path& dir) {
    cli::RunConfig cfg;
    cfg.out = dir;
    cfg.seed = 8;
    cli::ValidateArgs args;
    args.t_days = {25.2, 63.0, 252.0};
    args.n_paths = 1000000;
    args.mi_t_days = 55.0;
    return cli::cmd_validate(cfg, args);
}

Outcome oracle_triangle(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const Json doc = run_triangle(out / "c8");
    Outcome o;
    for (const Json& c : doc["checks"]) {
        const std::string name = c["check"].get<std::string>();
        if (name.rfind("marginal", 0) == 0) continue; // reported in the data file only
        o.check(c["pass"].get<bool>(), name + fmt(" at %.1f d: %.4f", c["t_days"].get<double>(), c["value"].get<double>()) +
                                           fmt(" <= %.4f", c["tolerance"].get<double>()));
    }
    check_runtime(o, seconds_since(t0), 1200.0);
    return o;
}

// ---------------------------------------------------------------- 9
Outcome gp_units(const fs::path&) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> ur(-0.1, 0.1), uy(-12.0, 0.0);
    double worst = 0.0;
    const double h = 1e-6;
    for (int k = 0; k < 200; ++k) {
        const double r = ur(gen), y = uy(gen);
        const LogLikTerms t = log_lik_terms(r, y), p = log_lik_terms(r, y + h), m = log_lik_terms(r, y - h);
        const double fd1 = (p.value - m.value) / (2 * h), fd2 = -(p.derivative - m.derivative) / (2 * h);
        worst = std::max({worst, std::abs(t.derivative - fd1) / std::max(1.0, std::abs(fd1)),
                          std::abs(t.curvature - fd2) / std::max(1.0, std::abs(fd2))});
    }
    o.check(worst < 1e-6, fmt("log-likelihood derivatives vs differences %.1e < 1e-6", worst));

    KernelSpec unit;
    unit.terms = {{KernelKind::OU, 1.0, 12.6, 1.0}};
    for (double r : {0.001, 0.02, 0.1}) {
        ReturnsSeries s;
        s.days = {0.0};
        s.returns = {r};
        const LaplaceFit fit = laplace_fit(unit, s);
        const double k = fit.K(0, 0);
        boost::math::quadrature::sinh_sinh<double> integrator;
        const double exact = std::log(integrator.integrate([&](double y) {
            return std::exp(log_lik_terms(r, y).value - 0.5 * y * y / k - 0.5 * std::log(2.0 * std::numbers::pi * k));
        }));
        const double err = std::abs(fit.log_marginal - exact);
        o.check(err < 1e-3, fmt("n=1 evidence at r=%g off by %.2e nats < 1e-3", r, err));
    }

    ReturnsSeries one;
    one.days = {0.0};
    one.returns = {0.05};
    const LaplaceFit f1 = laplace_fit(unit, one);
    const double gain_err = std::abs(information_gain(f1, {0}) - 0.5 * std::log2(1.0 + f1.K(0, 0) * f1.W[0]));
    o.check(gain_err < 1e-10, fmt("scalar gain vs closed form %.1e < 1e-10", gain_err));
    check_runtime(o, seconds_since(t0), 1.0);
    return o;
}

// ---------------------------------------------------------------- 10
KernelTerm ou_term(double variance, double corr_days) { return {KernelKind::OU, variance, 252.0 / corr_days, 1.0}; }

double run_recovery(const fs::path& dir, Outcome* o) {
    const auto t0 = std::chrono::steady_clock::now();
    const double truth_rate = 25.0, mean_y = std::log(1e-4);
    KernelSpec single;
    single.terms = {ou_term(1.0, 252.0 / truth_rate)};
    KernelSpec two;
    two.terms = {ou_term(1.0, 5.0), ou_term(1.0, 125.0)};
    std::ostringstream csv;
    csv << "seed,recovered_rate_per_year,rate_ratio,ou_evidence,ou_ou_evidence,difference\n";
    Json runs = Json::array();
    int recovered = 0, two_wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        OptimizeOptions opt;
        opt.restarts = 20;
        opt.seed = 1000 + seed;
        const SyntheticSeries a = synthetic_returns(single, mean_y, 500, 2 * seed);
        const OptimizeResult ra = optimize_hyperparams(make_template("OU"), a.series, opt);
        const double rate = ra.kernel.terms[1].scale, ratio = rate / truth_rate;
        const SyntheticSeries b = synthetic_returns(two, mean_y, 500, 2 * seed + 1);
        const OptimizeResult r1 = optimize_hyperparams(make_template("OU"), b.series, opt);
        const OptimizeResult r2 = optimize_hyperparams(make_template("OU_OU"), b.series, opt);
        const double diff = r2.fit.log_marginal - r1.fit.log_marginal;
        if (ratio >= 0.5 && ratio <= 2.0) ++recovered;
        if (diff > 0.0) ++two_wins;
        csv << seed << ',' << format_double(rate) << ',' << format_double(ratio) << ','
            << format_double(r1.fit.log_marginal) << ',' << format_double(r2.fit.log_marginal) << ','
            << format_double(diff) << '\n';
        Json j;
        j["seed"] = seed;
        j["ou_fit_on_ou_data"] = ra.kernel.to_json();
        j["ou_fit_on_two_timescale_data"] = r1.kernel.to_json();
        j["ou_ou_fit_on_two_timescale_data"] = r2.kernel.to_json();
        runs.push_back(j);
    }
    write_text(dir / "gp_recovery.csv", csv.str());
    Json doc;
    doc["truth_rate_per_year"] = truth_rate;
    doc["two_timescale_days"] = {5.0, 125.0};
    doc["observations"] = 500;
    doc["restarts"] = 20;
    doc["runs"] = runs;
    write_json(dir / "gp_recovery.json", doc);
    const double elapsed = seconds_since(t0);
    if (o != nullptr) {
        o->check(recovered >= 7, std::to_string(recovered) + "/10 OU rates within x2 (need 7)");
        o->check(two_wins >= 8, std::to_string(two_wins) + "/10 OU_OU evidence above OU (need 8)");
    }
    return elapsed;
}

Outcome gp_recovery(const fs::path& out) {
    Outcome o;
    const double elapsed = run_recovery(out / "c10", &o);
    check_runtime(o, elapsed, 1800.0);
    return o;
}

// ---------------------------------------------------------------- 11
Outcome info_gain_behaviour(const fs::path& out) {
    const auto t0 = std::chrono::steady_clock::now();
    KernelSpec truth;
    truth.terms = {ou_term(1.0, 20.0)};
    const SyntheticSeries s = synthetic_returns(truth, std::log(1e-4), 1000, 11);
    OptimizeOptions opt;
    opt.restarts = 20;
    opt.seed = 11;
    const OptimizeResult r = optimize_hyperparams(make_template("OU"), s.series, opt);
    const std::vector<int> windows = {1, 2, 5, 10, 20, 30, 50, 75, 100, 150, 200, 300, 500};
    const InfoGainCurve c = info_gain_curve(r.fit, s.series.size() - 1, windows);
    Json doc;
    doc["kernel"] = r.kernel.to_json();
    doc["curve"] = c.to_json();
    write_json(out / "c11" / "infogain.json", doc);

    bool monotone = c.gain.front() >= -1e-6;
    for (std::size_t i = 1; i < c.gain.size(); ++i) monotone = monotone && c.gain[i] >= c.gain[i - 1] - 1e-6;
    auto at = [&](int w) { return c.gain[static_cast<std::size_t>(std::find(windows.begin(), windows.end(), w) - windows.begin())]; };
    const double late = at(100) - at(20), saturated = c.gain.back();
    Outcome o;
    o.check(monotone, "gain nondecreasing in window length");
    o.check(late < 0.15, fmt("gain(100) - gain(20) = %.4f bits < 0.15", late));
    // Order one: within half a decade of 1 bit.
    o.check(saturated >= 1.0 / std::sqrt(10.0) && saturated <= std::sqrt(10.0),
            fmt("saturated gain %.3f bits in [0.316, 3.16]", saturated));
    check_runtime(o, seconds_since(t0), 300.0);
    return o;
}

// ---------------------------------------------------------------- 12
Outcome determinism(const fs::path& out) {
    const fs::path again = out / "c12";
    if (!fs::exists(out / "c3" / "mi_curve.csv")) run_mi_curve(out / "c3");
    if (!fs::exists(out / "c8" / "validate.csv")) run_triangle(out / "c8");
    if (!fs::exists(out / "c10" / "gp_recovery.csv")) run_recovery(out / "c10", nullptr);
    run_mi_curve(again / "c3");
    run_triangle(again / "c8");
    run_recovery(again / "c10", nullptr);
    Outcome o;
    for (const char* f : {"c3/mi_curve.csv", "c3/mi_curve.json", "c8/validate.csv", "c8/validate.json",
                          "c10/gp_recovery.csv", "c10/gp_recovery.json"}) {
        const std::string a = slurp(out / f), b = slurp(again / f);
        o.check(!a.empty() && a == b, std::string(f) + " identical");
    }
    return o;
}

struct Entry {
    int id;
    const char* name;
    Outcome (*run)(const fs::path&);
};

const Entry kCriteria[] = {
    {1, "stationary law", stationary_law},
    {2, "Stehfest transform pairs", stehfest_suite},
    {3, "MI curve shape", mi_curve_shape},
    {4, "small-t level", small_t_level},
    {5, "long-t decay", long_t_decay},
    {6, "rho sweep", rho_sweep},
    {7, "flow and ratio", flow_ratio_bounds},
    {8, "oracle triangle", oracle_triangle},
    {9, "GP unit correctness", gp_units},
    {10, "GP recovery", gp_recovery},
    {11, "information gain", info_gain_behaviour},
    {12, "determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
    fs::path out = "acceptance-out";
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) {
            out = argv[++i];
        } else if (a == "all") {
            for (const Entry& e : kCriteria) ids.push_back(e.id);
        } else {
            try {
                ids.push_back(std::stoi(a));
            } catch (const std::exception&) {
                std::cerr << "usage: volinfo_acceptance [--out DIR] all | N...\n";
                return 3;
            }
        }
    }
    if (ids.empty()) {
        std::cerr << "usage: volinfo_acceptance [--out DIR] all | N...\n";
        return 3;
    }
    bool all_pass = true;
    for (int id : ids) {
        const auto it = std::find_if(std::begin(kCriteria), std::end(kCriteria), [&](const Entry& e) { return e.id == id; });
        if (it == std::end(kCriteria)) {
            std::cerr << "unknown criterion " << id << "\n";
            return 3;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it->run(out);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        std::cout << "criterion " << id << " (" << it->name << "): " << (o.pass ? "PASS" : "FAIL")
                  << fmt(" [%.1f s] ", seconds_since(t0)) << o.detail << std::endl;
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
