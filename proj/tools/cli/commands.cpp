#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "volinfo/errors.hpp"
#include "volinfo/gp_stochvol.hpp"
#include "volinfo/info_measures.hpp"
#include "volinfo/mc_oracle.hpp"
#include "volinfo/pde_oracle.hpp"

namespace volinfo::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> to_years(const std::vector<double>& days, const CalendarConvention& cal) {
    std::vector<double> t;
    for (double d : days) t.push_back(cal.years(d));
    return t;
}

// Number of strict interior local maxima.
int interior_maxima(const std::vector<double>& y) {
    int count = 0;
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) ++count;
    return count;
}

Json curve_summary(const std::vector<double>& days, const std::vector<double>& bits) {
    const auto best = static_cast<std::size_t>(std::max_element(bits.begin(), bits.end()) - bits.begin());
    Json j;
    j["argmax_t_days"] = days[best];
    j["max_bits"] = bits[best];
    j["interior_max"] = best > 0 && best + 1 < bits.size();
    j["interior_maxima"] = interior_maxima(bits);
    j["first_t_days"] = days.front();
    j["first_bits"] = bits.front();
    j["last_t_days"] = days.back();
    j["last_bits"] = bits.back();
    return j;
}

struct FlowRow {
    int n = 0;
    double tau_days = 0.0;
    FlowBreakdown b;
    double ratio = kNaN;
};

std::vector<FlowRow> flow_table(const RunConfig& cfg, const FlowArgs& args) {
    if (args.n.empty() || args.tau_days.empty()) throw InputError("flow needs at least one n and one tau");
    FlowPolicy policy;
    policy.grid = cfg.grid;
    std::vector<FlowRow> rows;
    for (int n : args.n)
        for (double tau : args.tau_days) {
            FlowRow r;
            r.n = n;
            r.tau_days = tau;
            r.b = flow_breakdown({n, cfg.calendar.years(tau)}, cfg.params, policy);
            if (n > 0) {
                try {
                    r.ratio = flow_ratio(r.b);
                } catch (const DegenerateRatio&) {
                    r.ratio = kNaN;
                }
            }
            rows.push_back(r);
        }
    return rows;
}

Json max_ratio_json(const std::vector<FlowRow>& rows) {
    Json j;
    double best = -1.0;
    for (const FlowRow& r : rows)
        if (std::isfinite(r.ratio) && r.ratio > best) {
            best = r.ratio;
            j["max_ratio"] = r.ratio;
            j["at_n"] = r.n;
            j["at_tau_days"] = r.tau_days;
        }
    if (best < 0.0) j["max_ratio"] = nullptr;
    return j;
}

// Gamma-quantile bins of the simulated variance against equal probabilities.
double quantile_bin_l1(const std::vector<double>& v, const HestonParams& params, int bins) {
    std::vector<double> edges;
    for (int k = 1; k < bins; ++k) edges.push_back(stationary_quantile(static_cast<double>(k) / bins, params));
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double x : v) counts[static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin())] += 1.0;
    double l1 = 0.0;
    for (double c : counts) l1 += std::abs(c / static_cast<double>(v.size()) - 1.0 / bins);
    return l1;
}

double gamma_marginal_l1(const DensityGrid2D& g, const HestonParams& params) {
    const DensityGrid1D mv = g.marginal_v();
    double l1 = 0.0;
    for (std::size_t j = 0; j < mv.axis.size(); ++j)
        l1 += mv.axis.weights[j] * std::abs(mv.values[j] - stationary_pdf(mv.axis.nodes[j], params));
    return l1;
}

struct GpInputs {
    PriceSeries prices;
    LoadReport report;
    ReturnsSeries series;
    GpConfig config;
    bool have_config = false;
    OptimizeOptions options;
    Json manifest;
};

GpInputs gp_inputs(const RunConfig& cfg, const GpArgs& args) {
    if (args.data.empty()) throw InputError("gp commands need --data");
    GpInputs in;
    in.prices = load_prices(args.data, args.columns, &in.report);
    in.series = to_returns(in.prices, cfg.calendar);
    in.manifest = price_manifest(args.data, in.prices, in.report, args.columns);
    if (!args.config.empty()) {
        in.config = load_gp_config(args.config);
        in.have_config = true;
        in.manifest["config_sha256"] = sha256_file(args.config);
    }
    in.options.seed = cfg.seed;
    in.options.restarts = args.restarts ? *args.restarts : (in.have_config ? in.config.restarts : 100);
    if (in.options.restarts < 1) throw InputError("--restarts must be at least 1");
    if (in.have_config) in.options.ranges = in.config.ranges;
    for (const std::string& w : in.report.warnings) std::cerr << "warning: " << w << "\n";
    return in;
}

KernelSpec resolve_template(const std::string& name, const GpInputs& in) {
    for (const KernelSpec& k : in.config.templates)
        if (k.name == name) return k;
    return make_template(name);
}

std::vector<KernelSpec> resolve_templates(const GpArgs& args, const GpInputs& in,
                                          const std::vector<std::string>& fallback) {
    std::vector<std::string> names = args.templates;
    if (names.empty() && !in.config.templates.empty())
        for (const KernelSpec& k : in.config.templates) names.push_back(k.name);
    if (names.empty()) names = fallback;
    std::vector<KernelSpec> out;
    for (const std::string& n : names) out.push_back(resolve_template(n, in));
    return out;
}

Json gp_metadata(const RunConfig& cfg, const GpInputs& in) {
    Json j;
    j["version"] = provenance(cfg.params, cfg.seed)["version"];
    j["seed"] = cfg.seed;
    j["days_per_year"] = cfg.calendar.days_per_year;
    j["restarts"] = in.options.restarts;
    j["returns"] = "simple";
    j["data"] = in.manifest;
    return j;
}

std::string band_csv(const Prediction& p, const GpInputs* in) {
    std::ostringstream os;
    os << "day,date,return,y_mean,y_sd,sigma_lo,sigma_hi\n";
    for (std::size_t i = 0; i < p.days.size(); ++i) {
        const auto d = static_cast<std::size_t>(p.days[i]);
        const bool observed = in != nullptr && d < in->series.size();
        os << csv_number(p.days[i]) << ',' << (observed ? format_date(in->prices.dates[d + 1]) : "") << ','
           << (observed ? csv_number(in->series.returns[d]) : "") << ',' << csv_number(p.mean[i]) << ','
           << csv_number(std::sqrt(std::max(p.variance[i], 0.0))) << ',' << csv_number(p.sigma_lo[i]) << ','
           << csv_number(p.sigma_hi[i]) << '\n';
    }
    return os.str();
}

}  // namespace

Json cmd_mi_curve(const RunConfig& cfg, const MiCurveArgs& args) {
    if (args.t_days.empty()) throw InputError("--t-days is empty");
    std::vector<double> rhos = args.rhos;
    if (rhos.empty()) rhos.push_back(cfg.params.rho);
    const std::vector<double> t = to_years(args.t_days, cfg.calendar);

    std::ostringstream csv;
    csv << "rho,t_days,t_years,bits,mass,clipped_mass\n";
    Json curves = Json::array();
    std::vector<std::vector<double>> all_bits;
    for (double rho : rhos) {
        HestonParams p = cfg.params;
        p.rho = rho;
        p.validate();
        const std::vector<CurvePoint> c = mi_curve(p, t, cfg.grid);
        std::vector<double> bits;
        for (std::size_t i = 0; i < c.size(); ++i) {
            bits.push_back(c[i].bits);
            csv << csv_number(rho) << ',' << csv_number(args.t_days[i]) << ',' << csv_number(c[i].t) << ','
                << csv_number(c[i].bits) << ',' << csv_number(c[i].mass) << ',' << csv_number(c[i].clipped_mass)
                << '\n';
        }
        Json s = curve_summary(args.t_days, bits);
        s["rho"] = rho;
        s["fingerprint"] = fingerprint(p);
        curves.push_back(s);
        all_bits.push_back(std::move(bits));
    }
    // Ordering follows the rho list: a more negative rho should give more information.
    bool ordered = true;
    for (std::size_t a = 0; a < rhos.size(); ++a)
        for (std::size_t b = 0; b < rhos.size(); ++b)
            if (rhos[a] < rhos[b])
                for (std::size_t i = 0; i < t.size(); ++i) ordered = ordered && all_bits[a][i] >= all_bits[b][i];

    Json doc;
    doc["command"] = "mi-curve";
    doc["metadata"] = run_metadata(cfg);
    doc["t_days"] = args.t_days;
    doc["curves"] = curves;
    doc["pointwise_ordered_by_rho"] = ordered;
    write_text(cfg.out / "mi_curve.csv", csv.str());
    write_json(cfg.out / "mi_curve.json", doc);
    return doc;
}

Json cmd_flow(const RunConfig& cfg, const FlowArgs& args) {
    const std::vector<FlowRow> rows = flow_table(cfg, args);
    std::ostringstream csv;
    csv << "n,tau_days,flow_bits,stock_mi_bits,ratio\n";
    std::map<double, double> top;
    for (const FlowRow& r : rows) {
        csv << r.n << ',' << csv_number(r.tau_days) << ',' << csv_number(r.b.flow) << ','
            << csv_number(r.b.stock_mi) << ',' << csv_number(r.ratio) << '\n';
        if (r.n == 0) top[r.tau_days] = r.b.flow;
    }
    bool dominated = true;
    for (const FlowRow& r : rows)
        if (r.n > 0 && top.count(r.tau_days)) dominated = dominated && r.b.flow <= top[r.tau_days] + 1e-9;
    Json doc;
    doc["command"] = "flow";
    doc["metadata"] = run_metadata(cfg);
    doc["n"] = args.n;
    doc["tau_days"] = args.tau_days;
    doc["summary"] = max_ratio_json(rows);
    doc["summary"]["n0_dominates"] = dominated;
    double n0_stock = 0.0;
    for (const FlowRow& r : rows)
        if (r.n == 0) n0_stock = std::max(n0_stock, std::abs(r.b.stock_mi));
    doc["summary"]["n0_stock_mi_max_abs"] = n0_stock;
    write_text(cfg.out / "flow.csv", csv.str());
    write_json(cfg.out / "flow.json", doc);
    return doc;
}

Json cmd_ratio(const RunConfig& cfg, const FlowArgs& args) {
    const std::vector<FlowRow> rows = flow_table(cfg, args);
    std::ostringstream csv;
    csv << "n,tau_days,ratio\n";
    for (const FlowRow& r : rows)
        if (r.n > 0) csv << r.n << ',' << csv_number(r.tau_days) << ',' << csv_number(r.ratio) << '\n';
    Json doc;
    doc["command"] = "ratio";
    doc["metadata"] = run_metadata(cfg);
    doc["n"] = args.n;
    doc["tau_days"] = args.tau_days;
    doc["summary"] = max_ratio_json(rows);
    write_text(cfg.out / "ratio.csv", csv.str());
    write_json(cfg.out / "ratio.json", doc);
    return doc;
}

Json cmd_gp_fit(const RunConfig& cfg, const GpArgs& args) {
    const GpInputs in = gp_inputs(cfg, args);
    const std::vector<KernelSpec> ks = resolve_templates(args, in, {"OU"});
    if (ks.size() != 1) throw InputError("gp fit takes a single --template");
    const OptimizeResult r = optimize_hyperparams(ks.front(), in.series, in.options);

    Json doc;
    doc["command"] = "gp fit";
    doc["metadata"] = gp_metadata(cfg, in);
    doc["template"] = ks.front().name;
    doc["log_evidence_nats"] = r.fit.log_marginal;
    doc["result"] = r.to_json();
    write_text(cfg.out / "gp_band.csv", band_csv(posterior_band(r.fit), &in));
    if (args.horizon_days > 0) {
        std::vector<double> future;
        const double last = in.series.days.back();
        for (int h = 1; h <= args.horizon_days; ++h) future.push_back(last + h);
        write_text(cfg.out / "gp_forecast.csv", band_csv(predict(r.fit, future), nullptr));
        doc["forecast_days"] = args.horizon_days;
    }
    write_json(cfg.out / "gp_fit.json", doc);
    return doc;
}

Json cmd_gp_compare(const RunConfig& cfg, const GpArgs& args) {
    const GpInputs in = gp_inputs(cfg, args);
    const std::vector<KernelSpec> ks = resolve_templates(args, in, template_names());
    const std::vector<ModelScore> scores = compare_models(in.series, ks, in.options);
    std::ostringstream csv;
    csv << "rank,template,log_evidence_nats,n_hyper\n";
    Json table = Json::array();
    for (const ModelScore& s : scores) {
        csv << s.rank << ',' << s.name << ',' << csv_number(s.evidence) << ',' << s.n_hyper << '\n';
        Json e;
        e["rank"] = s.rank;
        e["template"] = s.name;
        e["log_evidence_nats"] = s.evidence;
        e["n_hyper"] = s.n_hyper;
        e["kernel"] = s.result.kernel.to_json(cfg.calendar);
        e["best_restart"] = s.result.best_restart;
        table.push_back(e);
    }
    Json doc;
    doc["command"] = "gp compare";
    doc["metadata"] = gp_metadata(cfg, in);
    doc["ranking"] = table;
    write_text(cfg.out / "gp_compare.csv", csv.str());
    write_json(cfg.out / "gp_compare.json", doc);
    return doc;
}

Json cmd_gp_infogain(const RunConfig& cfg, const GpArgs& args) {
    const GpInputs in = gp_inputs(cfg, args);
    const std::vector<KernelSpec> ks = resolve_templates(args, in, {"OU"});
    if (ks.size() != 1) throw InputError("gp infogain takes a single --template");
    const OptimizeResult r = optimize_hyperparams(ks.front(), in.series, in.options);
    const std::size_t target = args.target ? *args.target : in.series.size() - 1;
    std::vector<int> windows;
    for (int w : args.windows)
        if (static_cast<std::size_t>(w) <= target) windows.push_back(w);
    if (windows.empty()) throw InputError("no window fits before the target index");
    const InfoGainCurve c = info_gain_curve(r.fit, target, windows);

    std::vector<std::size_t> all(in.series.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const double total = information_gain(r.fit, all);

    std::ostringstream csv;
    csv << "window,gain_bits\n";
    for (std::size_t i = 0; i < c.windows.size(); ++i) csv << c.windows[i] << ',' << csv_number(c.gain[i]) << '\n';
    Json doc;
    doc["command"] = "gp infogain";
    doc["metadata"] = gp_metadata(cfg, in);
    doc["template"] = ks.front().name;
    doc["kernel"] = r.kernel.to_json(cfg.calendar);
    doc["curve"] = c.to_json();
    doc["total_gain_bits"] = total;
    doc["gain_per_observation_bits"] = total / static_cast<double>(in.series.size());
    write_text(cfg.out / "gp_infogain.csv", csv.str());
    write_json(cfg.out / "gp_infogain.json", doc);
    return doc;
}

Json cmd_validate(const RunConfig& cfg, const ValidateArgs& args) {
    if (args.t_days.empty()) throw InputError("--t-days is empty");
    std::vector<double> days = args.t_days;
    std::sort(days.begin(), days.end());
    const std::vector<double> t = to_years(days, cfg.calendar);
    const double t_mi = cfg.calendar.years(args.mi_t_days);

    SimSpec sim;
    sim.n_paths = args.n_paths;
    sim.seed = cfg.seed;
    std::vector<double> sim_times = t;
    sim_times.push_back(t_mi);
    std::sort(sim_times.begin(), sim_times.end());
    sim_times.erase(std::unique(sim_times.begin(), sim_times.end()), sim_times.end());
    const SampleSet s = simulate(cfg.params, sim_times, InitialCondition::stationary(), sim);
    auto sample_index = [&](double tt) {
        return static_cast<std::size_t>(std::find(sim_times.begin(), sim_times.end(), tt) - sim_times.begin());
    };

    bool pass = true;
    Json checks = Json::array();
    std::ostringstream csv;
    csv << "t_days,check,value,tolerance,pass\n";
    auto record = [&](double d, const std::string& name, double value, double tol) {
        const bool ok = std::isfinite(value) && value <= tol;
        pass = pass && ok;
        Json c;
        c["t_days"] = d;
        c["check"] = name;
        c["value"] = value;
        c["tolerance"] = tol;
        c["pass"] = ok;
        checks.push_back(c);
        csv << csv_number(d) << ',' << name << ',' << csv_number(value) << ',' << csv_number(tol) << ','
            << (ok ? "true" : "false") << '\n';
    };

    for (std::size_t k = 0; k < t.size(); ++k) {
        const DensityGrid2D g = joint_density(t[k], cfg.params, InitialCondition::stationary(), cfg.grid);
        const PdeResult pde =
            solve_fokker_planck(t[k], cfg.params, default_pde_spec(t[k], cfg.params), InitialCondition::stationary());
        const std::size_t si = sample_index(t[k]);
        record(days[k], "l1_transform_pde", l1_distance(g, pde.density), args.l1_tolerance);
        record(days[k], "l1_transform_mc", binned_l1(s.x[si], s.v[si], g, 8, 8), args.l1_tolerance);
        record(days[k], "l1_pde_mc", binned_l1(s.x[si], s.v[si], pde.density, 8, 8), args.l1_tolerance);
        record(days[k], "marginal_v_transform", gamma_marginal_l1(g, cfg.params), args.marginal_tolerance);
        record(days[k], "marginal_v_pde", gamma_marginal_l1(pde.density, cfg.params), args.marginal_tolerance);
        record(days[k], "marginal_v_mc", quantile_bin_l1(s.v[si], cfg.params, 20), args.l1_tolerance);
    }

    const DensityGrid2D gm = joint_density(t_mi, cfg.params, InitialCondition::stationary(), cfg.grid);
    const double grid_mi = mutual_information(gm);
    const std::size_t mi_index = sample_index(t_mi);
    const Estimate mc = binned_mi(s.x[mi_index], s.v[mi_index], 24, 24);
    const double mi_tol = std::max(args.mi_tolerance, 3.0 * mc.standard_error);
    record(args.mi_t_days, "mi_grid_vs_mc", std::abs(grid_mi - mc.value), mi_tol);

    Json doc;
    doc["command"] = "validate";
    doc["metadata"] = run_metadata(cfg);
    doc["simulation"] = sim.to_json();
    doc["mi"] = {{"t_days", args.mi_t_days},
                 {"grid_bits", grid_mi},
                 {"mc_bits", mc.value},
                 {"mc_standard_error", mc.standard_error}};
    doc["checks"] = checks;
    doc["pass"] = pass;
    write_text(cfg.out / "validate.csv", csv.str());
    write_json(cfg.out / "validate.json", doc);
    return doc;
}

int run(int argc, char** argv) {
    CLI::App app{"Information content of stochastic volatility: densities, information measures and GP fits"};
    app.require_subcommand(1);
    app.fallthrough();

    std::vector<double> params;
    std::vector<int> grid;
    RunConfig cfg;
    app.add_option("--params", params, "gamma,theta,kappa,rho[,mu]")->delimiter(',');
    app.add_option("--days-per-year", cfg.calendar.days_per_year, "Trading days per year")->capture_default_str();
    app.add_option("--grid", grid, "nx,nv[,np] transform grid sizes; np is the flow increment lattice")
        ->delimiter(',');
    app.add_option("--seed", cfg.seed, "Random seed recorded in every artifact")->capture_default_str();
    app.add_option("--out", cfg.out, "Output directory")->capture_default_str();

    MiCurveArgs mi;
    CLI::App* mi_cmd = app.add_subcommand("mi-curve", "Mutual information I(x_t : v_t) against horizon");
    mi_cmd->add_option("--t-days", mi.t_days, "Horizons in trading days")->delimiter(',');
    mi_cmd->add_option("--rho", mi.rhos, "Correlation values to sweep")->delimiter(',');

    FlowArgs flow;
    CLI::App* flow_cmd = app.add_subcommand("flow", "Information flow and stock-to-stock information");
    CLI::App* ratio_cmd = app.add_subcommand("ratio", "Ratio of information flow to stock information");
    for (CLI::App* c : {flow_cmd, ratio_cmd}) {
        c->add_option("--n", flow.n, "Step counts")->delimiter(',');
        c->add_option("--tau-days", flow.tau_days, "Step lengths in trading days")->delimiter(',');
    }

    GpArgs gp;
    int restarts = 100;
    std::size_t target = 0;
    CLI::App* gp_cmd = app.add_subcommand("gp", "Gaussian-process stochastic volatility on a price file");
    gp_cmd->require_subcommand(1);
    gp_cmd->fallthrough();
    gp_cmd->add_option("--data", gp.data, "Price CSV")->check(CLI::ExistingFile);
    gp_cmd->add_option("--date-column", gp.columns.date, "Date column name")->capture_default_str();
    gp_cmd->add_option("--price-column", gp.columns.price, "Price column name")->capture_default_str();
    gp_cmd->add_option("--template", gp.templates, "OU, RBF, RatQuad, RBF_RBF, OU_OU or a config template")
        ->delimiter(',');
    CLI::Option* restarts_opt =
        gp_cmd->add_option("--restarts", restarts, "Optimiser restarts")->capture_default_str();
    gp_cmd->add_option("--config", gp.config, "Templates and ranges file")->check(CLI::ExistingFile);
    CLI::App* fit_cmd = gp_cmd->add_subcommand("fit", "Fit one template; posterior band CSV");
    fit_cmd->add_option("--horizon-days", gp.horizon_days, "Forecast days past the data");
    CLI::App* cmp_cmd = gp_cmd->add_subcommand("compare", "Evidence table over templates");
    CLI::App* ig_cmd = gp_cmd->add_subcommand("infogain", "Information gain curve at a target day");
    CLI::Option* target_opt = ig_cmd->add_option("--target", target, "Target observation index (default last)");
    ig_cmd->add_option("--windows", gp.windows, "Window lengths in days")->delimiter(',');

    ValidateArgs val;
    CLI::App* val_cmd = app.add_subcommand("validate", "Transform, PDE and Monte Carlo agreement");
    val_cmd->add_option("--t-days", val.t_days, "Horizons in trading days")->delimiter(',');
    val_cmd->add_option("--paths", val.n_paths, "Monte Carlo paths")->capture_default_str();
    val_cmd->add_option("--mi-t-days", val.mi_t_days, "Horizon for the MI comparison")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    try {
        if (!params.empty()) cfg.params = params_from_list(params);
        if (!grid.empty()) apply_grid(grid, cfg.grid);
        cfg.calendar.validate();
        if (restarts_opt->count() > 0) gp.restarts = restarts;
        if (target_opt->count() > 0) gp.target = target;

        Json summary;
        bool ok = true;
        if (*mi_cmd) summary = cmd_mi_curve(cfg, mi);
        else if (*flow_cmd) summary = cmd_flow(cfg, flow);
        else if (*ratio_cmd) summary = cmd_ratio(cfg, flow);
        else if (*fit_cmd) summary = cmd_gp_fit(cfg, gp);
        else if (*cmp_cmd) summary = cmd_gp_compare(cfg, gp);
        else if (*ig_cmd) summary = cmd_gp_infogain(cfg, gp);
        else if (*val_cmd) {
            summary = cmd_validate(cfg, val);
            ok = summary["pass"].get<bool>();
        }
        std::cout << summary.dump(2) << "\n";
        return ok ? 0 : 2;
    } catch (const ToleranceError& e) {
        std::cerr << "tolerance failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace volinfo::cli
