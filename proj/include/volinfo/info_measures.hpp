#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "volinfo/artifact_io.hpp"
#include "volinfo/density_engine.hpp"

namespace volinfo {

// All quantities in bits.
double differential_entropy(const DensityGrid1D& g);
double differential_entropy(const DensityGrid2D& g);
double mutual_information(const DensityGrid2D& joint);

// Values in [-1e-3, 0) become 0 with a warning on stderr; more negative values
// are returned unchanged so callers can treat them as failures.
double report_nonnegative(double bits, const std::string& name);

struct CurvePoint {
    double t = 0.0; // years
    double bits = 0.0;
    double mass = 0.0;
    double clipped_mass = 0.0;
};

std::vector<CurvePoint> mi_curve(const HestonParams& params, std::span<const double> t_list,
                                 const GridPolicy& policy = {});

struct FlowQuery {
    int n = 0;
    double tau = 0.0; // years

    void validate() const;
};

struct FlowPolicy {
    GridPolicy grid;
    int conditional_nodes = 40; // Gauss-Laguerre nodes over v_0
};

struct FlowBreakdown {
    FlowQuery query;
    double flow = 0.0;     // I(x_{(n+1)tau} : v_{n tau} | x_{n tau})
    double stock_mi = 0.0; // I(x_{(n+1)tau} : x_{n tau})
    double h_cond = 0.0;   // h(x_tau | v_0)
    double h_pair = 0.0;
    double h_level = 0.0;
    double h_next = 0.0;
    double pair_mass = 1.0;
};

// h(x_tau | v_0) averaged over the stationary law on the increment lattice.
double conditional_increment_entropy(double tau, const HestonParams& params,
                                     const FlowPolicy& policy = {});

FlowBreakdown flow_breakdown(const FlowQuery& q, const HestonParams& params,
                             const FlowPolicy& policy = {});
double info_flow(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy = {});
double stock_mi(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy = {});
double flow_ratio(const FlowQuery& q, const HestonParams& params, const FlowPolicy& policy = {});
// Ratio from an existing breakdown; throws DegenerateRatio when stock_mi < 1e-4.
double flow_ratio(const FlowBreakdown& b);

struct MarkovCheckSpec {
    std::size_t n_paths = 200000;
    int bins = 12;
    std::uint64_t seed = 1;
    double dt = 1.0 / 2520.0;
    FlowPolicy flow;
};

struct MarkovReport {
    FlowQuery query;
    double bound = 0.0;    // information flow
    double estimate = 0.0; // binned I(x_{(n+1)tau} : x_{(n-1)tau} | x_{n tau})
    double standard_error = 0.0;
    bool holds = false;
};

MarkovReport markov_bound_check(const FlowQuery& q, const HestonParams& params,
                                const MarkovCheckSpec& spec = {});

struct InfoReport {
    std::vector<std::pair<std::string, double>> quantities;
    Json provenance;

    void add(const std::string& name, double bits) { quantities.emplace_back(name, bits); }
    double get(const std::string& name) const;
    Json to_json() const;
};

}  // namespace volinfo
