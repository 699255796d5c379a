#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "volinfo/artifact_io.hpp"
#include "volinfo/density_engine.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo {

struct SimSpec {
    enum class Truncation { Full };

    std::size_t n_paths = 100000;
    double dt = 1.0 / 2520.0;
    std::uint64_t seed = 0;
    Truncation truncation = Truncation::Full;

    void validate() const;
    Json to_json() const;
};

struct SampleSet {
    std::vector<double> times;
    std::vector<std::vector<double>> x; // x[time][path]
    std::vector<std::vector<double>> v;
    std::size_t n_paths = 0;
    double truncated_fraction = 0.0;
};

// Full-truncation Euler paths of (x, v); x is the adjusted log-return from 0.
SampleSet simulate(const HestonParams& params, std::span<const double> t_grid,
                   const InitialCondition& init, const SimSpec& spec);

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

// Plug-in histogram MI in bits on rank-equiprobable bins with Miller-Madow
// correction; jackknife standard error over contiguous blocks.
Estimate binned_mi(std::span<const double> a, std::span<const double> b, int bins_a, int bins_b,
                   int blocks = 20);

// Conditional MI I(a : b | c) with the same estimator.
Estimate binned_cmi(std::span<const double> a, std::span<const double> b,
                    std::span<const double> c, int bins, int blocks = 20);

// Rank-equiprobable bin index per sample (ties broken by sample order).
std::vector<std::uint32_t> equiprobable_bins(std::span<const double> a, int bins);

struct CfEstimate {
    Complex value;
    double standard_error = 0.0;
};

// Sample mean of exp(-i p_x x - p_v v).
CfEstimate empirical_transform(std::span<const double> x, std::span<const double> v, double p_x,
                               double p_v);

// L1 distance between sample cell frequencies and grid cell masses on a
// cells_x by cells_v partition whose edges are the grid's marginal quantiles
// snapped to node midpoints.
double binned_l1(std::span<const double> x, std::span<const double> v, const DensityGrid2D& grid,
                 int cells_x, int cells_v);

// Binary columnar dump: one JSON header line, then float64 columns x_t0..,
// v_t0.. in little-endian order.
void write_samples(const SampleSet& s, const std::filesystem::path& path, const Json& header);
SampleSet read_samples(const std::filesystem::path& path, Json* header = nullptr);
std::string samples_csv(const SampleSet& s);

}  // namespace volinfo
