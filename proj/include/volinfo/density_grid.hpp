#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace volinfo {

struct Axis {
    enum class Spacing { Uniform, Geometric, Lattice };

    Spacing spacing = Spacing::Uniform;
    std::vector<double> nodes;
    std::vector<double> weights;

    // Trapezoid weights on equally spaced nodes.
    static Axis uniform(double lo, double hi, int n);
    // Log-spaced nodes with the trapezoid rule in log coordinates (w_j = v_j dy).
    static Axis geometric(double lo, double hi, int n);
    // Cell centres origin + k*step with cell-width weights (midpoint rule).
    static Axis lattice(double origin, double step, int n);

    std::size_t size() const { return nodes.size(); }
    double front() const { return nodes.front(); }
    double back() const { return nodes.back(); }
    double step() const { return nodes.size() > 1 ? nodes[1] - nodes[0] : 0.0; }
};

struct DensityGrid1D {
    Axis axis;
    std::vector<double> values;
    double mass = 0.0;
    double clipped_mass = 0.0;
    double mass_tolerance = 0.01;

    double integrate(const std::function<double(double)>& f) const;
    double mean() const;
    double central_moment(int order) const;
};

struct DensityGrid2D {
    Axis x_axis;
    Axis v_axis;
    std::vector<double> values; // row-major, index i * n_v + j
    double mass = 0.0;
    double clipped_mass = 0.0;
    double mass_tolerance = 0.01;

    std::size_t n_x() const { return x_axis.size(); }
    std::size_t n_v() const { return v_axis.size(); }
    double& at(std::size_t i, std::size_t j) { return values[i * n_v() + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * n_v() + j]; }

    DensityGrid1D marginal_x() const;
    DensityGrid1D marginal_v() const;
    DensityGrid2D transposed() const;
    double integrate(const std::function<double(double, double)>& f) const;
};

// Sets negative entries to zero and returns the removed mass under the weights.
double clip_negative(std::vector<double>& values, const std::vector<double>& weights);
double clip_negative(DensityGrid2D& grid);
double clip_negative(DensityGrid1D& grid);

void recompute_mass(DensityGrid1D& grid);
void recompute_mass(DensityGrid2D& grid);

// Divides by the recorded mass.
void normalise(DensityGrid1D& grid);
void normalise(DensityGrid2D& grid);

// Bilinear interpolation; zero outside the grid.
double interpolate(const DensityGrid2D& grid, double x, double v);
double interpolate(const DensityGrid1D& grid, double x);

// Integral of |f - g| where g is interpolated onto f's nodes.
double l1_distance(const DensityGrid2D& f, const DensityGrid2D& g);
double l1_distance(const DensityGrid1D& f, const DensityGrid1D& g);

// Pearson correlation of (x, v) under the grid measure.
double correlation(const DensityGrid2D& grid);

std::string to_csv(const DensityGrid1D& grid, const std::string& axis_name);
std::string to_csv(const DensityGrid2D& grid, const std::string& x_name,
                   const std::string& v_name);

}  // namespace volinfo
