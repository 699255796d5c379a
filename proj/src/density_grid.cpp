#include "volinfo/density_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "volinfo/artifact_io.hpp"
#include "volinfo/errors.hpp"

namespace volinfo {

Axis Axis::uniform(double lo, double hi, int n) {
    if (n < 2 || !(hi > lo)) throw DomainError("uniform axis needs n >= 2 and hi > lo");
    Axis a;
    a.spacing = Spacing::Uniform;
    a.nodes.resize(n);
    a.weights.resize(n);
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        a.nodes[i] = lo + i * h;
        a.weights[i] = h;
    }
    a.nodes.back() = hi;
    a.weights.front() *= 0.5;
    a.weights.back() *= 0.5;
    return a;
}

Axis Axis::geometric(double lo, double hi, int n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo))
        throw DomainError("geometric axis needs n >= 2 and 0 < lo < hi");
    Axis a;
    a.spacing = Spacing::Geometric;
    a.nodes.resize(n);
    a.weights.resize(n);
    const double y0 = std::log(lo);
    const double dy = (std::log(hi) - y0) / (n - 1);
    for (int i = 0; i < n; ++i) {
        a.nodes[i] = std::exp(y0 + i * dy);
        a.weights[i] = a.nodes[i] * dy;
    }
    a.nodes.front() = lo;
    a.nodes.back() = hi;
    a.weights.front() = lo * dy * 0.5;
    a.weights.back() = hi * dy * 0.5;
    return a;
}

Axis Axis::lattice(double origin, double step, int n) {
    if (n < 1 || !(step > 0.0)) throw DomainError("lattice axis needs n >= 1 and step > 0");
    Axis a;
    a.spacing = Spacing::Lattice;
    a.nodes.resize(n);
    a.weights.assign(n, step);
    for (int i = 0; i < n; ++i) a.nodes[i] = origin + i * step;
    return a;
}

double DensityGrid1D::integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < axis.size(); ++i) s += axis.weights[i] * values[i] * f(axis.nodes[i]);
    return s;
}

double DensityGrid1D::mean() const {
    return integrate([](double x) { return x; }) / mass;
}

double DensityGrid1D::central_moment(int order) const {
    const double m = mean();
    return integrate([&](double x) { return std::pow(x - m, order); }) / mass;
}

DensityGrid1D DensityGrid2D::marginal_x() const {
    DensityGrid1D out;
    out.axis = x_axis;
    out.values.assign(n_x(), 0.0);
    for (std::size_t i = 0; i < n_x(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_v(); ++j) s += v_axis.weights[j] * at(i, j);
        out.values[i] = s;
    }
    out.mass_tolerance = mass_tolerance;
    recompute_mass(out);
    return out;
}

DensityGrid1D DensityGrid2D::marginal_v() const {
    DensityGrid1D out;
    out.axis = v_axis;
    out.values.assign(n_v(), 0.0);
    for (std::size_t i = 0; i < n_x(); ++i)
        for (std::size_t j = 0; j < n_v(); ++j) out.values[j] += x_axis.weights[i] * at(i, j);
    out.mass_tolerance = mass_tolerance;
    recompute_mass(out);
    return out;
}

DensityGrid2D DensityGrid2D::transposed() const {
    DensityGrid2D out;
    out.x_axis = v_axis;
    out.v_axis = x_axis;
    out.values.resize(values.size());
    for (std::size_t i = 0; i < n_x(); ++i)
        for (std::size_t j = 0; j < n_v(); ++j) out.values[j * n_x() + i] = at(i, j);
    out.mass = mass;
    out.clipped_mass = clipped_mass;
    out.mass_tolerance = mass_tolerance;
    return out;
}

double DensityGrid2D::integrate(const std::function<double(double, double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_x(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n_v(); ++j)
            row += v_axis.weights[j] * at(i, j) * f(x_axis.nodes[i], v_axis.nodes[j]);
        s += x_axis.weights[i] * row;
    }
    return s;
}

double clip_negative(std::vector<double>& values, const std::vector<double>& weights) {
    double removed = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0.0) {
            removed -= weights[i] * values[i];
            values[i] = 0.0;
        }
    }
    return removed;
}

double clip_negative(DensityGrid1D& grid) {
    double removed = clip_negative(grid.values, grid.axis.weights);
    grid.clipped_mass += removed;
    recompute_mass(grid);
    return removed;
}

double clip_negative(DensityGrid2D& grid) {
    double removed = 0.0;
    for (std::size_t i = 0; i < grid.n_x(); ++i) {
        for (std::size_t j = 0; j < grid.n_v(); ++j) {
            double& f = grid.at(i, j);
            if (f < 0.0) {
                removed -= grid.x_axis.weights[i] * grid.v_axis.weights[j] * f;
                f = 0.0;
            }
        }
    }
    grid.clipped_mass += removed;
    recompute_mass(grid);
    return removed;
}

void recompute_mass(DensityGrid1D& grid) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.axis.size(); ++i) s += grid.axis.weights[i] * grid.values[i];
    grid.mass = s;
}

void recompute_mass(DensityGrid2D& grid) {
    grid.mass = grid.integrate([](double, double) { return 1.0; });
}

void normalise(DensityGrid1D& grid) {
    if (!(grid.mass > 0.0)) throw MassDefect("cannot normalise a density with zero mass");
    for (double& f : grid.values) f /= grid.mass;
    grid.mass = 1.0;
}

void normalise(DensityGrid2D& grid) {
    if (!(grid.mass > 0.0)) throw MassDefect("cannot normalise a density with zero mass");
    for (double& f : grid.values) f /= grid.mass;
    grid.mass = 1.0;
}

namespace {

// Index i with nodes[i] <= x < nodes[i+1] and the fractional position, or false
// when x is outside the axis.
bool locate(const std::vector<double>& nodes, double x, std::size_t& i, double& frac) {
    if (nodes.size() < 2 || x < nodes.front() || x > nodes.back()) return false;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - nodes.begin());
    if (hi >= nodes.size()) hi = nodes.size() - 1;
    i = hi - 1;
    frac = (x - nodes[i]) / (nodes[hi] - nodes[i]);
    return true;
}

}  // namespace

double interpolate(const DensityGrid2D& grid, double x, double v) {
    std::size_t i = 0, j = 0;
    double fx = 0.0, fv = 0.0;
    if (!locate(grid.x_axis.nodes, x, i, fx) || !locate(grid.v_axis.nodes, v, j, fv)) return 0.0;
    return (1 - fx) * (1 - fv) * grid.at(i, j) + fx * (1 - fv) * grid.at(i + 1, j) +
           (1 - fx) * fv * grid.at(i, j + 1) + fx * fv * grid.at(i + 1, j + 1);
}

double interpolate(const DensityGrid1D& grid, double x) {
    std::size_t i = 0;
    double fx = 0.0;
    if (!locate(grid.axis.nodes, x, i, fx)) return 0.0;
    return (1 - fx) * grid.values[i] + fx * grid.values[i + 1];
}

double l1_distance(const DensityGrid2D& f, const DensityGrid2D& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.n_x(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < f.n_v(); ++j)
            row += f.v_axis.weights[j] *
                   std::abs(f.at(i, j) - interpolate(g, f.x_axis.nodes[i], f.v_axis.nodes[j]));
        s += f.x_axis.weights[i] * row;
    }
    return s;
}

double l1_distance(const DensityGrid1D& f, const DensityGrid1D& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.axis.size(); ++i)
        s += f.axis.weights[i] * std::abs(f.values[i] - interpolate(g, f.axis.nodes[i]));
    return s;
}

double correlation(const DensityGrid2D& grid) {
    const double m = grid.mass;
    const double ex = grid.integrate([](double x, double) { return x; }) / m;
    const double ev = grid.integrate([](double, double v) { return v; }) / m;
    const double cxx = grid.integrate([&](double x, double) { return (x - ex) * (x - ex); }) / m;
    const double cvv = grid.integrate([&](double, double v) { return (v - ev) * (v - ev); }) / m;
    const double cxv = grid.integrate([&](double x, double v) { return (x - ex) * (v - ev); }) / m;
    return cxv / std::sqrt(cxx * cvv);
}

std::string to_csv(const DensityGrid1D& grid, const std::string& axis_name) {
    std::ostringstream os;
    os << axis_name << ",density\n";
    for (std::size_t i = 0; i < grid.axis.size(); ++i)
        os << format_double(grid.axis.nodes[i]) << ',' << format_double(grid.values[i]) << '\n';
    return os.str();
}

std::string to_csv(const DensityGrid2D& grid, const std::string& x_name,
                   const std::string& v_name) {
    std::ostringstream os;
    os << x_name << '\\' << v_name;
    for (double v : grid.v_axis.nodes) os << ',' << format_double(v);
    os << '\n';
    for (std::size_t i = 0; i < grid.n_x(); ++i) {
        os << format_double(grid.x_axis.nodes[i]);
        for (std::size_t j = 0; j < grid.n_v(); ++j) os << ',' << format_double(grid.at(i, j));
        os << '\n';
    }
    return os.str();
}

}  // namespace volinfo
