#include "volinfo/mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "volinfo/errors.hpp"
#include "volinfo/parallel.hpp"
#include "volinfo/philox.hpp"
#include "volinfo/version.hpp"

namespace volinfo {

namespace {

constexpr std::uint64_t kInitStep = ~std::uint64_t{0};
constexpr std::size_t kChunk = 4096;

double entropy_counts(const std::vector<std::uint64_t>& counts, double n, std::size_t& occupied) {
    double h = 0.0;
    occupied = 0;
    for (std::uint64_t c : counts) {
        if (c == 0) continue;
        ++occupied;
        double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

// Entropies (nats) with Miller-Madow correction of the histograms listed in
// cells, combined with the given signs.
struct HistogramSet {
    std::vector<std::vector<std::uint32_t>> cell; // per histogram, per sample
    std::vector<std::size_t> sizes;
    std::vector<double> signs;
};

double corrected_combination(const HistogramSet& hs, const std::vector<std::vector<std::uint64_t>>& counts,
                             double n) {
    double total = 0.0;
    for (std::size_t h = 0; h < counts.size(); ++h) {
        std::size_t occupied = 0;
        double ent = entropy_counts(counts[h], n, occupied);
        ent += (static_cast<double>(occupied) - 1.0) / (2.0 * n);
        total += hs.signs[h] * ent;
    }
    return total / std::numbers::ln2;
}

Estimate jackknife(const HistogramSet& hs, std::size_t n, int blocks) {
    std::vector<std::vector<std::uint64_t>> full(hs.cell.size());
    for (std::size_t h = 0; h < hs.cell.size(); ++h) {
        full[h].assign(hs.sizes[h], 0);
        for (std::size_t i = 0; i < n; ++i) ++full[h][hs.cell[h][i]];
    }
    Estimate est;
    est.value = corrected_combination(hs, full, static_cast<double>(n));
    if (blocks < 2) return est;

    std::vector<double> leave_out(blocks);
    for (int b = 0; b < blocks; ++b) {
        std::size_t lo = n * b / blocks, hi = n * (b + 1) / blocks;
        auto counts = full;
        for (std::size_t h = 0; h < hs.cell.size(); ++h)
            for (std::size_t i = lo; i < hi; ++i) --counts[h][hs.cell[h][i]];
        leave_out[b] = corrected_combination(hs, counts, static_cast<double>(n - (hi - lo)));
    }
    double mean = std::accumulate(leave_out.begin(), leave_out.end(), 0.0) / blocks;
    double ss = 0.0;
    for (double x : leave_out) ss += (x - mean) * (x - mean);
    est.standard_error = std::sqrt((blocks - 1.0) / blocks * ss);
    return est;
}

void check_samples(std::size_t n, std::size_t cells) {
    if (n < 100) throw TooFewSamples("binned estimators need at least 100 samples");
    if (n < 10 * cells)
        std::clog << "warning: " << n << " samples for " << cells
                  << " histogram cells; estimate may be biased\n";
}

}  // namespace

void SimSpec::validate() const {
    if (n_paths < 1) throw DomainError("simulation needs at least one path");
    if (!(dt > 0.0)) throw DomainError("simulation step must be positive");
}

Json SimSpec::to_json() const {
    Json j;
    j["n_paths"] = n_paths;
    j["dt"] = dt;
    j["seed"] = seed;
    j["truncation"] = "full";
    return j;
}

SampleSet simulate(const HestonParams& params, std::span<const double> t_grid,
                   const InitialCondition& init, const SimSpec& spec) {
    params.validate();
    spec.validate();
    if (t_grid.empty()) throw DomainError("simulate: empty time grid");
    std::vector<std::uint64_t> stop(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw DomainError("simulate: time grid must be positive and ascending");
        stop[i] = static_cast<std::uint64_t>(std::llround(t_grid[i] / spec.dt));
        if (stop[i] == 0) stop[i] = 1;
    }

    SampleSet out;
    out.times.assign(t_grid.begin(), t_grid.end());
    out.n_paths = spec.n_paths;
    out.x.assign(t_grid.size(), std::vector<double>(spec.n_paths));
    out.v.assign(t_grid.size(), std::vector<double>(spec.n_paths));

    const Philox4x32 rng(spec.seed);
    const double dt = spec.dt;
    const double sdt = std::sqrt(dt);
    const double g = params.gamma, th = params.theta, k = params.kappa, r = params.rho;
    const double rc = std::sqrt(std::max(0.0, 1.0 - r * r));
    const bool stationary = init.kind == InitialCondition::Kind::Stationary;

    const std::size_t n_chunks = (spec.n_paths + kChunk - 1) / kChunk;
    std::vector<std::uint64_t> truncated(n_chunks, 0);
    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * kChunk, hi = std::min(spec.n_paths, lo + kChunk);
        std::uint64_t trunc = 0;
        for (std::size_t path = lo; path < hi; ++path) {
            double v = init.v0;
            if (stationary) {
                auto b = rng(path, kInitStep);
                v = stationary_quantile(Philox4x32::to_unit(b[0], b[1]), params);
            }
            double x = 0.0;
            std::uint64_t step = 0;
            for (std::size_t ti = 0; ti < stop.size(); ++ti) {
                for (; step < stop[ti]; ++step) {
                    const auto z = normal_pair(rng(path, step));
                    if (v < 0.0) ++trunc;
                    double vp = v > 0.0 ? v : 0.0;
                    double sq = std::sqrt(vp) * sdt;
                    x += -0.5 * vp * dt + sq * z[0];
                    v += -g * (vp - th) * dt + k * sq * (r * z[0] + rc * z[1]);
                }
                out.x[ti][path] = x;
                out.v[ti][path] = v;
            }
        }
        truncated[c] = trunc;
    });
    std::uint64_t total = std::accumulate(truncated.begin(), truncated.end(), std::uint64_t{0});
    out.truncated_fraction =
        static_cast<double>(total) / (static_cast<double>(stop.back()) * spec.n_paths);
    return out;
}

std::vector<std::uint32_t> equiprobable_bins(std::span<const double> a, int bins) {
    if (bins < 1) throw DomainError("bin count must be positive");
    const std::size_t n = a.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
    std::vector<std::uint32_t> bin(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        bin[order[rank]] = static_cast<std::uint32_t>(rank * static_cast<std::size_t>(bins) / n);
    return bin;
}

Estimate binned_mi(std::span<const double> a, std::span<const double> b, int bins_a, int bins_b,
                   int blocks) {
    if (a.size() != b.size()) throw DomainError("binned_mi: sample sizes differ");
    const std::size_t n = a.size();
    check_samples(n, static_cast<std::size_t>(bins_a) * bins_b);
    auto ba = equiprobable_bins(a, bins_a);
    auto bb = equiprobable_bins(b, bins_b);
    HistogramSet hs;
    std::vector<std::uint32_t> bab(n);
    for (std::size_t i = 0; i < n; ++i) bab[i] = ba[i] * bins_b + bb[i];
    hs.cell = {std::move(ba), std::move(bb), std::move(bab)};
    hs.sizes = {static_cast<std::size_t>(bins_a), static_cast<std::size_t>(bins_b),
                static_cast<std::size_t>(bins_a) * bins_b};
    hs.signs = {1.0, 1.0, -1.0};
    return jackknife(hs, n, blocks);
}

Estimate binned_cmi(std::span<const double> a, std::span<const double> b,
                    std::span<const double> c, int bins, int blocks) {
    if (a.size() != b.size() || a.size() != c.size())
        throw DomainError("binned_cmi: sample sizes differ");
    const std::size_t n = a.size();
    const std::size_t nb = static_cast<std::size_t>(bins);
    check_samples(n, nb * nb * nb);
    auto ba = equiprobable_bins(a, bins);
    auto bb = equiprobable_bins(b, bins);
    auto bc = equiprobable_bins(c, bins);
    std::vector<std::uint32_t> ac(n), bcc(n), abc(n);
    for (std::size_t i = 0; i < n; ++i) {
        ac[i] = static_cast<std::uint32_t>(ba[i] * nb + bc[i]);
        bcc[i] = static_cast<std::uint32_t>(bb[i] * nb + bc[i]);
        abc[i] = static_cast<std::uint32_t>((ba[i] * nb + bb[i]) * nb + bc[i]);
    }
    HistogramSet hs;
    hs.cell = {std::move(ac), std::move(bcc), std::move(abc), std::move(bc)};
    hs.sizes = {nb * nb, nb * nb, nb * nb * nb, nb};
    hs.signs = {1.0, 1.0, -1.0, -1.0};
    return jackknife(hs, n, blocks);
}

CfEstimate empirical_transform(std::span<const double> x, std::span<const double> v, double p_x,
                               double p_v) {
    const std::size_t n = x.size();
    if (n < 2 || v.size() != n) throw DomainError("empirical_transform: need matching samples");
    Complex sum(0.0);
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Complex z = std::exp(Complex(-p_v * v[i], -p_x * x[i]));
        sum += z;
        s2 += std::norm(z);
    }
    Complex mean = sum / static_cast<double>(n);
    const double dn = static_cast<double>(n);
    double var = (s2 / dn - std::norm(mean)) * dn / (dn - 1.0);
    return {mean, std::sqrt(std::max(var, 0.0) / dn)};
}

namespace {

// Cell edges as node-midpoint cuts closest to the equiprobable quantiles of the
// nodal masses. Returns, per node, its cell index.
std::vector<int> node_cells(const std::vector<double>& mass, int cells, std::vector<double>& cuts,
                            const std::vector<double>& nodes) {
    const std::size_t n = mass.size();
    double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::vector<int> cell(n, 0);
    cuts.clear();
    double acc = 0.0;
    int current = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cell[i] = current;
        acc += mass[i];
        if (current + 1 < cells && acc >= total * (current + 1) / cells && i + 1 < n) {
            cuts.push_back(0.5 * (nodes[i] + nodes[i + 1]));
            ++current;
        }
    }
    return cell;
}

int find_cell(const std::vector<double>& cuts, double x) {
    return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
}

}  // namespace

double binned_l1(std::span<const double> x, std::span<const double> v, const DensityGrid2D& grid,
                 int cells_x, int cells_v) {
    DensityGrid1D px = grid.marginal_x(), pv = grid.marginal_v();
    std::vector<double> mx(px.values.size()), mv(pv.values.size());
    for (std::size_t i = 0; i < mx.size(); ++i) mx[i] = px.values[i] * px.axis.weights[i];
    for (std::size_t j = 0; j < mv.size(); ++j) mv[j] = pv.values[j] * pv.axis.weights[j];
    std::vector<double> cx, cv;
    auto cell_x = node_cells(mx, cells_x, cx, grid.x_axis.nodes);
    auto cell_v = node_cells(mv, cells_v, cv, grid.v_axis.nodes);
    const int ncx = static_cast<int>(cx.size()) + 1, ncv = static_cast<int>(cv.size()) + 1;

    std::vector<double> grid_mass(static_cast<std::size_t>(ncx * ncv), 0.0);
    for (std::size_t i = 0; i < grid.n_x(); ++i)
        for (std::size_t j = 0; j < grid.n_v(); ++j)
            grid_mass[cell_x[i] * ncv + cell_v[j]] +=
                grid.x_axis.weights[i] * grid.v_axis.weights[j] * grid.at(i, j);
    for (double& m : grid_mass) m /= grid.mass;

    std::vector<double> freq(grid_mass.size(), 0.0);
    for (std::size_t s = 0; s < x.size(); ++s)
        freq[find_cell(cx, x[s]) * ncv + find_cell(cv, v[s])] += 1.0;
    double l1 = 0.0;
    for (std::size_t c = 0; c < freq.size(); ++c)
        l1 += std::abs(freq[c] / static_cast<double>(x.size()) - grid_mass[c]);
    return l1;
}

void write_samples(const SampleSet& s, const std::filesystem::path& path, const Json& header) {
    Json h = header;
    h["format"] = "volinfo-samples";
    h["version"] = kVersion;
    h["n_paths"] = s.n_paths;
    h["times"] = s.times;
    h["truncated_fraction"] = s.truncated_fraction;
    Json cols = Json::array();
    for (std::size_t t = 0; t < s.times.size(); ++t) cols.push_back("x_" + std::to_string(t));
    for (std::size_t t = 0; t < s.times.size(); ++t) cols.push_back("v_" + std::to_string(t));
    h["columns"] = cols;
    h["dtype"] = "float64-le";

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    std::string line = h.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    auto put = [&](const std::vector<double>& col) {
        out.write(reinterpret_cast<const char*>(col.data()),
                  static_cast<std::streamsize>(col.size() * sizeof(double)));
    };
    for (const auto& col : s.x) put(col);
    for (const auto& col : s.v) put(col);
    if (!out) throw InputError("write failed for " + path.string());
}

SampleSet read_samples(const std::filesystem::path& path, Json* header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    Json h;
    try {
        h = Json::parse(line);
    } catch (const std::exception& e) {
        throw ParseError("sample header is not JSON: " + std::string(e.what()));
    }
    if (h.value("format", "") != "volinfo-samples") throw ParseError("not a sample dump");
    SampleSet s;
    s.n_paths = h.at("n_paths").get<std::size_t>();
    s.times = h.at("times").get<std::vector<double>>();
    s.truncated_fraction = h.value("truncated_fraction", 0.0);
    auto get = [&](std::vector<double>& col) {
        col.resize(s.n_paths);
        in.read(reinterpret_cast<char*>(col.data()),
                static_cast<std::streamsize>(s.n_paths * sizeof(double)));
        if (!in) throw ParseError("sample dump truncated");
    };
    s.x.resize(s.times.size());
    s.v.resize(s.times.size());
    for (auto& col : s.x) get(col);
    for (auto& col : s.v) get(col);
    if (header) *header = h;
    return s;
}

std::string samples_csv(const SampleSet& s) {
    std::ostringstream os;
    os << "path";
    for (std::size_t t = 0; t < s.times.size(); ++t) os << ",x_" << t << ",v_" << t;
    os << '\n';
    for (std::size_t p = 0; p < s.n_paths; ++p) {
        os << p;
        for (std::size_t t = 0; t < s.times.size(); ++t)
            os << ',' << format_double(s.x[t][p]) << ',' << format_double(s.v[t][p]);
        os << '\n';
    }
    return os.str();
}

}  // namespace volinfo
