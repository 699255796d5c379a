#include "volinfo/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "volinfo/errors.hpp"
#include "volinfo/parallel.hpp"

namespace volinfo {

namespace {

constexpr std::size_t kLineChunk = 16;

// Bernoulli function z / (e^z - 1).
double bernoulli(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

void for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    const std::size_t chunks = (n + kLineChunk - 1) / kLineChunk;
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t lo = c * kLineChunk;
        body(lo, std::min(n, lo + kLineChunk));
    });
}

}  // namespace

void PdeSpec::validate() const {
    if (!(x_min < 0.0 && 0.0 < x_max)) throw DomainError("pde grid must satisfy x_min < 0 < x_max");
    if (!(v_max > 0.0)) throw DomainError("pde grid v_max must be positive");
    if (n_x < 16 || n_v < 16) throw DomainError("pde grid counts must be >= 16");
    if (!(dt > 0.0)) throw DomainError("pde time step must be positive");
    if (!(theta >= 1.0 / 3.0 - 1e-12 && theta <= 1.0)) throw DomainError("pde theta must lie in [1/3, 1]");
    if (damping_steps < 0) throw DomainError("pde damping steps must be >= 0");
    if (!(init_smoothing >= 0.0)) throw DomainError("pde init smoothing must be >= 0");
}

PdeSpec default_pde_spec(double t, const HestonParams& params) {
    if (!(t > 0.0)) throw DomainError("default_pde_spec: t must be positive");
    Axis x = default_x_axis(t, params);
    PdeSpec s;
    s.x_min = x.front();
    s.x_max = x.back();
    s.v_max = default_v_max(params);
    return s;
}

FokkerPlanckSolver::FokkerPlanckSolver(const HestonParams& params, const PdeSpec& spec,
                                       const InitialCondition& init)
    : params_(params), spec_(spec) {
    params_.validate();
    spec_.validate();
    if (!params_.feller_satisfied())
        std::clog << "warning: Feller condition violated; the v = 0 boundary is attainable\n";
    const int nx = spec_.n_x, nv = spec_.n_v;
    hx_ = (spec_.x_max - spec_.x_min) / (nx - 1);
    hv_ = spec_.v_max / (nv - 1);
    x_.resize(nx);
    v_.resize(nv);
    for (int i = 0; i < nx; ++i) x_[i] = spec_.x_min + i * hx_;
    for (int j = 0; j < nv; ++j) v_[j] = j * hv_;

    // x flux J = -(v/2)(p + p_x): exponentially fitted with drift increment -hx.
    const double bp = bernoulli(hx_), bm = bernoulli(-hx_);
    const double cx = 1.0 / (2.0 * hx_ * hx_);
    ax_lo_ = cx * bp;
    ax_up_ = cx * bm;
    ax_di_ = -cx * (bp + bm);

    // v flux J = -D (p' - b p), D = kappa^2 v / 2, b = (alpha - 1)/v - beta, whose
    // zero-flux solution is the stationary Gamma law.
    const double alpha = params_.feller_alpha();
    const double beta = 2.0 * params_.gamma / (params_.kappa * params_.kappa);
    const double k2 = params_.kappa * params_.kappa;
    std::vector<double> face_lo(nv - 1), face_hi(nv - 1); // coefficients of p_j and p_{j+1}
    for (int j = 0; j + 1 < nv; ++j) {
        const double vl = std::max(v_[j], 1e-6 * hv_), vr = v_[j + 1];
        const double phi = (alpha - 1.0) * std::log(vr / vl) - beta * hv_;
        const double d = 0.5 * k2 * 0.5 * (v_[j] + v_[j + 1]) / hv_;
        face_lo[j] = d * bernoulli(-phi);
        face_hi[j] = d * bernoulli(phi);
    }
    av_lo_.assign(nv, 0.0);
    av_di_.assign(nv, 0.0);
    av_up_.assign(nv, 0.0);
    for (int j = 1; j + 1 < nv; ++j) {
        av_lo_[j] = face_lo[j - 1] / hv_;
        av_up_[j] = face_hi[j] / hv_;
        av_di_[j] = -(face_lo[j] + face_hi[j - 1]) / hv_;
    }

    // Mollified initial condition.
    u_.assign(static_cast<std::size_t>(nx) * nv, 0.0);
    const double sx = spec_.init_smoothing * hx_;
    std::vector<double> fx(nx, 0.0), fv(nv, 0.0);
    int i0 = static_cast<int>(std::lround(-spec_.x_min / hx_));
    for (int i = 1; i + 1 < nx; ++i) {
        if (sx > 0.0) {
            double z = x_[i] / sx;
            fx[i] = std::exp(-0.5 * z * z);
        } else {
            fx[i] = i == i0 ? 1.0 : 0.0;
        }
    }
    if (init.kind == InitialCondition::Kind::Stationary) {
        for (int j = 1; j + 1 < nv; ++j) fv[j] = stationary_pdf(v_[j], params_);
    } else {
        if (!(init.v0 > 0.0 && init.v0 < spec_.v_max)) throw DomainError("pde: v0 must lie inside (0, v_max)");
        const double sv = spec_.init_smoothing * hv_;
        int j0 = static_cast<int>(std::lround(init.v0 / hv_));
        for (int j = 1; j + 1 < nv; ++j) {
            if (sv > 0.0) {
                double z = (v_[j] - init.v0) / sv;
                fv[j] = std::exp(-0.5 * z * z);
            } else {
                fv[j] = j == j0 ? 1.0 : 0.0;
            }
        }
    }
    double mx = 0.0, mv = 0.0;
    for (double f : fx) mx += f * hx_;
    for (double f : fv) mv += f * hv_;
    if (!(mx > 0.0) || !(mv > 0.0)) throw DomainError("pde: initial condition has no mass on the grid");
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nv; ++j) u_[static_cast<std::size_t>(i) * nv + j] = fx[i] * fv[j] / (mx * mv);
}

double FokkerPlanckSolver::mass() const {
    double s = 0.0;
    for (double f : u_) s += f;
    return s * hx_ * hv_; // boundary nodes are zero, so trapezoid equals the plain sum
}

double FokkerPlanckSolver::negative_mass() const {
    double s = 0.0;
    for (double f : u_) s += std::min(f, 0.0);
    return -s * hx_ * hv_;
}

void FokkerPlanckSolver::apply_a0(const std::vector<double>& in, std::vector<double>& out) const {
    const std::size_t nx = x_.size(), nv = v_.size();
    const double c = params_.rho * params_.kappa / (4.0 * hx_ * hv_);
    out.assign(in.size(), 0.0);
    for_chunks(nx - 2, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo + 1; i < hi + 1; ++i) {
            const double* up = &in[(i + 1) * nv];
            const double* dn = &in[(i - 1) * nv];
            double* o = &out[i * nv];
            for (std::size_t j = 1; j + 1 < nv; ++j)
                o[j] = c * (v_[j + 1] * (up[j + 1] - dn[j + 1]) - v_[j - 1] * (up[j - 1] - dn[j - 1]));
        }
    });
}

void FokkerPlanckSolver::apply_a1(const std::vector<double>& in, std::vector<double>& out) const {
    const std::size_t nx = x_.size(), nv = v_.size();
    out.assign(in.size(), 0.0);
    for_chunks(nx - 2, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo + 1; i < hi + 1; ++i) {
            const double* up = &in[(i + 1) * nv];
            const double* mid = &in[i * nv];
            const double* dn = &in[(i - 1) * nv];
            double* o = &out[i * nv];
            for (std::size_t j = 1; j + 1 < nv; ++j)
                o[j] = v_[j] * (ax_lo_ * dn[j] + ax_di_ * mid[j] + ax_up_ * up[j]);
        }
    });
}

void FokkerPlanckSolver::apply_a2(const std::vector<double>& in, std::vector<double>& out) const {
    const std::size_t nx = x_.size(), nv = v_.size();
    out.assign(in.size(), 0.0);
    for_chunks(nx - 2, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo + 1; i < hi + 1; ++i) {
            const double* r = &in[i * nv];
            double* o = &out[i * nv];
            for (std::size_t j = 1; j + 1 < nv; ++j)
                o[j] = av_lo_[j] * r[j - 1] + av_di_[j] * r[j] + av_up_[j] * r[j + 1];
        }
    });
}

void FokkerPlanckSolver::solve_a1(double c, std::vector<double>& rhs) const {
    // Thomas sweep along x, vectorised across v columns; boundary rows stay zero.
    const std::size_t nx = x_.size(), nv = v_.size();
    for_chunks(nv - 2, [&](std::size_t lo, std::size_t hi) {
        const std::size_t j0 = lo + 1, j1 = hi + 1, w = j1 - j0;
        std::vector<double> cp(nx * w, 0.0);
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            double* r = &rhs[i * nv + j0];
            const double* rp = &rhs[(i - 1) * nv + j0];
            double* c_i = &cp[i * w];
            const double* c_p = &cp[(i - 1) * w];
            for (std::size_t k = 0; k < w; ++k) {
                const double vj = v_[j0 + k];
                const double a = -c * vj * ax_lo_, b = 1.0 - c * vj * ax_di_, u = -c * vj * ax_up_;
                const double lower = i > 1 ? a : 0.0;
                const double den = b - lower * c_p[k];
                c_i[k] = u / den;
                r[k] = (r[k] - lower * (i > 1 ? rp[k] : 0.0)) / den;
            }
        }
        for (std::size_t i = nx - 3; i >= 1; --i) {
            double* r = &rhs[i * nv + j0];
            const double* rn = &rhs[(i + 1) * nv + j0];
            const double* c_i = &cp[i * w];
            for (std::size_t k = 0; k < w; ++k) r[k] -= c_i[k] * rn[k];
        }
    });
}

void FokkerPlanckSolver::solve_a2(double c, std::vector<double>& rhs) const {
    const std::size_t nx = x_.size(), nv = v_.size();
    for_chunks(nx - 2, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> cp(nv, 0.0);
        for (std::size_t i = lo + 1; i < hi + 1; ++i) {
            double* r = &rhs[i * nv];
            for (std::size_t j = 1; j + 1 < nv; ++j) {
                const double a = j > 1 ? -c * av_lo_[j] : 0.0;
                const double b = 1.0 - c * av_di_[j];
                const double u = -c * av_up_[j];
                const double den = b - a * cp[j - 1];
                cp[j] = u / den;
                r[j] = (r[j] - a * r[j - 1]) / den;
            }
            r[nv - 1] = 0.0;
            for (std::size_t j = nv - 3; j >= 1; --j) r[j] -= cp[j] * r[j + 1];
            r[0] = 0.0;
        }
    });
}

void FokkerPlanckSolver::douglas_step(double dt, double theta) {
    std::vector<double> a0, a1, a2;
    apply_a0(u_, a0);
    apply_a1(u_, a1);
    apply_a2(u_, a2);
    std::vector<double> y(u_.size());
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = u_[k] + dt * (a0[k] + a1[k] + a2[k]) - theta * dt * a1[k];
    solve_a1(theta * dt, y);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] -= theta * dt * a2[k];
    solve_a2(theta * dt, y);
    u_.swap(y);
}

void FokkerPlanckSolver::mcs_step(double dt) {
    const double th = spec_.theta;
    std::vector<double> a0, a1, a2;
    apply_a0(u_, a0);
    apply_a1(u_, a1);
    apply_a2(u_, a2);
    const std::size_t n = u_.size();
    std::vector<double> y0(n), y(n);
    for (std::size_t k = 0; k < n; ++k) y0[k] = u_[k] + dt * (a0[k] + a1[k] + a2[k]);
    for (std::size_t k = 0; k < n; ++k) y[k] = y0[k] - th * dt * a1[k];
    solve_a1(th * dt, y);
    for (std::size_t k = 0; k < n; ++k) y[k] -= th * dt * a2[k];
    solve_a2(th * dt, y);

    std::vector<double> b0, b1, b2;
    apply_a0(y, b0);
    apply_a1(y, b1);
    apply_a2(y, b2);
    std::vector<double> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double yhat = y0[k] + th * dt * (b0[k] - a0[k]);
        const double ytil = yhat + (0.5 - th) * dt * ((b0[k] + b1[k] + b2[k]) - (a0[k] + a1[k] + a2[k]));
        z[k] = ytil - th * dt * a1[k];
    }
    solve_a1(th * dt, z);
    for (std::size_t k = 0; k < n; ++k) z[k] -= th * dt * a2[k];
    solve_a2(th * dt, z);
    u_.swap(z);
}

void FokkerPlanckSolver::advance(double t_end) {
    if (!(t_end > t_)) throw DomainError("pde: t_end must exceed the current time");
    const double span = t_end - t_;
    const int n = std::max(8, static_cast<int>(std::ceil(2.0 * span / spec_.dt)));
    double prev_mass = mass();
    double t_prev = t_;
    for (int k = 1; k <= n; ++k) {
        const double s = static_cast<double>(k) / n;
        const double t_next = k == n ? t_end : t_ + span * s * s;
        const double h = t_next - t_prev;
        if (steps_ < spec_.damping_steps) {
            douglas_step(0.5 * h, 1.0);
            douglas_step(0.5 * h, 1.0);
        } else {
            mcs_step(h);
        }
        ++steps_;
        const double m = mass();
        max_dmass_ = std::max(max_dmass_, std::abs(m - prev_mass));
        prev_mass = m;
        t_prev = t_next;
        if (std::abs(m - 1.0) > 0.05) throw Unstable("pde: mass defect " + std::to_string(m - 1.0) + " exceeds 5%");
        if (negative_mass() > 1e-2) throw Unstable("pde: negative mass exceeds 1e-2");
    }
    t_ = t_end;
}

PdeResult FokkerPlanckSolver::result() const {
    PdeResult r;
    r.raw_mass = mass();
    r.negative_mass = negative_mass();
    r.max_step_mass_change = max_dmass_;
    r.steps = steps_;
    const double max_diff =
        std::max(0.5 * spec_.v_max, 0.5 * params_.kappa * params_.kappa * spec_.v_max);
    r.explicit_cfl = spec_.dt * max_diff / std::min(hx_ * hx_, hv_ * hv_);

    DensityGrid2D& g = r.density;
    g.x_axis = Axis::uniform(spec_.x_min, spec_.x_max, spec_.n_x);
    g.v_axis = Axis::uniform(0.0, spec_.v_max, spec_.n_v);
    g.values = u_;
    g.clipped_mass = clip_negative(g);
    recompute_mass(g);
    normalise(g);
    return r;
}

PdeResult solve_fokker_planck(double t_end, const HestonParams& params, const PdeSpec& spec,
                              const InitialCondition& init) {
    if (!(t_end > 0.0)) throw DomainError("solve_fokker_planck: t_end must be positive");
    FokkerPlanckSolver s(params, spec, init);
    s.advance(t_end);
    return s.result();
}

double tilted_asymmetry(const DensityGrid2D& g) {
    const std::size_t nx = g.n_x();
    if (std::abs(g.x_axis.front() + g.x_axis.back()) > 1e-9 * (g.x_axis.back() - g.x_axis.front()))
        throw DomainError("tilted_asymmetry needs an x grid symmetric about 0");
    double diff = 0.0, total = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double x = g.x_axis.nodes[i];
        const std::size_t m = nx - 1 - i;
        for (std::size_t j = 0; j < g.n_v(); ++j) {
            const double w = g.x_axis.weights[i] * g.v_axis.weights[j];
            const double a = g.at(i, j) * std::exp(0.5 * x), b = g.at(m, j) * std::exp(-0.5 * x);
            diff += w * std::abs(a - b);
            total += w * a;
        }
    }
    return diff / total;
}

}  // namespace volinfo
