#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace volinfo {

using Complex = std::complex<double>;

struct HestonParams {
    double gamma = 5.07;   // mean reversion (1/year)
    double theta = 0.0457; // long-run variance
    double kappa = 0.48;   // vol of variance
    double rho = -0.767;
    double mu = 0.0;

    // Throws DomainError when an invariant fails.
    void validate() const;
    double feller_alpha() const { return 2.0 * gamma * theta / (kappa * kappa); }
    bool feller_satisfied() const { return kappa * kappa <= 2.0 * gamma * theta; }
    std::string describe() const;
};

struct TransformPoint {
    double p_x = 0.0; // Fourier frequency for the adjusted log-return
    double p_v = 0.0; // Laplace frequency for the variance
    double t = 0.0;   // horizon in years
};

struct CalendarConvention {
    int days_per_year = 252;

    void validate() const;
    double years(double days) const { return days / days_per_year; }
    double days(double years) const { return years * days_per_year; }
};

struct FrequencyTerms {
    Complex gamma;
    Complex omega;
    Complex zeta;
};

double feller_alpha(const HestonParams& params);

// Gamma(shape alpha, rate alpha/theta) density of the stationary variance.
double stationary_pdf(double v, const HestonParams& params);
double stationary_cdf(double v, const HestonParams& params);
double stationary_quantile(double u, const HestonParams& params);

// Gamma, Omega and zeta for the boundary value p_v_boundary of the Riccati
// solution. pt.p_v and pt.t are not used.
FrequencyTerms gamma_omega_zeta(const TransformPoint& pt, double p_v_boundary,
                                const HestonParams& params);

// The joint transforms are E[exp(-i p_x x_t - p_v v_t)]. Their logarithm is
//   linear - alpha * (log_ratio + log_prefactor)
// where the two log terms are principal-branch values that a sweep in p_x
// must continue (see BranchTracker).
struct JointLogTerms {
    Complex linear;
    Complex log_ratio;
    Complex log_prefactor;
};

// Transform at one (p_x, t), evaluated for many p_v. Caches Gamma, Omega and
// exp(-Omega t).
class TransformSlice {
public:
    TransformSlice(double p_x, double t, const HestonParams& params);

    // p_v may be complex; the transform is analytic in p_v for Re p_v >= 0.
    JointLogTerms given_v0(Complex p_v, double v0) const;
    JointLogTerms stationary(Complex p_v) const;

    const Complex& gamma() const { return gamma_; }
    const Complex& omega() const { return omega_; }

private:
    struct Riccati {
        Complex log_ratio;
        Complex pv0;
    };
    Riccati riccati(Complex p_v) const;

    double kappa2_;
    double theta_;
    double alpha_;
    double t_;
    Complex gamma_;
    Complex omega_;
    Complex exp_omega_t_;
    Complex linear_;
};

// Keeps a principal-branch complex log continuous along a sweep by adding
// the multiple of 2*pi*i that minimises the jump from the previous value.
class BranchTracker {
public:
    Complex operator()(Complex principal_log);
    int winding() const { return winding_; }

private:
    bool started_ = false;
    double prev_imag_ = 0.0;
    int winding_ = 0;
};

Complex assemble(const JointLogTerms& terms, double alpha);

// Single-point evaluations on the principal branch.
Complex laplace_joint_given_v0(const TransformPoint& pt, double v0, const HestonParams& params);
Complex laplace_joint_stationary(const TransformPoint& pt, const HestonParams& params);
Complex cf_conditional_returns(double t, double p_x, double v0, const HestonParams& params);
Complex cf_marginal_returns(double t, double p_x, const HestonParams& params);

// Log of the return characteristic functions split as linear - alpha * log_term.
struct ReturnLogTerms {
    Complex linear;
    Complex log_term;
};
ReturnLogTerms cf_conditional_log_terms(double t, double p_x, double v0,
                                        const HestonParams& params);
ReturnLogTerms cf_marginal_log_terms(double t, double p_x, const HestonParams& params);

// Sweeps over an ascending p_x sequence starting at (or near) 0 with branch
// continuity applied to every log term.
std::vector<Complex> laplace_joint_given_v0_sweep(std::span<const double> p_x, double p_v,
                                                  double t, double v0,
                                                  const HestonParams& params);
std::vector<Complex> laplace_joint_stationary_sweep(std::span<const double> p_x, double p_v,
                                                    double t, const HestonParams& params);
std::vector<Complex> cf_conditional_sweep(std::span<const double> p_x, double t, double v0,
                                          const HestonParams& params);
std::vector<Complex> cf_marginal_sweep(std::span<const double> p_x, double t,
                                       const HestonParams& params);

}  // namespace volinfo
