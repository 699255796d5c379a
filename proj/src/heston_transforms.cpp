#include "volinfo/heston_transforms.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "volinfo/errors.hpp"

namespace volinfo {

namespace {

constexpr double kDegenerate = 1e-14;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class F>
std::vector<Complex> sweep(std::span<const double> p_x, F&& terms_at, double alpha) {
    std::vector<Complex> out;
    out.reserve(p_x.size());
    BranchTracker ratio, prefactor;
    for (double p : p_x) {
        JointLogTerms terms = terms_at(p);
        terms.log_ratio = ratio(terms.log_ratio);
        terms.log_prefactor = prefactor(terms.log_prefactor);
        out.push_back(assemble(terms, alpha));
    }
    return out;
}

template <class F>
std::vector<Complex> return_sweep(std::span<const double> p_x, F&& terms_at, double alpha) {
    std::vector<Complex> out;
    out.reserve(p_x.size());
    BranchTracker tracker;
    for (double p : p_x) {
        ReturnLogTerms terms = terms_at(p);
        out.push_back(std::exp(terms.linear - alpha * tracker(terms.log_term)));
    }
    return out;
}

// log(cosh z + a sinh z) = z - ln 2 + log((1 + a) + (1 - a) e^{-2z}); returns
// the principal part and adds the rest to linear.
Complex log_cosh_sinh(Complex z, Complex a, double alpha, Complex& linear) {
    Complex e2 = std::exp(-2.0 * z);
    linear -= alpha * (z - std::numbers::ln2);
    return std::log((1.0 + a) + (1.0 - a) * e2);
}

}  // namespace

void HestonParams::validate() const {
    if (!(gamma > 0.0) || !(theta > 0.0) || !(kappa > 0.0))
        throw DomainError("gamma, theta and kappa must be positive");
    if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("rho must lie in [-1, 1]");
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    double a = feller_alpha();
    if (!std::isfinite(a) || a <= 0.0) throw DomainError("Feller shape is not finite");
}

std::string HestonParams::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "gamma=" << gamma << ",theta=" << theta << ",kappa=" << kappa << ",rho=" << rho
       << ",mu=" << mu;
    return os.str();
}

void CalendarConvention::validate() const {
    if (days_per_year < 1) throw DomainError("days_per_year must be >= 1");
}

double feller_alpha(const HestonParams& params) { return params.feller_alpha(); }

double stationary_pdf(double v, const HestonParams& params) {
    if (v < 0.0) throw DomainError("stationary_pdf: variance must be nonnegative");
    double a = params.feller_alpha();
    double rate = a / params.theta;
    if (v == 0.0) {
        if (a > 1.0) return 0.0;
        if (a == 1.0) return rate;
        return INFINITY;
    }
    return std::exp(a * std::log(rate) + (a - 1.0) * std::log(v) - rate * v - std::lgamma(a));
}

double stationary_cdf(double v, const HestonParams& params) {
    if (v <= 0.0) return 0.0;
    double a = params.feller_alpha();
    return boost::math::gamma_p(a, v * a / params.theta);
}

double stationary_quantile(double u, const HestonParams& params) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("stationary_quantile: u must lie in (0, 1)");
    double a = params.feller_alpha();
    return boost::math::gamma_p_inv(a, u) * params.theta / a;
}

FrequencyTerms gamma_omega_zeta(const TransformPoint& pt, double p_v_boundary,
                                const HestonParams& params) {
    const double k2 = params.kappa * params.kappa;
    const double p = pt.p_x;
    Complex g(params.gamma, params.rho * params.kappa * p);
    Complex om = std::sqrt(g * g + k2 * Complex(p * p, -p));
    Complex q = k2 * p_v_boundary + g - om;
    if (std::abs(q) < kDegenerate)
        throw BranchDegenerate("zeta pole: kappa^2 p_v + Gamma - Omega vanishes");
    return {g, om, 1.0 + 2.0 * om / q};
}

TransformSlice::TransformSlice(double p_x, double t, const HestonParams& params)
    : kappa2_(params.kappa * params.kappa),
      theta_(params.theta),
      alpha_(params.feller_alpha()),
      t_(t) {
    gamma_ = Complex(params.gamma, params.rho * params.kappa * p_x);
    omega_ = std::sqrt(gamma_ * gamma_ + kappa2_ * Complex(p_x * p_x, -p_x));
    exp_omega_t_ = std::exp(-omega_ * t);
    linear_ = alpha_ * (gamma_ - omega_) * t / 2.0;
}

// With q = kappa^2 p_v + Gamma - Omega the ratio (zeta - e^{-Omega t})/(zeta - 1)
// equals D/(2 Omega), D = 2 Omega + q (1 - e^{-Omega t}). This form has no pole
// at q = 0, which is where the transform must equal its normalisation.
TransformSlice::Riccati TransformSlice::riccati(Complex p_v) const {
    Complex q = kappa2_ * p_v + gamma_ - omega_;
    Complex d = 2.0 * omega_ + q * (1.0 - exp_omega_t_);
    if (std::abs(d) < kDegenerate) throw BranchDegenerate("Riccati denominator vanishes");
    Complex pv0 = (2.0 * omega_ * q * exp_omega_t_ / kappa2_) / d - (gamma_ - omega_) / kappa2_;
    return {std::log(d / (2.0 * omega_)), pv0};
}

JointLogTerms TransformSlice::given_v0(Complex p_v, double v0) const {
    Riccati r = riccati(p_v);
    return {linear_ - r.pv0 * v0, r.log_ratio, Complex(0.0)};
}

JointLogTerms TransformSlice::stationary(Complex p_v) const {
    Riccati r = riccati(p_v);
    Complex base = 1.0 + theta_ * r.pv0 / alpha_;
    if (std::abs(base) < kDegenerate) throw BranchDegenerate("stationary prefactor vanishes");
    return {linear_, r.log_ratio, std::log(base)};
}

Complex BranchTracker::operator()(Complex principal_log) {
    if (started_) {
        double jump = principal_log.imag() + kTwoPi * winding_ - prev_imag_;
        winding_ -= static_cast<int>(std::lround(jump / kTwoPi));
    }
    started_ = true;
    Complex out(principal_log.real(), principal_log.imag() + kTwoPi * winding_);
    prev_imag_ = out.imag();
    return out;
}

Complex assemble(const JointLogTerms& terms, double alpha) {
    return std::exp(terms.linear - alpha * (terms.log_ratio + terms.log_prefactor));
}

Complex laplace_joint_given_v0(const TransformPoint& pt, double v0, const HestonParams& params) {
    if (pt.t < 0.0) throw DomainError("transform horizon must be nonnegative");
    if (!(v0 > 0.0)) throw DomainError("v0 must be positive");
    TransformSlice slice(pt.p_x, pt.t, params);
    return assemble(slice.given_v0(pt.p_v, v0), params.feller_alpha());
}

Complex laplace_joint_stationary(const TransformPoint& pt, const HestonParams& params) {
    if (pt.t < 0.0) throw DomainError("transform horizon must be nonnegative");
    TransformSlice slice(pt.p_x, pt.t, params);
    return assemble(slice.stationary(pt.p_v), params.feller_alpha());
}

ReturnLogTerms cf_conditional_log_terms(double t, double p_x, double v0,
                                        const HestonParams& params) {
    if (!(t > 0.0)) throw DomainError("cf_conditional_returns: t must be positive");
    const double k2 = params.kappa * params.kappa;
    const double a = params.feller_alpha();
    Complex g(params.gamma, params.rho * params.kappa * p_x);
    Complex om = std::sqrt(g * g + k2 * Complex(p_x * p_x, -p_x));
    Complex z = om * t / 2.0;
    Complex e2 = std::exp(-2.0 * z);
    Complex coth = (1.0 + e2) / (1.0 - e2);
    Complex linear = -v0 * Complex(p_x * p_x, -p_x) / (g + om * coth) + a * g * t / 2.0;
    Complex log_term = log_cosh_sinh(z, g / om, a, linear);
    return {linear, log_term};
}

ReturnLogTerms cf_marginal_log_terms(double t, double p_x, const HestonParams& params) {
    if (!(t > 0.0)) throw DomainError("cf_marginal_returns: t must be positive");
    const double k2 = params.kappa * params.kappa;
    const double a = params.feller_alpha();
    Complex g(params.gamma, params.rho * params.kappa * p_x);
    Complex om = std::sqrt(g * g + k2 * Complex(p_x * p_x, -p_x));
    Complex coef = (om * om - g * g + 2.0 * params.gamma * g) / (2.0 * params.gamma * om);
    Complex linear = a * g * t / 2.0;
    Complex log_term = log_cosh_sinh(om * t / 2.0, coef, a, linear);
    return {linear, log_term};
}

Complex cf_conditional_returns(double t, double p_x, double v0, const HestonParams& params) {
    ReturnLogTerms lt = cf_conditional_log_terms(t, p_x, v0, params);
    return std::exp(lt.linear - params.feller_alpha() * lt.log_term);
}

Complex cf_marginal_returns(double t, double p_x, const HestonParams& params) {
    ReturnLogTerms lt = cf_marginal_log_terms(t, p_x, params);
    return std::exp(lt.linear - params.feller_alpha() * lt.log_term);
}

std::vector<Complex> laplace_joint_given_v0_sweep(std::span<const double> p_x, double p_v,
                                                  double t, double v0,
                                                  const HestonParams& params) {
    return sweep(
        p_x,
        [&](double p) { return TransformSlice(p, t, params).given_v0(p_v, v0); },
        params.feller_alpha());
}

std::vector<Complex> laplace_joint_stationary_sweep(std::span<const double> p_x, double p_v,
                                                    double t, const HestonParams& params) {
    return sweep(
        p_x, [&](double p) { return TransformSlice(p, t, params).stationary(p_v); },
        params.feller_alpha());
}

std::vector<Complex> cf_conditional_sweep(std::span<const double> p_x, double t, double v0,
                                          const HestonParams& params) {
    return return_sweep(
        p_x, [&](double p) { return cf_conditional_log_terms(t, p, v0, params); },
        params.feller_alpha());
}

std::vector<Complex> cf_marginal_sweep(std::span<const double> p_x, double t,
                                       const HestonParams& params) {
    return return_sweep(
        p_x, [&](double p) { return cf_marginal_log_terms(t, p, params); },
        params.feller_alpha());
}

}  // namespace volinfo
