#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "volinfo/artifact_io.hpp"
#include "volinfo/heston_transforms.hpp"

namespace volinfo {

enum class KernelKind { Bias, OU, SqExp, RatQuad };

std::string_view kernel_kind_name(KernelKind kind);

// One covariance primitive. Times are in years.
//   Bias:    variance
//   OU:      variance * exp(-rate |t - t'|)                            (scale = rate)
//   SqExp:   variance * exp(-(t - t')^2 / (2 l^2))                      (scale = l)
//   RatQuad: variance * (1 + (t - t')^2 / (2 mixing l^2))^(-mixing)     (scale = l)
struct KernelTerm {
    KernelKind kind = KernelKind::Bias;
    double variance = 1.0;
    double scale = 1.0;
    double mixing = 1.0;

    int n_hyper() const;
    double operator()(double tau) const;
};

struct KernelSpec {
    std::string name;
    std::vector<KernelTerm> terms;

    void validate() const;
    int n_hyper() const;
    bool has_bias() const;
    KernelSpec without_bias() const;
    double operator()(double tau) const;

    // Log-hyperparameters in term order: log variance, then log scale and log mixing where present.
    Eigen::VectorXd log_hyper() const;
    KernelSpec with_log_hyper(const Eigen::VectorXd& h) const;
    std::vector<std::string> hyper_names() const;
    Json to_json(const CalendarConvention& cal = {}) const;
};

// Parses "Bias+OU+SqExp" style compositions with unit default hyperparameters.
KernelSpec parse_kernel(std::string_view composition, std::string name = "");

// The named templates: OU, RBF, RatQuad, RBF_RBF, OU_OU (each with a Bias term).
KernelSpec make_template(std::string_view name);
std::vector<std::string> template_names();

struct ReturnsSeries {
    std::vector<double> days;    // trading-day indices, strictly increasing
    std::vector<double> returns; // simple daily returns
    CalendarConvention calendar;

    void validate() const;
    std::size_t size() const { return returns.size(); }
    std::vector<double> years() const;
};

// Sum of primitive Grams; symmetric.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const std::vector<double>& times);

// Derivatives of the Gram with respect to each log-hyperparameter, same order as log_hyper().
std::vector<Eigen::MatrixXd> kernel_gradients(const KernelSpec& spec, const std::vector<double>& times);

struct JitteredGram {
    Eigen::MatrixXd K; // Gram plus jitter on the diagonal
    double jitter = 0.0;
    Eigen::LLT<Eigen::MatrixXd> llt;
};

// Adds 1e-8 trace/n to the diagonal, escalating x10 up to twice; NotPSD if all fail.
JitteredGram jittered_gram(const KernelSpec& spec, const std::vector<double>& times);

struct LogLikTerms {
    double value = 0.0;      // log N(r; 0, e^y) in nats
    double derivative = 0.0; // d value / dy
    double curvature = 0.0;  // -d^2 value / dy^2 (>= 0)
    double third = 0.0;      // d^3 value / dy^3
};

LogLikTerms log_lik_terms(double r, double y);

struct LaplaceOptions {
    double gradient_tol = 1e-8;
    double floor_tol = 1e-5; // accepted gradient once Newton steps stop changing Psi
    int max_iterations = 100;
};

struct LaplaceFit {
    KernelSpec kernel;
    ReturnsSeries series;
    Eigen::MatrixXd K;      // jittered prior Gram
    double jitter = 0.0;
    Eigen::VectorXd y_mode; // posterior mode of log-variance
    Eigen::VectorXd a;      // K^{-1} y_mode
    Eigen::VectorXd dlik;   // gradient of log p(r | y) at the mode
    Eigen::VectorXd W;      // likelihood curvature at the mode
    Eigen::MatrixXd L;      // lower Cholesky factor of B = I + W^1/2 K W^1/2
    double log_lik = 0.0;   // log p(r | y_mode)
    double log_marginal = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;

    // Posterior covariance (K^{-1} + W)^{-1}.
    Eigen::MatrixXd posterior_covariance() const;
    Eigen::VectorXd posterior_variance() const;
};

// Newton iteration for the mode of log p(r | y) + log N(y; 0, K). An optional
// starting point speeds up nearby refits; the mode itself is unique.
LaplaceFit laplace_fit(const KernelSpec& kernel, const ReturnsSeries& series, const LaplaceOptions& opt = {},
                       const Eigen::VectorXd* start = nullptr);

// Stable evidence log p(r | y) - a'y/2 - log det L (nats).
double log_marginal_likelihood(const LaplaceFit& fit);

// Gradient of the evidence with respect to the log-hyperparameters, including the
// implicit dependence of the mode on the hyperparameters.
Eigen::VectorXd log_marginal_gradient(const LaplaceFit& fit);

// Central finite differences of the evidence in log-hyperparameters.
Eigen::VectorXd log_marginal_gradient_fd(const KernelSpec& kernel, const ReturnsSeries& series,
                                         double rel_step = 1e-4);

struct HyperRanges {
    double variance_lo = 0.01, variance_hi = 10.0;     // initial draws for fluctuating terms
    double bias_lo = 1.0, bias_hi = 1000.0;            // Bias carries the level of log-variance
    double length_lo_days = 1.0, length_hi_days = 500.0;
    double mixing_lo = 0.1, mixing_hi = 10.0;
    double log_bound = 12.0; // optimisation box: each log-hyperparameter within +-log_bound of 0 (years)
};

enum class GradientMode { Analytic, FiniteDifference };

struct OptimizeOptions {
    int restarts = 100;
    std::uint64_t seed = 0;
    int max_iterations = 200;
    double gradient_tol = 1e-3; // sup-norm of the evidence gradient in log-hyperparameters
    GradientMode gradient = GradientMode::Analytic;
    double fd_step = 1e-4;
    HyperRanges ranges;
};

struct RestartLog {
    int index = 0;
    Eigen::VectorXd initial;
    Eigen::VectorXd final_hyper;
    double initial_evidence = 0.0;
    double evidence = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string status;
};

struct OptimizeResult {
    KernelSpec kernel;
    LaplaceFit fit;
    std::vector<RestartLog> restarts;
    int best_restart = -1;
    Json to_json() const;
};

// Restart 0 starts at the template's own values; the rest draw log-uniformly from the ranges.
OptimizeResult optimize_hyperparams(const KernelSpec& tmpl, const ReturnsSeries& series,
                                    const OptimizeOptions& opt = {});

struct Prediction {
    std::vector<double> days;
    std::vector<double> mean;     // of y
    std::vector<double> variance; // of y
    std::vector<double> sigma_lo; // exp((m - 2 s) / 2)
    std::vector<double> sigma_hi; // exp((m + 2 s) / 2)
};

Prediction predict(const LaplaceFit& fit, const std::vector<double>& future_days);

// Posterior band at the observed days.
Prediction posterior_band(const LaplaceFit& fit);

// Entropy reduction (bits) about y on the chosen observation indices, with the
// Bias term removed from the prior and the curvature W kept from the fit.
double information_gain(const LaplaceFit& fit, const std::vector<std::size_t>& subset);

struct InfoGainCurve {
    std::size_t target = 0;
    std::vector<int> windows;
    std::vector<double> gain; // bits
    Json to_json() const;
};

// Gain about y at the target index from the w returns preceding it.
InfoGainCurve info_gain_curve(const LaplaceFit& fit, std::size_t target, const std::vector<int>& windows);

struct ModelScore {
    std::string name;
    double evidence = 0.0;
    int n_hyper = 0;
    int rank = 0;
    OptimizeResult result;
};

// Sorted by evidence, ties broken by fewer hyperparameters.
std::vector<ModelScore> compare_models(const ReturnsSeries& series, const std::vector<KernelSpec>& templates,
                                       const OptimizeOptions& opt = {});

// Model templates and ranges from a key = value file:
//   restarts = 100
//   variance_range = 0.01, 10
//   bias_range = 1, 1000
//   lengthscale_days = 1, 500
//   mixing_range = 0.1, 10
//   log_bound = 12
//   template.NAME = Bias+OU+SqExp
// Lines starting with # are comments.
struct GpConfig {
    int restarts = 100;
    HyperRanges ranges;
    std::vector<KernelSpec> templates;
};

GpConfig parse_gp_config(std::string_view text);
GpConfig load_gp_config(const std::filesystem::path& path);

struct SyntheticSeries {
    ReturnsSeries series;
    std::vector<double> y; // true log-variance path
};

// y ~ mean_y + GP(0, truth) on days 0..n-1, r_t ~ N(0, e^{y_t}).
SyntheticSeries synthetic_returns(const KernelSpec& truth, double mean_y, std::size_t n, std::uint64_t seed,
                                  const CalendarConvention& cal = {});

}  // namespace volinfo
