#include "volinfo/gp_stochvol.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "volinfo/errors.hpp"
#include "volinfo/parallel.hpp"
#include "volinfo/philox.hpp"

namespace volinfo {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

KernelKind parse_kind(std::string_view s) {
    if (s == "Bias") return KernelKind::Bias;
    if (s == "OU") return KernelKind::OU;
    if (s == "SqExp" || s == "RBF") return KernelKind::SqExp;
    if (s == "RatQuad") return KernelKind::RatQuad;
    throw InputError("unknown kernel primitive '" + std::string(s) + "'");
}

// Gram of one term on the given times.
Eigen::MatrixXd term_gram(const KernelTerm& term, const std::vector<double>& t) {
    const Eigen::Index n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = term(0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = term(t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)]);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// Elementwise map of the pairwise lag through f, symmetric.
template <class F>
Eigen::MatrixXd lag_map(const std::vector<double>& t, F f) {
    const Eigen::Index n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = f(0.0);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = f(t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(j)]);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NotPSD(std::string(what) + ": matrix is not positive definite");
    return llt;
}

double psi_value(const Eigen::VectorXd& r, const Eigen::VectorXd& y, const Eigen::VectorXd& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += log_lik_terms(r[i], y[i]).value;
    return s - 0.5 * a.dot(y);
}

void silence_gsl() {
    static std::once_flag once;
    std::call_once(once, [] { gsl_set_error_handler_off(); });
}

}  // namespace

std::string_view kernel_kind_name(KernelKind kind) {
    switch (kind) {
    case KernelKind::Bias: return "Bias";
    case KernelKind::OU: return "OU";
    case KernelKind::SqExp: return "SqExp";
    case KernelKind::RatQuad: return "RatQuad";
    }
    return "?";
}

int KernelTerm::n_hyper() const {
    switch (kind) {
    case KernelKind::Bias: return 1;
    case KernelKind::OU:
    case KernelKind::SqExp: return 2;
    case KernelKind::RatQuad: return 3;
    }
    return 0;
}

double KernelTerm::operator()(double tau) const {
    switch (kind) {
    case KernelKind::Bias: return variance;
    case KernelKind::OU: return variance * std::exp(-scale * std::abs(tau));
    case KernelKind::SqExp: return variance * std::exp(-tau * tau / (2.0 * scale * scale));
    case KernelKind::RatQuad:
        return variance * std::pow(1.0 + tau * tau / (2.0 * mixing * scale * scale), -mixing);
    }
    return 0.0;
}

void KernelSpec::validate() const {
    if (terms.empty()) throw DomainError("kernel needs at least one term");
    for (const KernelTerm& t : terms) {
        if (!(t.variance > 0.0) || !std::isfinite(t.variance)) throw DomainError("kernel variance must be positive");
        if (t.kind != KernelKind::Bias && (!(t.scale > 0.0) || !std::isfinite(t.scale)))
            throw DomainError("kernel scale must be positive");
        if (t.kind == KernelKind::RatQuad && (!(t.mixing > 0.0) || !std::isfinite(t.mixing)))
            throw DomainError("RatQuad mixing must be positive");
    }
}

int KernelSpec::n_hyper() const {
    int n = 0;
    for (const KernelTerm& t : terms) n += t.n_hyper();
    return n;
}

bool KernelSpec::has_bias() const {
    return std::any_of(terms.begin(), terms.end(), [](const KernelTerm& t) { return t.kind == KernelKind::Bias; });
}

KernelSpec KernelSpec::without_bias() const {
    KernelSpec k;
    k.name = name;
    for (const KernelTerm& t : terms)
        if (t.kind != KernelKind::Bias) k.terms.push_back(t);
    if (k.terms.empty()) throw DomainError("kernel has no component besides Bias");
    return k;
}

double KernelSpec::operator()(double tau) const {
    double s = 0.0;
    for (const KernelTerm& t : terms) s += t(tau);
    return s;
}

Eigen::VectorXd KernelSpec::log_hyper() const {
    Eigen::VectorXd h(n_hyper());
    Eigen::Index k = 0;
    for (const KernelTerm& t : terms) {
        h[k++] = std::log(t.variance);
        if (t.kind != KernelKind::Bias) h[k++] = std::log(t.scale);
        if (t.kind == KernelKind::RatQuad) h[k++] = std::log(t.mixing);
    }
    return h;
}

KernelSpec KernelSpec::with_log_hyper(const Eigen::VectorXd& h) const {
    if (h.size() != n_hyper()) throw DomainError("hyperparameter vector has the wrong length");
    KernelSpec out = *this;
    Eigen::Index k = 0;
    for (KernelTerm& t : out.terms) {
        t.variance = std::exp(h[k++]);
        if (t.kind != KernelKind::Bias) t.scale = std::exp(h[k++]);
        if (t.kind == KernelKind::RatQuad) t.mixing = std::exp(h[k++]);
    }
    return out;
}

std::vector<std::string> KernelSpec::hyper_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const KernelTerm& t = terms[i];
        const std::string p = std::string(kernel_kind_name(t.kind)) + "[" + std::to_string(i) + "].";
        out.push_back(p + "variance");
        if (t.kind == KernelKind::OU) out.push_back(p + "rate");
        if (t.kind == KernelKind::SqExp || t.kind == KernelKind::RatQuad) out.push_back(p + "lengthscale");
        if (t.kind == KernelKind::RatQuad) out.push_back(p + "mixing");
    }
    return out;
}

Json KernelSpec::to_json(const CalendarConvention& cal) const {
    Json j;
    j["name"] = name;
    Json arr = Json::array();
    for (const KernelTerm& t : terms) {
        Json e;
        e["kind"] = kernel_kind_name(t.kind);
        e["variance"] = t.variance;
        if (t.kind == KernelKind::OU) {
            e["rate_per_year"] = t.scale;
            e["correlation_days"] = cal.days(1.0 / t.scale);
        }
        if (t.kind == KernelKind::SqExp || t.kind == KernelKind::RatQuad) e["lengthscale_days"] = cal.days(t.scale);
        if (t.kind == KernelKind::RatQuad) e["mixing"] = t.mixing;
        arr.push_back(e);
    }
    j["terms"] = arr;
    return j;
}

KernelSpec parse_kernel(std::string_view composition, std::string name) {
    KernelSpec k;
    k.name = name.empty() ? std::string(composition) : std::move(name);
    std::size_t pos = 0;
    while (pos <= composition.size()) {
        const std::size_t plus = composition.find('+', pos);
        const std::string tok = trim(composition.substr(pos, plus == std::string_view::npos ? std::string_view::npos
                                                                                           : plus - pos));
        if (tok.empty()) throw InputError("empty term in kernel composition '" + std::string(composition) + "'");
        KernelTerm t;
        t.kind = parse_kind(tok);
        k.terms.push_back(t);
        if (plus == std::string_view::npos) break;
        pos = plus + 1;
    }
    return k;
}

// Defaults: Bias at the level scale of daily log-variance, a 20-day fast factor and a 250-day slow factor.
KernelSpec make_template(std::string_view name) {
    const CalendarConvention cal;
    KernelTerm bias{KernelKind::Bias, 100.0, 1.0, 1.0};
    KernelTerm ou_fast{KernelKind::OU, 1.0, 1.0 / cal.years(20.0), 1.0};
    KernelTerm ou_slow{KernelKind::OU, 1.0, 1.0 / cal.years(250.0), 1.0};
    KernelTerm se_fast{KernelKind::SqExp, 1.0, cal.years(20.0), 1.0};
    KernelTerm se_slow{KernelKind::SqExp, 1.0, cal.years(250.0), 1.0};
    KernelTerm rq{KernelKind::RatQuad, 1.0, cal.years(20.0), 1.0};
    KernelSpec k;
    k.name = std::string(name);
    if (name == "OU") k.terms = {bias, ou_fast};
    else if (name == "RBF") k.terms = {bias, se_fast};
    else if (name == "RatQuad") k.terms = {bias, rq};
    else if (name == "RBF_RBF") k.terms = {bias, se_fast, se_slow};
    else if (name == "OU_OU") k.terms = {bias, ou_fast, ou_slow};
    else throw InputError("unknown template '" + std::string(name) + "'");
    return k;
}

std::vector<std::string> template_names() { return {"OU", "RBF", "RatQuad", "RBF_RBF", "OU_OU"}; }

void ReturnsSeries::validate() const {
    calendar.validate();
    if (returns.empty()) throw EmptySeries("returns series is empty");
    if (days.size() != returns.size()) throw DomainError("returns series: days and returns differ in length");
    for (std::size_t i = 0; i < returns.size(); ++i) {
        if (!std::isfinite(returns[i]) || !std::isfinite(days[i])) throw DomainError("returns series: non-finite value");
        if (i > 0 && !(days[i] > days[i - 1])) throw DomainError("returns series: days must be strictly increasing");
    }
}

std::vector<double> ReturnsSeries::years() const {
    std::vector<double> t(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) t[i] = calendar.years(days[i]);
    return t;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const std::vector<double>& times) {
    spec.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
    for (const KernelTerm& t : spec.terms) k += term_gram(t, times);
    return k;
}

std::vector<Eigen::MatrixXd> kernel_gradients(const KernelSpec& spec, const std::vector<double>& times) {
    spec.validate();
    const Eigen::MatrixXd lag = lag_map(times, [](double tau) { return std::abs(tau); });
    std::vector<Eigen::MatrixXd> g;
    for (const KernelTerm& t : spec.terms) {
        Eigen::MatrixXd gram = term_gram(t, times);
        if (t.kind == KernelKind::OU) g.push_back(-t.scale * lag.cwiseProduct(gram));
        if (t.kind == KernelKind::SqExp) g.push_back(lag.array().square().matrix().cwiseProduct(gram) / (t.scale * t.scale));
        if (t.kind == KernelKind::RatQuad) {
            const double m = t.mixing;
            const Eigen::ArrayXXd u = lag.array().square() / (2.0 * m * t.scale * t.scale);
            g.push_back((gram.array() * 2.0 * m * u / (1.0 + u)).matrix());
            g.push_back((gram.array() * m * (u / (1.0 + u) - u.log1p())).matrix());
        }
        g.insert(g.end() - (t.n_hyper() - 1), std::move(gram));
    }
    return g;
}

JitteredGram jittered_gram(const KernelSpec& spec, const std::vector<double>& times) {
    JitteredGram out;
    Eigen::MatrixXd k = kernel_matrix(spec, times);
    const double n = static_cast<double>(std::max<std::size_t>(times.size(), 1));
    double jitter = 1e-8 * k.trace() / n;
    for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
        out.K = k;
        out.K.diagonal().array() += jitter;
        out.llt.compute(out.K);
        if (out.llt.info() == Eigen::Success) {
            out.jitter = jitter;
            return out;
        }
    }
    throw NotPSD("kernel_matrix: Gram not positive definite after jitter escalation");
}

LogLikTerms log_lik_terms(double r, double y) {
    const double q = 0.5 * r * r * std::exp(-y);
    LogLikTerms t;
    t.value = -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * y - q;
    t.derivative = -0.5 + q;
    t.curvature = q;
    t.third = q;
    return t;
}

Eigen::MatrixXd LaplaceFit::posterior_covariance() const {
    const Eigen::VectorXd sw = W.array().sqrt();
    Eigen::MatrixXd c = sw.asDiagonal() * K;
    L.triangularView<Eigen::Lower>().solveInPlace(c);
    return K - c.transpose() * c;
}

Eigen::VectorXd LaplaceFit::posterior_variance() const {
    const Eigen::VectorXd sw = W.array().sqrt();
    Eigen::MatrixXd c = sw.asDiagonal() * K;
    L.triangularView<Eigen::Lower>().solveInPlace(c);
    return K.diagonal() - c.colwise().squaredNorm().transpose();
}

LaplaceFit laplace_fit(const KernelSpec& kernel, const ReturnsSeries& series, const LaplaceOptions& opt,
                       const Eigen::VectorXd* start) {
    series.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(series.size());
    JitteredGram g = jittered_gram(kernel, series.years());
    const Eigen::Map<const Eigen::VectorXd> r(series.returns.data(), n);

    LaplaceFit fit;
    fit.kernel = kernel;
    fit.series = series;
    fit.jitter = g.jitter;
    fit.K = std::move(g.K);
    const Eigen::MatrixXd& K = fit.K;

    Eigen::VectorXd y = Eigen::VectorXd::Zero(n), a = Eigen::VectorXd::Zero(n);
    if (start != nullptr && start->size() == n && start->allFinite()) {
        a = g.llt.solve(*start);
        y = K * a;
    }
    double psi = psi_value(r, y, a);

    Eigen::VectorXd d1(n), w(n);
    auto eval_terms = [&](const Eigen::VectorXd& yy) {
        for (Eigen::Index i = 0; i < n; ++i) {
            LogLikTerms t = log_lik_terms(r[i], yy[i]);
            d1[i] = t.derivative;
            w[i] = t.curvature;
        }
    };
    eval_terms(y);
    double gnorm = (d1 - a).lpNorm<Eigen::Infinity>();
    int it = 0;
    Eigen::MatrixXd B(n, n);
    while (gnorm >= opt.gradient_tol) {
        if (it >= opt.max_iterations)
            throw NoConvergence("laplace_fit: no convergence after " + std::to_string(opt.max_iterations) +
                                " iterations, gradient norm " + std::to_string(gnorm));
        ++it;
        const Eigen::VectorXd sw = w.array().sqrt();
        B.noalias() = sw.asDiagonal() * K * sw.asDiagonal();
        B.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(B, "laplace_fit");
        const Eigen::VectorXd b = w.cwiseProduct(y) + d1;
        Eigen::VectorXd c = sw.cwiseProduct(K * b);
        llt.matrixL().solveInPlace(c);
        llt.matrixU().solveInPlace(c);
        const Eigen::VectorXd a_new = b - sw.cwiseProduct(c);
        const Eigen::VectorXd da = a_new - a;

        // Backtracking on the step in a; Psi is concave so a full step usually succeeds.
        double step = 1.0, psi_new = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd a_try, y_try;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            a_try = a + step * da;
            y_try = K * a_try;
            psi_new = psi_value(r, y_try, a_try);
            if (std::isfinite(psi_new) && psi_new >= psi - 1e-12 * (1.0 + std::abs(psi))) break;
        }
        if (!std::isfinite(psi_new))
            throw NoConvergence("laplace_fit: line search failed, gradient norm " + std::to_string(gnorm));
        const double gain = psi_new - psi;
        a = std::move(a_try);
        y = std::move(y_try);
        psi = psi_new;
        eval_terms(y);
        gnorm = (d1 - a).lpNorm<Eigen::Infinity>();
        // Ill-conditioned Grams put a rounding floor under the gradient; a step that
        // no longer moves Psi at machine precision ends the iteration there.
        if (gain <= 1e-14 * std::abs(psi) && gnorm < opt.floor_tol) break;
    }

    const Eigen::VectorXd sw = w.array().sqrt();
    B.noalias() = sw.asDiagonal() * K * sw.asDiagonal();
    B.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(B, "laplace_fit");
    fit.L = llt.matrixL();
    fit.y_mode = y;
    fit.a = a;
    fit.dlik = d1;
    fit.W = w;
    fit.log_lik = psi + 0.5 * a.dot(y);
    fit.gradient_norm = gnorm;
    fit.iterations = it;
    fit.log_marginal = log_marginal_likelihood(fit);
    return fit;
}

double log_marginal_likelihood(const LaplaceFit& fit) {
    return fit.log_lik - 0.5 * fit.a.dot(fit.y_mode) - fit.L.diagonal().array().log().sum();
}

Eigen::VectorXd log_marginal_gradient(const LaplaceFit& fit) {
    const Eigen::Index n = fit.K.rows();
    const Eigen::VectorXd sw = fit.W.array().sqrt();
    const auto lower = fit.L.triangularView<Eigen::Lower>();

    // R = W^1/2 B^{-1} W^1/2 = M'M with the lower-triangular M = L^{-1} W^1/2.
    Eigen::MatrixXd m = sw.asDiagonal() * Eigen::MatrixXd::Identity(n, n);
    lower.solveInPlace(m);
    auto mt = m.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd R = mt.transpose() * m;
    const Eigen::MatrixXd c = mt * fit.K; // L^{-1} W^1/2 K
    const Eigen::VectorXd post_var = fit.K.diagonal() - c.colwise().squaredNorm().transpose();
    Eigen::VectorXd third(n);
    for (Eigen::Index i = 0; i < n; ++i) third[i] = log_lik_terms(fit.series.returns[static_cast<std::size_t>(i)],
                                                                  fit.y_mode[i]).third;
    // d evidence / d y_mode = -1/2 d log det B / dy = +1/2 diag(Sigma) * third derivative.
    const Eigen::VectorXd s2 = 0.5 * post_var.cwiseProduct(third);

    std::vector<Eigen::MatrixXd> dk = kernel_gradients(fit.kernel, fit.series.years());
    Eigen::VectorXd grad(static_cast<Eigen::Index>(dk.size()));
    for (std::size_t j = 0; j < dk.size(); ++j) {
        const Eigen::MatrixXd& cj = dk[j];
        const double s1 = 0.5 * fit.a.dot(cj * fit.a) - 0.5 * R.cwiseProduct(cj).sum();
        const Eigen::VectorXd b = cj * fit.dlik;
        const Eigen::VectorXd s3 = b - fit.K * (R * b);
        grad[static_cast<Eigen::Index>(j)] = s1 + s2.dot(s3);
    }
    return grad;
}

Eigen::VectorXd log_marginal_gradient_fd(const KernelSpec& kernel, const ReturnsSeries& series, double rel_step) {
    const Eigen::VectorXd h = kernel.log_hyper();
    Eigen::VectorXd g(h.size());
    const LaplaceFit centre = laplace_fit(kernel, series);
    for (Eigen::Index j = 0; j < h.size(); ++j) {
        const double step = rel_step * std::max(1.0, std::abs(h[j]));
        Eigen::VectorXd hp = h, hm = h;
        hp[j] += step;
        hm[j] -= step;
        const double fp = laplace_fit(kernel.with_log_hyper(hp), series, {}, &centre.y_mode).log_marginal;
        const double fm = laplace_fit(kernel.with_log_hyper(hm), series, {}, &centre.y_mode).log_marginal;
        g[j] = (fp - fm) / (2.0 * step);
    }
    return g;
}

namespace {

// Negative evidence in log-hyperparameters with a quadratic wall outside the box.
struct Objective {
    const KernelSpec* tmpl = nullptr;
    const ReturnsSeries* series = nullptr;
    const OptimizeOptions* opt = nullptr;
    Eigen::VectorXd warm;
    double best_f = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_h;
    std::string last_error;
    int evaluations = 0;
    static constexpr double kWall = 1e3;

    // The line search often asks for the gradient at a point whose value it just took.
    Eigen::VectorXd last_h;
    LaplaceFit last_fit;

    bool eval(const Eigen::VectorXd& h, double& f, Eigen::VectorXd* grad) {
        const double bound = opt->ranges.log_bound;
        Eigen::VectorXd hc = h.cwiseMax(-bound).cwiseMin(bound);
        const double excess = (h - hc).squaredNorm();
        try {
            const KernelSpec k = tmpl->with_log_hyper(hc);
            if (last_h.size() != hc.size() || last_h != hc) {
                ++evaluations;
                last_fit = laplace_fit(k, *series, {}, warm.size() ? &warm : nullptr);
                last_h = hc;
                warm = last_fit.y_mode;
            }
            f = -last_fit.log_marginal + 0.5 * kWall * excess;
            if (grad != nullptr) {
                Eigen::VectorXd g = opt->gradient == GradientMode::Analytic
                                        ? log_marginal_gradient(last_fit)
                                        : log_marginal_gradient_fd(k, *series, opt->fd_step);
                for (Eigen::Index j = 0; j < h.size(); ++j)
                    (*grad)[j] = (h[j] != hc[j] ? 0.0 : -g[j]) + kWall * (h[j] - hc[j]);
            }
            if (f < best_f && excess == 0.0) {
                best_f = f;
                best_h = hc;
            }
            return std::isfinite(f);
        } catch (const Error& e) {
            last_h.resize(0);
            last_error = e.what();
            return false;
        }
    }
};

Eigen::VectorXd from_gsl(const gsl_vector* v) {
    Eigen::VectorXd h(static_cast<Eigen::Index>(v->size));
    for (std::size_t i = 0; i < v->size; ++i) h[static_cast<Eigen::Index>(i)] = gsl_vector_get(v, i);
    return h;
}

double gsl_f(const gsl_vector* x, void* p) {
    double f = 0.0;
    if (!static_cast<Objective*>(p)->eval(from_gsl(x), f, nullptr)) return GSL_NAN;
    return f;
}

void gsl_fdf(const gsl_vector* x, void* p, double* f, gsl_vector* g) {
    Eigen::VectorXd grad(static_cast<Eigen::Index>(x->size));
    if (!static_cast<Objective*>(p)->eval(from_gsl(x), *f, &grad)) {
        *f = GSL_NAN;
        gsl_vector_set_all(g, GSL_NAN);
        return;
    }
    for (std::size_t i = 0; i < x->size; ++i) gsl_vector_set(g, i, grad[static_cast<Eigen::Index>(i)]);
}

void gsl_df(const gsl_vector* x, void* p, gsl_vector* g) {
    double f = 0.0;
    gsl_fdf(x, p, &f, g);
}

Eigen::VectorXd draw_start(const KernelSpec& tmpl, const HyperRanges& ranges, std::uint64_t seed, int restart,
                           const CalendarConvention& cal) {
    const Philox4x32 rng(seed);
    std::uint64_t counter = 0;
    auto uniform = [&](double lo, double hi) {
        const auto b = rng(static_cast<std::uint64_t>(restart), counter++);
        const double u = Philox4x32::to_unit(b[0], b[1]);
        return std::log(lo) + u * (std::log(hi) - std::log(lo));
    };
    Eigen::VectorXd h(tmpl.n_hyper());
    Eigen::Index k = 0;
    for (const KernelTerm& t : tmpl.terms) {
        if (t.kind == KernelKind::Bias) {
            h[k++] = uniform(ranges.bias_lo, ranges.bias_hi);
            continue;
        }
        h[k++] = uniform(ranges.variance_lo, ranges.variance_hi);
        const double log_len = uniform(cal.years(ranges.length_lo_days), cal.years(ranges.length_hi_days));
        h[k++] = t.kind == KernelKind::OU ? -log_len : log_len;
        if (t.kind == KernelKind::RatQuad) h[k++] = uniform(ranges.mixing_lo, ranges.mixing_hi);
    }
    return h;
}

RestartLog run_restart(const KernelSpec& tmpl, const ReturnsSeries& series, const OptimizeOptions& opt,
                       const Eigen::VectorXd& h0, int index) {
    RestartLog log;
    log.index = index;
    log.initial = h0;
    Objective obj;
    obj.tmpl = &tmpl;
    obj.series = &series;
    obj.opt = &opt;
    double f0 = 0.0;
    if (!obj.eval(h0, f0, nullptr)) {
        log.status = "initial point failed: " + obj.last_error;
        log.initial_evidence = std::numeric_limits<double>::quiet_NaN();
        log.evidence = log.initial_evidence;
        return log;
    }
    log.initial_evidence = -f0;

    const std::size_t d = static_cast<std::size_t>(h0.size());
    gsl_multimin_function_fdf fn{&gsl_f, &gsl_df, &gsl_fdf, d, &obj};
    gsl_vector* x = gsl_vector_alloc(d);
    for (std::size_t i = 0; i < d; ++i) gsl_vector_set(x, i, h0[static_cast<Eigen::Index>(i)]);
    gsl_multimin_fdfminimizer* s = gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, d);
    int status = gsl_multimin_fdfminimizer_set(s, &fn, x, 0.1, 0.1);
    log.status = "max iterations";
    if (status != GSL_SUCCESS || !std::isfinite(s->f)) {
        log.status = "initial gradient failed: " + obj.last_error;
    } else {
        for (int it = 1; it <= opt.max_iterations; ++it) {
            status = gsl_multimin_fdfminimizer_iterate(s);
            log.iterations = it;
            double gmax = 0.0;
            for (std::size_t i = 0; i < d; ++i) gmax = std::max(gmax, std::abs(gsl_vector_get(s->gradient, i)));
            if (gmax < opt.gradient_tol) {
                log.converged = true;
                log.status = "converged";
                break;
            }
            if (status != GSL_SUCCESS) {
                log.status = status == GSL_ENOPROG ? "no progress" : gsl_strerror(status);
                // A stalled line search at a tiny gradient still marks a local optimum.
                log.converged = gmax < std::max(1e3 * opt.gradient_tol, 1e-2);
                break;
            }
        }
    }
    gsl_multimin_fdfminimizer_free(s);
    gsl_vector_free(x);
    log.evaluations = obj.evaluations;

    if (obj.best_h.size() == 0) {
        log.evidence = std::numeric_limits<double>::quiet_NaN();
        log.converged = false;
        return log;
    }
    log.final_hyper = obj.best_h;
    log.evidence = -obj.best_f;
    return log;
}

}  // namespace

Json OptimizeResult::to_json() const {
    Json j;
    j["kernel"] = kernel.to_json(fit.series.calendar);
    j["log_evidence"] = fit.log_marginal;
    j["newton_iterations"] = fit.iterations;
    j["best_restart"] = best_restart;
    Json rs = Json::array();
    const std::vector<std::string> names = kernel.hyper_names();
    for (const RestartLog& r : restarts) {
        Json e;
        e["index"] = r.index;
        e["status"] = r.status;
        e["converged"] = r.converged;
        e["iterations"] = r.iterations;
        e["evaluations"] = r.evaluations;
        e["initial_log_evidence"] = std::isfinite(r.initial_evidence) ? Json(r.initial_evidence) : Json();
        e["log_evidence"] = std::isfinite(r.evidence) ? Json(r.evidence) : Json();
        Json init, fin;
        for (std::size_t i = 0; i < names.size(); ++i) {
            init[names[i]] = std::exp(r.initial[static_cast<Eigen::Index>(i)]);
            if (r.final_hyper.size()) fin[names[i]] = std::exp(r.final_hyper[static_cast<Eigen::Index>(i)]);
        }
        e["initial"] = init;
        e["final"] = fin;
        rs.push_back(e);
    }
    j["restarts"] = rs;
    return j;
}

OptimizeResult optimize_hyperparams(const KernelSpec& tmpl, const ReturnsSeries& series, const OptimizeOptions& opt) {
    if (opt.restarts < 1) throw DomainError("optimize_hyperparams: restarts must be >= 1");
    tmpl.validate();
    series.validate();
    silence_gsl();
    std::vector<RestartLog> logs(static_cast<std::size_t>(opt.restarts));
    parallel_for(logs.size(), [&](std::size_t i) {
        const int idx = static_cast<int>(i);
        const Eigen::VectorXd h0 =
            idx == 0 ? tmpl.log_hyper() : draw_start(tmpl, opt.ranges, opt.seed, idx, series.calendar);
        logs[i] = run_restart(tmpl, series, opt, h0, idx);
    });

    OptimizeResult out;
    for (const RestartLog& r : logs) {
        if (!std::isfinite(r.evidence)) continue;
        if (out.best_restart < 0 || r.evidence > logs[static_cast<std::size_t>(out.best_restart)].evidence)
            out.best_restart = r.index;
    }
    out.restarts = std::move(logs);
    if (out.best_restart < 0) throw AllRestartsFailed("optimize_hyperparams: every restart failed");
    const RestartLog& best = out.restarts[static_cast<std::size_t>(out.best_restart)];
    out.kernel = tmpl.with_log_hyper(best.final_hyper);
    out.fit = laplace_fit(out.kernel, series);
    return out;
}

namespace {

Prediction band_from(std::vector<double> days, const Eigen::VectorXd& m, const Eigen::VectorXd& v) {
    Prediction p;
    p.days = std::move(days);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double s = std::sqrt(std::max(v[i], 0.0));
        p.mean.push_back(m[i]);
        p.variance.push_back(v[i]);
        p.sigma_lo.push_back(std::exp(0.5 * (m[i] - 2.0 * s)));
        p.sigma_hi.push_back(std::exp(0.5 * (m[i] + 2.0 * s)));
    }
    return p;
}

}  // namespace

Prediction predict(const LaplaceFit& fit, const std::vector<double>& future_days) {
    const double last = fit.series.days.back();
    for (double d : future_days)
        if (!(d > last)) throw DomainError("predict: future days must exceed the last observed day");
    const std::vector<double> obs = fit.series.years();
    const Eigen::Index n = static_cast<Eigen::Index>(obs.size()), m = static_cast<Eigen::Index>(future_days.size());
    Eigen::MatrixXd ks(n, m);
    Eigen::VectorXd kss(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double t = fit.series.calendar.years(future_days[static_cast<std::size_t>(j)]);
        kss[j] = fit.kernel(0.0);
        for (Eigen::Index i = 0; i < n; ++i) ks(i, j) = fit.kernel(t - obs[static_cast<std::size_t>(i)]);
    }
    const Eigen::VectorXd mean = ks.transpose() * fit.dlik;
    Eigen::MatrixXd v = fit.W.array().sqrt().matrix().asDiagonal() * ks;
    fit.L.triangularView<Eigen::Lower>().solveInPlace(v);
    const Eigen::VectorXd var = kss - v.colwise().squaredNorm().transpose();
    return band_from(future_days, mean, var);
}

Prediction posterior_band(const LaplaceFit& fit) {
    return band_from(fit.series.days, fit.y_mode, fit.posterior_variance());
}

namespace {

// Prior Gram without the Bias term, with the fit's jitter (or its own if Bias was removed).
Eigen::MatrixXd bias_free_gram(const LaplaceFit& fit) {
    if (!fit.kernel.has_bias()) return fit.K;
    return jittered_gram(fit.kernel.without_bias(), fit.series.years()).K;
}

}  // namespace

double information_gain(const LaplaceFit& fit, const std::vector<std::size_t>& subset) {
    if (subset.empty()) throw DomainError("information_gain: subset is empty");
    const Eigen::Index n = fit.K.rows();
    for (std::size_t i : subset)
        if (i >= static_cast<std::size_t>(n)) throw DomainError("information_gain: index out of range");
    const Eigen::MatrixXd K = bias_free_gram(fit);
    const Eigen::VectorXd sw = fit.W.array().sqrt();
    Eigen::MatrixXd B = sw.asDiagonal() * K * sw.asDiagonal();
    B.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(B, "information_gain");
    Eigen::MatrixXd c = sw.asDiagonal() * K;
    llt.matrixL().solveInPlace(c);

    const Eigen::Index s = static_cast<Eigen::Index>(subset.size());
    Eigen::MatrixXd prior(s, s), post(s, s);
    for (Eigen::Index i = 0; i < s; ++i)
        for (Eigen::Index j = 0; j < s; ++j) {
            const Eigen::Index a = static_cast<Eigen::Index>(subset[static_cast<std::size_t>(i)]);
            const Eigen::Index b = static_cast<Eigen::Index>(subset[static_cast<std::size_t>(j)]);
            prior(i, j) = K(a, b);
            post(i, j) = K(a, b) - c.col(a).dot(c.col(b));
        }
    const double ld_prior = log_det_from_llt(checked_llt(prior, "information_gain prior"));
    const double ld_post = log_det_from_llt(checked_llt(post, "information_gain posterior"));
    return 0.5 * (ld_prior - ld_post) / std::numbers::ln2;
}

Json InfoGainCurve::to_json() const {
    Json j;
    j["target"] = target;
    j["windows"] = windows;
    j["gain_bits"] = gain;
    return j;
}

InfoGainCurve info_gain_curve(const LaplaceFit& fit, std::size_t target, const std::vector<int>& windows) {
    const std::size_t n = static_cast<std::size_t>(fit.K.rows());
    if (target >= n) throw DomainError("info_gain_curve: target out of range");
    for (std::size_t k = 0; k < windows.size(); ++k) {
        if (windows[k] < 1) throw DomainError("info_gain_curve: windows must be positive");
        if (k > 0 && windows[k] <= windows[k - 1]) throw DomainError("info_gain_curve: windows must be ascending");
        if (static_cast<std::size_t>(windows[k]) > target)
            throw DomainError("info_gain_curve: window reaches before the first observation");
    }
    const Eigen::MatrixXd K = bias_free_gram(fit);
    const Eigen::Index t = static_cast<Eigen::Index>(target);
    InfoGainCurve curve;
    curve.target = target;
    curve.windows = windows;
    for (int w : windows) {
        const Eigen::Index lo = t - w;
        const Eigen::VectorXd sw = fit.W.segment(lo, w).array().sqrt();
        Eigen::MatrixXd B = sw.asDiagonal() * K.block(lo, lo, w, w) * sw.asDiagonal();
        B.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(B, "info_gain_curve");
        Eigen::VectorXd v = sw.cwiseProduct(K.col(t).segment(lo, w));
        llt.matrixL().solveInPlace(v);
        const double prior = K(t, t), post = prior - v.squaredNorm();
        curve.gain.push_back(0.5 * std::log2(prior / post));
    }
    return curve;
}

std::vector<ModelScore> compare_models(const ReturnsSeries& series, const std::vector<KernelSpec>& templates,
                                       const OptimizeOptions& opt) {
    if (templates.size() < 2) throw DomainError("compare_models: need at least two templates");
    std::vector<ModelScore> out;
    for (const KernelSpec& k : templates) {
        ModelScore s;
        s.name = k.name;
        s.n_hyper = k.n_hyper();
        s.result = optimize_hyperparams(k, series, opt);
        s.evidence = s.result.fit.log_marginal;
        out.push_back(std::move(s));
    }
    std::stable_sort(out.begin(), out.end(), [](const ModelScore& a, const ModelScore& b) {
        if (a.evidence != b.evidence) return a.evidence > b.evidence;
        return a.n_hyper < b.n_hyper;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
    return out;
}

namespace {

std::pair<double, double> parse_range(const std::string& key, const std::string& value) {
    const auto comma = value.find(',');
    if (comma == std::string::npos) throw ParseError("config: " + key + " needs 'lo, hi'");
    try {
        const double lo = std::stod(trim(value.substr(0, comma)));
        const double hi = std::stod(trim(value.substr(comma + 1)));
        if (!(lo > 0.0 && hi > lo)) throw ParseError("config: " + key + " needs 0 < lo < hi");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ParseError("config: " + key + " is not numeric");
    }
}

}  // namespace

GpConfig parse_gp_config(std::string_view text) {
    GpConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        if (key == "restarts") {
            try {
                cfg.restarts = std::stoi(value);
            } catch (const std::logic_error&) {
                throw ParseError("config: restarts is not an integer");
            }
            if (cfg.restarts < 1) throw ParseError("config: restarts must be >= 1");
        } else if (key == "variance_range") {
            std::tie(cfg.ranges.variance_lo, cfg.ranges.variance_hi) = parse_range(key, value);
        } else if (key == "bias_range") {
            std::tie(cfg.ranges.bias_lo, cfg.ranges.bias_hi) = parse_range(key, value);
        } else if (key == "lengthscale_days") {
            std::tie(cfg.ranges.length_lo_days, cfg.ranges.length_hi_days) = parse_range(key, value);
        } else if (key == "mixing_range") {
            std::tie(cfg.ranges.mixing_lo, cfg.ranges.mixing_hi) = parse_range(key, value);
        } else if (key == "log_bound") {
            try {
                cfg.ranges.log_bound = std::stod(value);
            } catch (const std::logic_error&) {
                throw ParseError("config: log_bound is not numeric");
            }
            if (!(cfg.ranges.log_bound > 0.0)) throw ParseError("config: log_bound must be positive");
        } else if (key.rfind("template.", 0) == 0) {
            const std::string name = key.substr(9);
            if (name.empty()) throw ParseError("config: template name is empty");
            try {
                cfg.templates.push_back(parse_kernel(value, name));
            } catch (const InputError& e) {
                throw ParseError(std::string("config: ") + e.what());
            }
        } else {
            throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

GpConfig load_gp_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_gp_config(ss.str());
}

SyntheticSeries synthetic_returns(const KernelSpec& truth, double mean_y, std::size_t n, std::uint64_t seed,
                                  const CalendarConvention& cal) {
    if (n == 0) throw DomainError("synthetic_returns: n must be positive");
    SyntheticSeries out;
    out.series.calendar = cal;
    for (std::size_t i = 0; i < n; ++i) out.series.days.push_back(static_cast<double>(i));
    JitteredGram g = jittered_gram(truth, out.series.years());
    const Philox4x32 rng(seed);
    auto normals = [&](std::uint64_t stream) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; i += 2) {
            const auto p = normal_pair(rng(stream, i / 2));
            z[static_cast<Eigen::Index>(i)] = p[0];
            if (i + 1 < n) z[static_cast<Eigen::Index>(i + 1)] = p[1];
        }
        return z;
    };
    const Eigen::VectorXd y = (g.llt.matrixL() * normals(0)).array() + mean_y;
    const Eigen::VectorXd e = normals(1);
    out.y.assign(y.data(), y.data() + y.size());
    for (std::size_t i = 0; i < n; ++i)
        out.series.returns.push_back(std::exp(0.5 * y[static_cast<Eigen::Index>(i)]) * e[static_cast<Eigen::Index>(i)]);
    return out;
}

}  // namespace volinfo
