#include "qshrink/specfun.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qshrink/errors.hpp"

namespace qshrink {

namespace {

constexpr double kPoissonTail = 1e-14;
constexpr int kMaxComponents = 100000;

// Series expansion of P(a,x), valid and fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a,x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Visits the Poisson(lambda) weights in decreasing-importance order starting
// at the mode and walking outward, so large lambda never underflows.  Calls
// visit(k, w_k) until the remaining mass is below kPoissonTail.
template <typename Visitor>
void poisson_mixture(double lambda, Visitor&& visit) {
    if (lambda <= 0.0) {
        visit(0, 1.0);
        return;
    }
    const long k0 = static_cast<long>(lambda);
    const double logw0 = -lambda + k0 * std::log(lambda) - std::lgamma(k0 + 1.0);
    double covered = 0.0;
    double wf = std::exp(logw0); // forward weight at k0, k0+1, ...
    double wb = wf;              // backward weight at k0-1, k0-2, ...
    long kf = k0;
    long kb = k0 - 1;
    if (wf > 0.0) {
        visit(kf, wf);
        covered += wf;
    }
    while (covered < 1.0 - kPoissonTail && (kf - k0) + (k0 - kb) < kMaxComponents) {
        // advance whichever side has the larger next weight
        const double next_f = wf * lambda / static_cast<double>(kf + 1);
        const double next_b = (kb >= 0) ? wb * static_cast<double>(kb + 1) / lambda : 0.0;
        if (next_f >= next_b) {
            ++kf;
            wf = next_f;
            if (wf > 0.0) visit(kf, wf);
            covered += wf;
        } else {
            wb = next_b;
            if (wb > 0.0) visit(kb, wb);
            covered += wb;
            --kb;
        }
        if (next_f <= 0.0 && next_b <= 0.0) break;
    }
}

void check_dist(const NoncentralChiSq& d) {
    if (d.df < 1) throw validation_error("NoncentralChiSq: df must be >= 1");
    if (!(d.noncentrality >= 0.0) || !std::isfinite(d.noncentrality))
        throw validation_error("NoncentralChiSq: noncentrality must be finite and >= 0");
}

// 2^-s Gamma(m/2 - s) / Gamma(m/2), evaluated in log space; the per-component
// prefactor of the df-shift identity.  Requires m > 2s.
double df_shift_coefficient(double m, int s) {
    return std::exp(-s * std::log(2.0) + std::lgamma(0.5 * m - s) - std::lgamma(0.5 * m));
}

} // namespace

NoncentralChiSq make_noncentral_chi_sq(int df, double noncentrality) {
    NoncentralChiSq d{df, noncentrality};
    check_dist(d);
    return d;
}

double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(x) || !std::isfinite(a))
        throw validation_error("gamma_p: need a > 0, x >= 0, both finite");
    if (x == 0.0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0 || !std::isfinite(x) || !std::isfinite(a))
        throw validation_error("gamma_q: need a > 0, x >= 0, both finite");
    if (x == 0.0) return 1.0;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_cf(a, x);
}

double chi_squared_cdf(double df, double x) {
    if (!(df > 0.0)) throw validation_error("chi_squared_cdf: df must be > 0");
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double cdf(const NoncentralChiSq& dist, double x) {
    check_dist(dist);
    if (!std::isfinite(x)) throw validation_error("cdf: x must be finite");
    if (x < 0.0) throw validation_error("cdf: x must be >= 0");
    if (x == 0.0) return 0.0;
    double acc = 0.0;
    poisson_mixture(0.5 * dist.noncentrality, [&](long k, double w) {
        acc += w * chi_squared_cdf(dist.df + 2.0 * k, x);
    });
    return std::min(acc, 1.0);
}

double inv_moment(const NoncentralChiSq& dist, int order) {
    check_dist(dist);
    if (order != 1 && order != 2)
        throw validation_error("inv_moment: only orders 1 and 2 are supported");
    if (dist.df <= 2 * order)
        throw validation_error("inv_moment: E[X^-" + std::to_string(order) +
                               "] diverges for df <= " + std::to_string(2 * order));
    double acc = 0.0;
    poisson_mixture(0.5 * dist.noncentrality, [&](long k, double w) {
        const double m = dist.df + 2.0 * k;
        const double c = (order == 1) ? 1.0 / (m - 2.0) : 1.0 / ((m - 2.0) * (m - 4.0));
        acc += w * c;
    });
    return acc;
}

double truncated_inv_moment(const NoncentralChiSq& dist, int order, double cutoff,
                            TailSide side) {
    check_dist(dist);
    if (order < 0 || order > 2)
        throw validation_error("truncated_inv_moment: only orders 0, 1, 2 are supported");
    if (!(cutoff > 0.0) || !std::isfinite(cutoff))
        throw validation_error("truncated_inv_moment: cutoff must be positive and finite");
    if (order > 0 && dist.df <= 2 * order)
        throw validation_error("truncated_inv_moment: moment diverges for df <= 2*order");

    double acc = 0.0;
    poisson_mixture(0.5 * dist.noncentrality, [&](long k, double w) {
        const double m = dist.df + 2.0 * k;
        double piece;
        if (order == 0) {
            piece = (side == TailSide::below) ? chi_squared_cdf(m, cutoff)
                                              : gamma_q(0.5 * m, 0.5 * cutoff);
        } else {
            const double coef = df_shift_coefficient(m, order);
            const double a = 0.5 * (m - 2.0 * order);
            piece = coef * ((side == TailSide::below) ? gamma_p(a, 0.5 * cutoff)
                                                      : gamma_q(a, 0.5 * cutoff));
        }
        acc += w * piece;
    });
    return acc;
}

double chi_squared_quantile(double df, double p) {
    if (!(df > 0.0)) throw validation_error("chi_squared_quantile: df must be > 0");
    if (!(p >= 0.0 && p < 1.0))
        throw validation_error("chi_squared_quantile: p must be in [0, 1)");
    if (p == 0.0) return 0.0;
    // Wilson–Hilferty start, then bisection + Newton refinement.
    const double z = normal_quantile(p);
    const double wh = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
    double x = df * wh * wh * wh;
    if (!(x > 0.0)) x = 0.5 * df;
    double lo = 0.0, hi = std::max(2.0 * x, df + 10.0);
    while (chi_squared_cdf(df, hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e308) throw numeric_error("chi_squared_quantile: bracket overflow");
    }
    for (int it = 0; it < 200; ++it) {
        const double f = chi_squared_cdf(df, x) - p;
        if (f > 0.0) hi = x; else lo = x;
        const double pdf = std::exp((0.5 * df - 1.0) * std::log(x) - 0.5 * x -
                                    0.5 * df * std::log(2.0) - std::lgamma(0.5 * df));
        double step = (pdf > 0.0) ? f / pdf : 0.0;
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::fabs(xn - x) <= 1e-14 * (1.0 + x)) return xn;
        x = xn;
    }
    return x;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation polished with one Halley step; ~1e-15 accurate.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw validation_error("normal_quantile: p must be in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace qshrink
