#ifndef QSHRINK_SPECFUN_HPP
#define QSHRINK_SPECFUN_HPP

namespace qshrink {

// Non-central chi-square with integer degrees of freedom v >= 1 and
// noncentrality lambda >= 0.  Everything is evaluated through the Poisson
// mixture of central chi-squares: weight_k = Poisson(lambda/2) on component
// df v + 2k, truncated once the remaining Poisson tail mass drops below 1e-14.
struct NoncentralChiSq {
    int df;
    double noncentrality;
};

NoncentralChiSq make_noncentral_chi_sq(int df, double noncentrality);

// P(X <= x) for X ~ NoncentralChiSq.
double cdf(const NoncentralChiSq& dist, double x);

// E[X^-order], supported for order in {1, 2}.  Finite iff df > 2*order;
// otherwise a validation_error is thrown.  Central components use the closed
// forms E[chisq_m^-1] = 1/(m-2) and E[chisq_m^-2] = 1/((m-2)(m-4)).
double inv_moment(const NoncentralChiSq& dist, int order);

enum class TailSide { below, above };

// E[X^-order I(X <= c)] (below) or E[X^-order I(X > c)] (above);
// order = 0 gives the truncated probability mass.  Each central component is
// integrated in closed form via a degrees-of-freedom shift:
//   int_0^c x^-s f_m(x) dx = 2^-s Gamma(m/2 - s)/Gamma(m/2) * F_{m-2s}(c)
// with F the central chi-square CDF, so no quadrature is involved.
double truncated_inv_moment(const NoncentralChiSq& dist, int order, double cutoff,
                            TailSide side);

// Central chi-square quantile (lower tail): smallest q with P(chisq_df <= q) = p.
// Real-valued df > 0 is accepted.
double chi_squared_quantile(double df, double p);

// Central chi-square CDF for real df > 0 (regularized lower incomplete gamma).
double chi_squared_cdf(double df, double x);

// Standard normal helpers.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

} // namespace qshrink

#endif
