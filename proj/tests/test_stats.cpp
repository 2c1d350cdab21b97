#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "dialrl/rng.hpp"
#include "dialrl/stats.hpp"

using namespace dialrl;
namespace st = dialrl::stats;

namespace {

// Independent oracle: two-sided tail of Student's t by direct quadrature of
// the density (composite Simpson on [|t|, |t|+60]).
double t_tail_oracle(double t, double df) {
    // Simpson's rule after the substitution x = |t| + tan(theta), which maps the
    // infinite tail onto a finite interval without truncation error.
    const double lo = std::fabs(t);
    const int n = 200000;  // even
    const double hi_theta = M_PI / 2.0 - 1e-9;
    const double h = hi_theta / n;
    const double log_norm = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                            0.5 * std::log(df * M_PI);
    auto integrand = [&](double theta) {
        const double x = lo + std::tan(theta);
        const double sec2 = 1.0 + std::tan(theta) * std::tan(theta);
        return std::exp(log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df)) * sec2;
    };
    double sum = integrand(0.0) + integrand(hi_theta);
    for (int i = 1; i < n; ++i) sum += integrand(i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return 2.0 * sum * h / 3.0;
}

// Independent long-double reimplementations of the moment statistics.
long double mean_ld(const std::vector<double>& xs) {
    long double s = 0.0L;
    for (double x : xs) s += x;
    return s / static_cast<long double>(xs.size());
}

struct OracleFit {
    long double r, slope, intercept;
};

OracleFit fit_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
    const long double mx = mean_ld(xs), my = mean_ld(ys);
    long double sxx = 0.0L, syy = 0.0L, sxy = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    OracleFit fit;
    fit.r = sxy / std::sqrt(sxx * syy);
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

struct OracleWelch {
    long double t;
    long double df;
};

OracleWelch welch_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    const long double ma = mean_ld(a), mb = mean_ld(b);
    long double va = 0.0L, vb = 0.0L;
    for (double x : a) va += (x - ma) * (x - ma);
    for (double x : b) vb += (x - mb) * (x - mb);
    va /= a.size() - 1;
    vb /= b.size() - 1;
    const long double sa = va / a.size(), sb = vb / b.size();
    OracleWelch w;
    w.t = (ma - mb) / std::sqrt(sa + sb);
    w.df = (sa + sb) * (sa + sb) /
           (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
    return w;
}

}  // namespace

TEST_CASE("mean and sample variance") {
    CHECK(st::mean({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(st::sample_variance({1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
    CHECK(st::sample_variance({7, 7, 7}) == doctest::Approx(0.0));
}

TEST_CASE("incomplete beta endpoints and symmetry") {
    CHECK(st::incomplete_beta(2.0, 3.0, 0.0) == doctest::Approx(0.0));
    CHECK(st::incomplete_beta(2.0, 3.0, 1.0) == doctest::Approx(1.0));
    // I_x(1,1) = x
    CHECK(st::incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
    // I_x(a,b) = 1 - I_{1-x}(b,a)
    const double lhs = st::incomplete_beta(2.5, 4.0, 0.3);
    const double rhs = 1.0 - st::incomplete_beta(4.0, 2.5, 0.7);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("student t p-value against quadrature oracle") {
    for (const auto& [t, df] : std::vector<std::pair<double, double>>{
             {0.5, 3.0}, {1.0, 10.0}, {2.3, 7.0}, {-1.7, 18.0}, {3.2, 29.0}}) {
        CHECK(st::student_t_two_sided_p(t, df) ==
              doctest::Approx(t_tail_oracle(t, df)).epsilon(1e-8));
    }
    CHECK(st::student_t_two_sided_p(0.0, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("welch t-test basics") {
    const std::vector<double> a = {1.1, 2.3, 2.9, 4.2, 5.0};
    const std::vector<double> b = {0.4, 1.0, 2.2, 3.1, 3.3};
    const auto fwd = st::welch_t_test(a, b);
    const auto rev = st::welch_t_test(b, a);
    CHECK(fwd.t == doctest::Approx(-rev.t));
    CHECK(fwd.p == doctest::Approx(rev.p));
    CHECK(fwd.p > 0.0);
    CHECK(fwd.p <= 1.0);

    const auto same = st::welch_t_test(a, a);
    CHECK(same.t == doctest::Approx(0.0));
    CHECK(same.p == doctest::Approx(1.0));
}

TEST_CASE("welch t-test degenerate conventions") {
    CHECK(st::welch_t_test({2, 2, 2}, {2, 2}).p == doctest::Approx(1.0));
    CHECK(st::welch_t_test({2, 2, 2}, {3, 3}).p == doctest::Approx(0.0));
}

TEST_CASE("welch against fixed-sample oracle") {
    const std::vector<double> a = {12.9, 10.2, 13.1, 11.5, 9.8, 12.0, 10.7, 11.1, 13.6, 12.2};
    const std::vector<double> b = {10.1, 9.4, 11.0, 8.7, 10.5, 9.9, 8.2, 10.8, 9.1, 9.6};
    const auto result = st::welch_t_test(a, b);
    const auto oracle = welch_oracle(a, b);
    CHECK(result.t == doctest::Approx(static_cast<double>(oracle.t)).epsilon(1e-10));
    CHECK(result.df == doctest::Approx(static_cast<double>(oracle.df)).epsilon(1e-10));
    CHECK(result.p ==
          doctest::Approx(t_tail_oracle(static_cast<double>(oracle.t),
                                        static_cast<double>(oracle.df)))
              .epsilon(1e-6));
}

TEST_CASE("pearson and linear fit exact lines") {
    const std::vector<double> xs = {1, 2, 3, 4, 5};
    std::vector<double> ys = xs;
    CHECK(st::pearson(xs, ys).r == doctest::Approx(1.0));
    CHECK(st::linear_fit(xs, ys).slope == doctest::Approx(1.0));
    CHECK(st::linear_fit(xs, ys).intercept == doctest::Approx(0.0));

    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = -xs[i] + 5.0;
    CHECK(st::pearson(xs, ys).r == doctest::Approx(-1.0));
    CHECK(st::linear_fit(xs, ys).slope == doctest::Approx(-1.0));
    CHECK(st::linear_fit(xs, ys).intercept == doctest::Approx(5.0));
}

TEST_CASE("pearson and fit against independent oracle on random instances") {
    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs, ys;
        const int n = 5 + static_cast<int>(rng.uniform_index(30));
        for (int i = 0; i < n; ++i) {
            const double x = rng.uniform() * 10.0 - 5.0;
            xs.push_back(x);
            ys.push_back(0.7 * x + (rng.uniform() - 0.5) * 4.0);
        }
        const auto oracle = fit_oracle(xs, ys);
        CHECK(st::pearson(xs, ys).r ==
              doctest::Approx(static_cast<double>(oracle.r)).epsilon(1e-9));
        const auto fit = st::linear_fit(xs, ys);
        CHECK(fit.slope == doctest::Approx(static_cast<double>(oracle.slope)).epsilon(1e-9));
        CHECK(fit.intercept ==
              doctest::Approx(static_cast<double>(oracle.intercept)).epsilon(1e-9));
    }
}

TEST_CASE("pearson input validation") {
    CHECK_THROWS_AS((void)st::pearson({1, 2}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS((void)st::pearson({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS((void)st::linear_fit({2, 2, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("exact binomial test") {
    // enumerate Binomial(6, 0.5): p-value for k is the total mass of outcomes
    // no more likely than k
    auto pmf = [](int k) {
        static const double c[] = {1, 6, 15, 20, 15, 6, 1};
        return c[k] / 64.0;
    };
    for (int k = 0; k <= 6; ++k) {
        double expected = 0.0;
        for (int j = 0; j <= 6; ++j) {
            if (pmf(j) <= pmf(k) + 1e-12) expected += pmf(j);
        }
        CHECK(st::binomial_two_sided_p(k, 6, 0.5) == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(st::binomial_two_sided_p(3, 6, 0.5) == doctest::Approx(1.0));
    CHECK(st::binomial_two_sided_p(155, 311, 0.5) > 0.9);
}
