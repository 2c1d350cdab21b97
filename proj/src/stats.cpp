#include "dialrl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dialrl::stats {

namespace {

// Continued-fraction evaluation of the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double log_binom_coeff(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: each sample needs at least 2 values");
    const double ma = mean(a);
    const double mb = mean(b);
    const double va = sample_variance(a);
    const double vb = sample_variance(b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());

    TTestResult result;
    const double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        result.t = (ma == mb) ? 0.0 : (ma > mb ? std::numeric_limits<double>::infinity()
                                               : -std::numeric_limits<double>::infinity());
        result.p = (ma == mb) ? 1.0 : 0.0;
        result.df = na + nb - 2.0;
        return result;
    }
    result.t = (ma - mb) / std::sqrt(se2);
    result.df = se2 * se2 /
                (va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0)));
    result.p = student_t_two_sided_p(result.t, result.df);
    return result;
}

PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 3) throw std::invalid_argument("pearson: need at least 3 pairs");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson: zero variance");
    PearsonResult result;
    result.r = sxy / std::sqrt(sxx * syy);
    const double n = static_cast<double>(xs.size());
    const double r2 = std::min(result.r * result.r, 1.0);
    if (r2 >= 1.0) {
        result.p = 0.0;
    } else {
        const double t = result.r * std::sqrt((n - 2.0) / (1.0 - r2));
        result.p = student_t_two_sided_p(t, n - 2.0);
    }
    return result;
}

LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("linear_fit: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("linear_fit: need at least 2 pairs");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: zero x-variance");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double binomial_two_sided_p(std::uint64_t k, std::uint64_t n, double p) {
    if (k > n) throw std::invalid_argument("binomial_two_sided_p: k > n");
    if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (p >= 1.0) return k == n ? 1.0 : 0.0;
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    auto log_pmf = [&](std::uint64_t i) {
        return log_binom_coeff(n, i) + static_cast<double>(i) * lp +
               static_cast<double>(n - i) * lq;
    };
    const double observed = log_pmf(k);
    // sum of probabilities no larger than the observed one (small slack for
    // floating-point ties)
    double total = 0.0;
    for (std::uint64_t i = 0; i <= n; ++i) {
        const double lpi = log_pmf(i);
        if (lpi <= observed + 1e-9) total += std::exp(lpi);
    }
    return std::min(total, 1.0);
}

}  // namespace dialrl::stats
