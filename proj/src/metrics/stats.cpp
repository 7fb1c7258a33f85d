#include "ganaug/metrics/stats.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "ganaug/util/error.hpp"

namespace ganaug::metrics {

RepeatSummary aggregate_repeats(std::span<const double> scores) {
    if (scores.size() < 2) throw ValidationError("aggregate_repeats: need at least 2 scores for a sample std");
    RepeatSummary s;
    s.n = static_cast<int>(scores.size());
    double sum = 0.0;
    for (double v : scores) sum += v;
    s.mean = sum / s.n;
    double ss = 0.0;
    for (double v : scores) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.n - 1));
    return s;
}

std::string format_mean_std(double mean, double std) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f (%.2f)", mean, std);
    return buf;
}

std::string format_mean_std(const RepeatSummary& s) { return format_mean_std(s.mean, s.std); }

namespace {

// Continued fraction for I_x(a,b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw ValidationError("incomplete_beta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The continued fraction converges fastest on the side of the mean.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_two_tailed_p(double t, double dof) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

StatResult t_test_two_tailed(std::span<const double> a, std::span<const double> b, TTestKind kind, double alpha) {
    if (a.size() < 2 || b.size() < 2) throw ValidationError("t_test_two_tailed: each sample needs at least 2 values");
    const RepeatSummary sa = aggregate_repeats(a);
    const RepeatSummary sb = aggregate_repeats(b);
    const double na = sa.n;
    const double nb = sb.n;
    const double va = sa.std * sa.std;
    const double vb = sb.std * sb.std;
    const double diff = sa.mean - sb.mean;

    StatResult r;
    double se2 = 0.0;
    if (kind == TTestKind::welch) {
        const double qa = va / na;
        const double qb = vb / nb;
        se2 = qa + qb;
        r.dof = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    } else {
        const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        se2 = pooled * (1.0 / na + 1.0 / nb);
        r.dof = na + nb - 2.0;
    }
    if (se2 == 0.0) {
        // Both samples constant: identical means are indistinguishable, different ones trivially so.
        r.dof = na + nb - 2.0;
        r.t_statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
        r.p_value = diff == 0.0 ? 1.0 : 0.0;
    } else {
        r.t_statistic = diff / std::sqrt(se2);
        r.p_value = t_two_tailed_p(r.t_statistic, r.dof);
    }
    r.significant = r.p_value < alpha;
    return r;
}

}  // namespace ganaug::metrics
