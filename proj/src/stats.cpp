#include "livinglab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "livinglab/model.hpp"

namespace livinglab {

std::string_view to_string(WilcoxonMethod method) {
    switch (method) {
        case WilcoxonMethod::Auto: return "auto";
        case WilcoxonMethod::Exact: return "exact";
        case WilcoxonMethod::Normal: return "normal-approximation";
    }
    return "unknown";
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

namespace {

// Exact null distribution of 2*W+ over all 2^n sign assignments. Doubled
// average ranks are integers, so a counting DP over sums is exact.
double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
    std::vector<long> doubled;
    long total = 0;
    for (double r : ranks) {
        doubled.push_back(std::lround(2.0 * r));
        total += doubled.back();
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long d : doubled) {
        for (long s = reach; s >= 0; --s) {
            if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + d)] += counts[static_cast<std::size_t>(s)];
        }
        reach += d;
    }
    const long w = std::lround(2.0 * w_plus);
    double lower = 0.0;
    double upper = 0.0;
    for (long s = 0; s <= total; ++s) {
        if (s <= w) lower += counts[static_cast<std::size_t>(s)];
        if (s >= w) upper += counts[static_cast<std::size_t>(s)];
    }
    const double all = std::ldexp(1.0, static_cast<int>(ranks.size()));
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

double normal_two_sided_p(const std::vector<double>& abs_diffs, const std::vector<double>& ranks, double w_plus) {
    const double n = static_cast<double>(ranks.size());
    const double mean = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted(abs_diffs);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace

TestResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs, WilcoxonMethod method) {
    std::vector<double> diffs;
    for (const auto& [a, b] : pairs) {
        const double d = a - b;
        if (!std::isfinite(d)) throw DomainError("non-finite paired difference");
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw DomainError("degenerate sample: all differences are zero");
    std::vector<double> abs_diffs;
    abs_diffs.reserve(diffs.size());
    for (double d : diffs) abs_diffs.push_back(std::abs(d));
    const auto ranks = average_ranks(abs_diffs);

    TestResult result;
    result.n_effective = diffs.size();
    double w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? result.w_plus : w_minus) += ranks[i];
    result.statistic = std::min(result.w_plus, w_minus);

    if (method == WilcoxonMethod::Auto) {
        method = diffs.size() <= kWilcoxonExactLimit ? WilcoxonMethod::Exact : WilcoxonMethod::Normal;
    }
    result.method = method;
    result.p_value = method == WilcoxonMethod::Exact ? exact_two_sided_p(ranks, result.w_plus)
                                                     : normal_two_sided_p(abs_diffs, ranks, result.w_plus);
    result.p_value = std::max(result.p_value, std::numeric_limits<double>::min());
    return result;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("spearman: inputs differ in length");
    if (x.size() < 3) throw DomainError("spearman: need at least 3 observations");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
    };
    if (constant(x) || constant(y)) throw DomainError("spearman: constant input");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    CorrelationResult result;
    result.n = x.size();
    result.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = n - 2.0;
    const double denom = 1.0 - result.rho * result.rho;
    if (denom <= 0.0) {
        result.p_value = 0.0;
    } else {
        const double t = std::abs(result.rho) * std::sqrt(df / denom);
        boost::math::students_t dist(df);
        result.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
    }
    return result;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("ols_slope: need two equal-length series of size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("ols_slope: constant regressor");
    return sxy / sxx;
}

}  // namespace livinglab
