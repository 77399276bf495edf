#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace livinglab {

enum class WilcoxonMethod { Auto, Exact, Normal };

struct TestResult {
    double statistic = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double p_value = 1.0;    // two-sided, in (0, 1]
    WilcoxonMethod method = WilcoxonMethod::Exact;
    std::size_t n_effective = 0;
};

std::string_view to_string(WilcoxonMethod method);

/// Largest effective sample size handled by exact enumeration under Auto.
inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Signed-rank test on paired samples. Zero differences are dropped, tied
/// magnitudes share average ranks. Exact two-sided p up to
/// kWilcoxonExactLimit non-zero pairs, otherwise a normal approximation with
/// tie and continuity correction. Throws DomainError when every difference
/// is zero.
TestResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs,
                                WilcoxonMethod method = WilcoxonMethod::Auto);

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Spearman's rho as the Pearson correlation of average ranks; two-sided p
/// from Student's t with n - 2 degrees of freedom. Throws DomainError on
/// length mismatch, n < 3 or a constant input.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// 1-based ranks, ties receiving the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace livinglab
