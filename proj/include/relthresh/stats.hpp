#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace relthresh::stats {

/// Two-sided p-value of a standard-normal z statistic.
double normal_two_sided_p(double z);
/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);
/// Two-sided p-value of a Student-t statistic.
double t_two_sided_p(double t, double df);

/// 1-based ranks, ascending; ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double mean(std::span<const double> values);

/// Linear-interpolation quantile (the default in R and numpy).
double quantile(std::vector<double> values, double q);

struct BoxStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    std::size_t n = 0;
};

BoxStats box_stats(std::span<const double> values);
nlohmann::json to_json(const BoxStats& b);

}  // namespace relthresh::stats
