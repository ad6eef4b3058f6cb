/// @file stats.hpp
/// @brief Descriptive statistics shared by scoring and analysis.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ctirag::stats {

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double mean(std::span<const double> xs);

/// Sample standard deviation (n-1 denominator). Requires n >= 2.
double sample_sd(std::span<const double> xs);

double median(std::span<const double> xs);

/// Linear-interpolation quantile (Hyndman-Fan type 7), q in [0,1].
double quantile(std::span<const double> xs, double q);

/// Pearson correlation; nullopt when either side has zero variance or n < 2.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Competition-free average ranks: rank 1 is the best (highest when
/// higher_is_better) and tied entries share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> scores, bool higher_is_better = true);

}  // namespace ctirag::stats
