#pragma once

#include <span>
#include <vector>

namespace itlab {

double mean(std::span<const double> values);
double median(std::vector<double> values);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> values);

/// Spearman rank correlation = Pearson on average ranks.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace itlab
