#pragma once

#include "itlab/factor_space.hpp"

#include <span>
#include <vector>

namespace itlab {

enum class CodeMetric { hamming, cosine };

/// Hamming counts exactly-unequal coordinates; cosine distance is 1 - cos,
/// with 0 between two zero vectors and 1 between a zero and a nonzero one.
double code_distance(std::span<const double> a, std::span<const double> b, CodeMetric metric);

/// Topological similarity: Pearson correlation between pairwise code
/// distances and pairwise Hamming distances of the factor tuples, over all
/// unordered distinct pairs. Zero-variance distance vectors give 0.
double topological_similarity(std::span<const std::vector<double>> codes, std::span<const FactorTuple> factors,
                              CodeMetric code_metric);

/// Convenience for integer codes (e.g. argmax indices or mapped tuples).
double topological_similarity(std::span<const FactorTuple> codes, std::span<const FactorTuple> factors);

} // namespace itlab
