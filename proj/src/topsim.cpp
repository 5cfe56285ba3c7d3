#include "itlab/topsim.hpp"

#include "itlab/errors.hpp"
#include "itlab/stats.hpp"

#include <cmath>

namespace itlab {

double code_distance(std::span<const double> a, std::span<const double> b, CodeMetric metric)
{
    require(a.size() == b.size(), ErrorCode::length_mismatch, "codes differ in length");
    if (metric == CodeMetric::hamming) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            d += a[i] != b[i] ? 1.0 : 0.0;
        return d;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0)
        return 0.0;
    if (na == 0.0 || nb == 0.0)
        return 1.0;
    return 1.0 - dot / std::sqrt(na * nb);
}

double topological_similarity(std::span<const std::vector<double>> codes, std::span<const FactorTuple> factors,
                              CodeMetric code_metric)
{
    require(codes.size() == factors.size(), ErrorCode::length_mismatch, "codes and factors differ in length");
    require(!codes.empty(), ErrorCode::empty_input, "topological similarity of an empty set");
    require(codes.size() >= 3, ErrorCode::invalid_argument, "topological similarity needs at least 3 points");

    const std::size_t n = codes.size();
    std::vector<double> dz, dg;
    dz.reserve(n * (n - 1) / 2);
    dg.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            dz.push_back(code_distance(codes[i], codes[j], code_metric));
            dg.push_back(static_cast<double>(hamming_distance(factors[i], factors[j])));
        }
    }
    return pearson(dz, dg);
}

double topological_similarity(std::span<const FactorTuple> codes, std::span<const FactorTuple> factors)
{
    std::vector<std::vector<double>> as_real;
    as_real.reserve(codes.size());
    for (const auto& c : codes)
        as_real.emplace_back(c.begin(), c.end());
    return topological_similarity(as_real, factors, CodeMetric::hamming);
}

} // namespace itlab
