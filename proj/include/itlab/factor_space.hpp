#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace itlab {

/// One value per factor, each in [0, cardinality_i).
using FactorTuple = std::vector<int>;

/// A finite product space G = G_1 x ... x G_m. Points are flattened in
/// row-major order: factor 0 is the most significant digit.
class FactorSpace {
public:
    FactorSpace() = default;
    explicit FactorSpace(std::vector<int> cardinalities);

    static FactorSpace uniform(int num_factors, int cardinality);

    int num_factors() const noexcept { return static_cast<int>(cardinalities_.size()); }
    int cardinality(int factor) const { return cardinalities_.at(static_cast<std::size_t>(factor)); }
    const std::vector<int>& cardinalities() const noexcept { return cardinalities_; }
    std::size_t total_points() const noexcept { return total_; }

    /// True when every factor has the same cardinality.
    bool is_uniform() const noexcept;
    /// Sum of cardinalities, i.e. the width of a concatenated one-hot encoding.
    int one_hot_width() const noexcept;

    std::size_t flatten(const FactorTuple& tuple) const;
    FactorTuple unflatten(std::size_t index) const;
    std::vector<FactorTuple> all_tuples() const;

    /// Digits of the point, e.g. "01"; values are dot-separated when any
    /// cardinality exceeds 10.
    std::string code_string(std::size_t index) const;

    bool operator==(const FactorSpace& other) const = default;

private:
    std::vector<int> cardinalities_;
    std::size_t total_ = 0;
};

/// Number of positions where two tuples differ.
int hamming_distance(const FactorTuple& a, const FactorTuple& b);

} // namespace itlab
