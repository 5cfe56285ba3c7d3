#include "itlab/factor_space.hpp"

#include "itlab/errors.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace itlab {

FactorSpace::FactorSpace(std::vector<int> cardinalities) : cardinalities_(std::move(cardinalities))
{
    require(!cardinalities_.empty(), ErrorCode::invalid_argument, "a factor space needs at least one factor");
    total_ = 1;
    for (int c : cardinalities_) {
        require(c >= 1, ErrorCode::invalid_argument, "every cardinality must be >= 1");
        require(total_ <= std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(c),
                ErrorCode::invalid_argument, "factor space too large");
        total_ *= static_cast<std::size_t>(c);
    }
}

FactorSpace FactorSpace::uniform(int num_factors, int cardinality)
{
    require(num_factors >= 1, ErrorCode::invalid_argument, "num_factors must be >= 1");
    return FactorSpace(std::vector<int>(static_cast<std::size_t>(num_factors), cardinality));
}

bool FactorSpace::is_uniform() const noexcept
{
    return std::adjacent_find(cardinalities_.begin(), cardinalities_.end(), std::not_equal_to<>()) ==
           cardinalities_.end();
}

int FactorSpace::one_hot_width() const noexcept
{
    int width = 0;
    for (int c : cardinalities_)
        width += c;
    return width;
}

std::size_t FactorSpace::flatten(const FactorTuple& tuple) const
{
    require(tuple.size() == cardinalities_.size(), ErrorCode::length_mismatch,
            "tuple length does not match the number of factors");
    std::size_t index = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        require(tuple[i] >= 0 && tuple[i] < cardinalities_[i], ErrorCode::invalid_argument,
                "factor value out of range");
        index = index * static_cast<std::size_t>(cardinalities_[i]) + static_cast<std::size_t>(tuple[i]);
    }
    return index;
}

FactorTuple FactorSpace::unflatten(std::size_t index) const
{
    require(index < total_, ErrorCode::invalid_argument, "flat index out of range");
    FactorTuple tuple(cardinalities_.size());
    for (std::size_t i = cardinalities_.size(); i-- > 0;) {
        const auto c = static_cast<std::size_t>(cardinalities_[i]);
        tuple[i] = static_cast<int>(index % c);
        index /= c;
    }
    return tuple;
}

std::vector<FactorTuple> FactorSpace::all_tuples() const
{
    std::vector<FactorTuple> tuples;
    tuples.reserve(total_);
    for (std::size_t i = 0; i < total_; ++i)
        tuples.push_back(unflatten(i));
    return tuples;
}

std::string FactorSpace::code_string(std::size_t index) const
{
    const bool dotted = std::any_of(cardinalities_.begin(), cardinalities_.end(), [](int c) { return c > 10; });
    std::string out;
    const FactorTuple tuple = unflatten(index);
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (dotted && i > 0)
            out += '.';
        out += std::to_string(tuple[i]);
    }
    return out;
}

int hamming_distance(const FactorTuple& a, const FactorTuple& b)
{
    require(a.size() == b.size(), ErrorCode::length_mismatch, "tuples differ in length");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i] ? 1 : 0;
    return d;
}

} // namespace itlab
