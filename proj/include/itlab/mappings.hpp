#pragma once

#include "itlab/factor_space.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace itlab {

inline constexpr std::uint64_t kDefaultEnumerationCap = 100000;

/// A total function from the points of `source` to the points of `target`,
/// stored as a lookup table of flat indices. Need not be injective.
class Mapping {
public:
    Mapping() = default;
    Mapping(FactorSpace source, FactorSpace target, std::vector<std::size_t> table);
    /// Same-shape mapping.
    Mapping(FactorSpace space, std::vector<std::size_t> table);

    static Mapping identity(const FactorSpace& space);
    static Mapping constant(const FactorSpace& space, std::size_t code);

    const FactorSpace& source() const noexcept { return source_; }
    const FactorSpace& target() const noexcept { return target_; }
    const std::vector<std::size_t>& table() const noexcept { return table_; }

    std::size_t operator()(std::size_t x) const { return table_.at(x); }

    bool is_constant() const noexcept;
    bool is_injective() const;

    bool operator==(const Mapping& other) const = default;

private:
    FactorSpace source_;
    FactorSpace target_;
    std::vector<std::size_t> table_;
};

enum class MappingClass { degenerate = 0, other = 1, holistic = 2, compositional = 3 };

inline constexpr int kNumMappingClasses = 4;

std::string_view to_string(MappingClass cls) noexcept;

/// Witness that a mapping lies in S_v^m ⋊ S_m: target factor j takes the
/// value word_maps[j][s[factor_permutation[j]]] for source tuple s.
struct CompositionalWitness {
    std::vector<int> factor_permutation;
    std::vector<std::vector<int>> word_maps;

    bool operator==(const CompositionalWitness& other) const = default;
};

/// All total functions of a tiny space, in lexicographic table order.
/// Throws cap_exceeded when total_points^total_points > cap.
std::vector<Mapping> enumerate_all_mappings(const FactorSpace& space, std::uint64_t cap = kDefaultEnumerationCap);

/// Number of total functions, or nullopt when it exceeds `cap`.
std::optional<std::uint64_t> count_all_mappings(const FactorSpace& space, std::uint64_t cap);

/// Exhaustive search over factor permutations (respecting cardinalities);
/// the word maps are read off the table and then checked on every entry.
std::optional<CompositionalWitness> decompose_compositional(const Mapping& mapping);

Mapping recompose(const FactorSpace& source, const FactorSpace& target, const CompositionalWitness& witness);

MappingClass classify(const Mapping& mapping);

/// Uniform draw from S_v^m ⋊ S_m. Requires equal cardinalities.
Mapping sample_compositional(const FactorSpace& space, std::uint64_t seed);

/// m! (v!)^m for a uniform space; the count of compositional bijections.
double compositional_count(int num_factors, int cardinality);

void to_json(nlohmann::json& j, const Mapping& mapping);
void from_json(const nlohmann::json& j, Mapping& mapping);

} // namespace itlab
