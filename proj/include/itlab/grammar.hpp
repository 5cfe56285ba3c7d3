#pragma once

#include "itlab/mappings.hpp"

#include <span>
#include <string>
#include <vector>

namespace itlab {

/// Words for the values of each target factor, and the order in which the
/// factors are spoken in a phrase ("blue circle" speaks factor 2 first).
struct NamingTable {
    std::vector<std::vector<std::string>> value_names;
    std::vector<int> phrase_order;

    /// factor 1 = {circle, box}, factor 2 = {blue, red}, phrases "color shape".
    static NamingTable shapes_and_colors();
    /// Placeholder words "a0", "a1", ... "b0", ... for any small space.
    static NamingTable generic(const FactorSpace& space);

    std::string phrase(const FactorSpace& space, std::size_t point) const;
};

/// A textual grammar whose rules generate the mapping's graph. Rules read
/// source codes (digit strings) on the left and target phrases on the right.
///
/// Canonical layout, one rule per line:
///   compositional   "S→z2,z1" then "z2:0→blue", ... one per (factor, value)
///   single point    "S:00→blue circle"
///   several points  "S: {00, 01, 10, 11}→red box"
/// Coding length counts code points of all rules; newlines are not counted
/// ("→" is one character).
struct Grammar {
    std::vector<std::string> rules;

    std::string text() const;
    int coding_length() const;
};

struct CodedGrammar {
    Grammar grammar;
    int coding_length = 0;
    MappingClass mapping_class = MappingClass::other;
};

CodedGrammar grammar_and_coding_length(const Mapping& mapping, const NamingTable& names);

/// Number of Unicode code points in a UTF-8 string, excluding '\n'.
int count_characters(std::string_view utf8);

/// P(l) proportional to 2^-alpha, normalized in log space.
std::vector<double> prior_from_coding_lengths(std::span<const int> coding_lengths);
std::vector<double> prior_distribution(std::span<const Mapping> mappings, const NamingTable& names);

struct KolmogorovBounds {
    double bijection_bits = 0.0;     ///< v^m * log2(v^m)
    double compositional_bits = 0.0; ///< v log2 v + m log2 m
    double ratio = 1.0;              ///< 1 when both bounds are zero
};

KolmogorovBounds kolmogorov_bounds(int num_factors, int cardinality);
KolmogorovBounds kolmogorov_bounds(const FactorSpace& space);

} // namespace itlab
