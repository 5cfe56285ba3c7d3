#include "itlab/mappings.hpp"

#include "itlab/errors.hpp"
#include "itlab/random.hpp"

#include <algorithm>
#include <numeric>

namespace itlab {

Mapping::Mapping(FactorSpace source, FactorSpace target, std::vector<std::size_t> table)
  : source_(std::move(source)), target_(std::move(target)), table_(std::move(table))
{
    require(table_.size() == source_.total_points(), ErrorCode::length_mismatch,
            "mapping table length must equal the source size");
    for (std::size_t t : table_)
        require(t < target_.total_points(), ErrorCode::invalid_argument, "mapping table entry out of range");
}

Mapping::Mapping(FactorSpace space, std::vector<std::size_t> table) : Mapping(space, space, std::move(table)) {}

Mapping Mapping::identity(const FactorSpace& space)
{
    std::vector<std::size_t> table(space.total_points());
    std::iota(table.begin(), table.end(), std::size_t{0});
    return Mapping(space, std::move(table));
}

Mapping Mapping::constant(const FactorSpace& space, std::size_t code)
{
    return Mapping(space, std::vector<std::size_t>(space.total_points(), code));
}

bool Mapping::is_constant() const noexcept
{
    return std::adjacent_find(table_.begin(), table_.end(), std::not_equal_to<>()) == table_.end();
}

bool Mapping::is_injective() const
{
    std::vector<char> seen(target_.total_points(), 0);
    for (std::size_t t : table_) {
        if (seen[t])
            return false;
        seen[t] = 1;
    }
    return true;
}

std::string_view to_string(MappingClass cls) noexcept
{
    switch (cls) {
    case MappingClass::degenerate: return "degenerate";
    case MappingClass::other: return "other";
    case MappingClass::holistic: return "holistic";
    case MappingClass::compositional: return "compositional";
    }
    return "unknown";
}

std::optional<std::uint64_t> count_all_mappings(const FactorSpace& space, std::uint64_t cap)
{
    const std::uint64_t n = space.total_points();
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < n; ++i) {
        if (count > cap / n)
            return std::nullopt;
        count *= n;
    }
    if (count > cap)
        return std::nullopt;
    return count;
}

std::vector<Mapping> enumerate_all_mappings(const FactorSpace& space, std::uint64_t cap)
{
    const auto count = count_all_mappings(space, cap);
    require(count.has_value(), ErrorCode::cap_exceeded,
            "total_points^total_points exceeds the enumeration cap of " + std::to_string(cap));

    const std::size_t n = space.total_points();
    std::vector<Mapping> out;
    out.reserve(static_cast<std::size_t>(*count));
    std::vector<std::size_t> table(n, 0);
    for (std::uint64_t k = 0; k < *count; ++k) {
        out.emplace_back(space, table);
        // odometer increment, last entry fastest
        for (std::size_t pos = n; pos-- > 0;) {
            if (++table[pos] < n)
                break;
            table[pos] = 0;
        }
    }
    return out;
}

namespace {

// Reads word maps for a fixed factor permutation and verifies them on
// every table entry. Returns nullopt on the first inconsistency.
std::optional<CompositionalWitness> try_permutation(const Mapping& mapping, const std::vector<int>& perm,
                                                    const std::vector<FactorTuple>& source_tuples)
{
    const FactorSpace& target = mapping.target();
    const auto m = static_cast<std::size_t>(target.num_factors());
    CompositionalWitness witness;
    witness.factor_permutation = perm;
    witness.word_maps.resize(m);
    for (std::size_t j = 0; j < m; ++j)
        witness.word_maps[j].assign(static_cast<std::size_t>(target.cardinality(static_cast<int>(j))), -1);

    for (std::size_t x = 0; x < source_tuples.size(); ++x) {
        const FactorTuple t = target.unflatten(mapping(x));
        for (std::size_t j = 0; j < m; ++j) {
            const int s = source_tuples[x][static_cast<std::size_t>(perm[j])];
            int& slot = witness.word_maps[j][static_cast<std::size_t>(s)];
            if (slot == -1)
                slot = t[j];
            else if (slot != t[j])
                return std::nullopt;
        }
    }
    // every word map must be a bijection of its factor's values
    for (std::size_t j = 0; j < m; ++j) {
        std::vector<char> used(witness.word_maps[j].size(), 0);
        for (int w : witness.word_maps[j]) {
            if (w < 0 || used[static_cast<std::size_t>(w)])
                return std::nullopt;
            used[static_cast<std::size_t>(w)] = 1;
        }
    }
    return witness;
}

} // namespace

std::optional<CompositionalWitness> decompose_compositional(const Mapping& mapping)
{
    const FactorSpace& source = mapping.source();
    const FactorSpace& target = mapping.target();
    if (source.num_factors() != target.num_factors())
        return std::nullopt;

    const std::vector<FactorTuple> source_tuples = source.all_tuples();
    std::vector<int> perm(static_cast<std::size_t>(target.num_factors()));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool shapes_match = true;
        for (std::size_t j = 0; j < perm.size(); ++j)
            shapes_match = shapes_match && target.cardinality(static_cast<int>(j)) == source.cardinality(perm[j]);
        if (!shapes_match)
            continue;
        if (auto witness = try_permutation(mapping, perm, source_tuples))
            return witness;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::nullopt;
}

Mapping recompose(const FactorSpace& source, const FactorSpace& target, const CompositionalWitness& witness)
{
    const auto m = static_cast<std::size_t>(target.num_factors());
    require(witness.factor_permutation.size() == m && witness.word_maps.size() == m, ErrorCode::shape_mismatch,
            "witness does not match the target shape");
    std::vector<std::size_t> table(source.total_points());
    for (std::size_t x = 0; x < table.size(); ++x) {
        const FactorTuple s = source.unflatten(x);
        FactorTuple t(m);
        for (std::size_t j = 0; j < m; ++j)
            t[j] = witness.word_maps[j].at(static_cast<std::size_t>(s.at(static_cast<std::size_t>(witness.factor_permutation[j]))));
        table[x] = target.flatten(t);
    }
    return Mapping(source, target, std::move(table));
}

MappingClass classify(const Mapping& mapping)
{
    require(mapping.source().cardinalities() == mapping.target().cardinalities(), ErrorCode::shape_mismatch,
            "classification needs source and target of equal shape");
    if (mapping.is_constant())
        return MappingClass::degenerate;
    if (!mapping.is_injective())
        return MappingClass::other;
    return decompose_compositional(mapping) ? MappingClass::compositional : MappingClass::holistic;
}

Mapping sample_compositional(const FactorSpace& space, std::uint64_t seed)
{
    require(space.is_uniform(), ErrorCode::unequal_cardinalities,
            "compositional sampling needs equal cardinalities across factors");
    Rng rng = make_rng(seed);
    const auto m = static_cast<std::size_t>(space.num_factors());
    const int v = space.cardinality(0);

    CompositionalWitness witness;
    witness.factor_permutation.resize(m);
    std::iota(witness.factor_permutation.begin(), witness.factor_permutation.end(), 0);
    shuffle(rng, witness.factor_permutation);
    witness.word_maps.resize(m);
    for (auto& word : witness.word_maps) {
        word.resize(static_cast<std::size_t>(v));
        std::iota(word.begin(), word.end(), 0);
        shuffle(rng, word);
    }
    return recompose(space, space, witness);
}

double compositional_count(int num_factors, int cardinality)
{
    double count = 1.0;
    for (int i = 2; i <= num_factors; ++i)
        count *= i;
    double word = 1.0;
    for (int i = 2; i <= cardinality; ++i)
        word *= i;
    for (int i = 0; i < num_factors; ++i)
        count *= word;
    return count;
}

void to_json(nlohmann::json& j, const Mapping& mapping)
{
    j = nlohmann::json{{"shape", mapping.source().cardinalities()}, {"table", mapping.table()}};
    if (mapping.target().cardinalities() != mapping.source().cardinalities())
        j["target_shape"] = mapping.target().cardinalities();
}

void from_json(const nlohmann::json& j, Mapping& mapping)
{
    try {
        FactorSpace source(j.at("shape").get<std::vector<int>>());
        FactorSpace target = j.contains("target_shape") ? FactorSpace(j.at("target_shape").get<std::vector<int>>())
                                                        : source;
        mapping = Mapping(std::move(source), std::move(target), j.at("table").get<std::vector<std::size_t>>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, std::string("bad mapping JSON: ") + e.what());
    }
}

} // namespace itlab
