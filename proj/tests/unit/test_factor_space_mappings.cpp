#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "itlab/errors.hpp"
#include "itlab/mappings.hpp"

#include <algorithm>
#include <numeric>
#include <map>
#include <set>

using namespace itlab;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const LabError& e) {
        return e.code();
    }
    FAIL("expected a LabError");
    return ErrorCode::invalid_argument;
}

// Compositional bijections built directly from the definition: permute the
// factors, then relabel each factor's values.
std::set<std::vector<std::size_t>> compositional_tables(const FactorSpace& space)
{
    const int m = space.num_factors();
    const int v = space.cardinality(0);
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<int>> word_perms;
    std::vector<int> w(static_cast<std::size_t>(v));
    std::iota(w.begin(), w.end(), 0);
    do
        word_perms.push_back(w);
    while (std::next_permutation(w.begin(), w.end()));

    std::set<std::vector<std::size_t>> out;
    do {
        std::vector<std::size_t> choice(static_cast<std::size_t>(m), 0);
        while (true) {
            std::vector<std::size_t> table;
            for (const FactorTuple& s : space.all_tuples()) {
                FactorTuple t(static_cast<std::size_t>(m));
                for (int j = 0; j < m; ++j)
                    t[static_cast<std::size_t>(j)] =
                        word_perms[choice[static_cast<std::size_t>(j)]][static_cast<std::size_t>(s[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])])];
                table.push_back(space.flatten(t));
            }
            out.insert(table);
            std::size_t k = 0;
            while (k < choice.size() && ++choice[k] == word_perms.size())
                choice[k++] = 0;
            if (k == choice.size())
                break;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

} // namespace

TEST_CASE("flatten and unflatten are inverse and row-major")
{
    const FactorSpace space({3, 2, 4});
    CHECK(space.total_points() == 24);
    CHECK(space.one_hot_width() == 9);
    CHECK(space.flatten({1, 0, 0}) == 8);
    CHECK(space.flatten({0, 0, 1}) == 1);
    for (std::size_t i = 0; i < space.total_points(); ++i)
        CHECK(space.flatten(space.unflatten(i)) == i);
    CHECK(space.all_tuples().size() == 24);
}

TEST_CASE("code strings switch to dots above ten values")
{
    CHECK(FactorSpace({2, 2}).code_string(2) == "10");
    CHECK(FactorSpace({12, 2}).code_string(23) == "11.1");
}

TEST_CASE("factor space rejects bad input")
{
    CHECK(code_of([] { FactorSpace(std::vector<int>{}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { FactorSpace({2, 0}); }) == ErrorCode::invalid_argument);
    const FactorSpace space({2, 2});
    CHECK(code_of([&] { space.flatten({0}); }) == ErrorCode::length_mismatch);
    CHECK(code_of([&] { space.flatten({0, 2}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { space.unflatten(4); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { hamming_distance({0, 1}, {0}); }) == ErrorCode::length_mismatch);
    CHECK(hamming_distance({0, 1, 2}, {0, 2, 2}) == 1);
}

TEST_CASE("2x2 census by brute force")
{
    const FactorSpace space = FactorSpace::uniform(2, 2);
    const auto all = enumerate_all_mappings(space);
    REQUIRE(all.size() == 256);
    CHECK(count_all_mappings(space, 1000) == std::optional<std::uint64_t>(256));
    CHECK_FALSE(count_all_mappings(space, 255).has_value());

    const auto comp = compositional_tables(space);
    CHECK(comp.size() == 8);
    CHECK(compositional_count(2, 2) == 8.0);

    std::array<int, kNumMappingClasses> counts{};
    int bijections = 0;
    for (const Mapping& m : all) {
        const std::set<std::size_t> image(m.table().begin(), m.table().end());
        const bool bijective = image.size() == 4;
        bijections += bijective;
        MappingClass expected = MappingClass::other;
        if (image.size() == 1)
            expected = MappingClass::degenerate;
        else if (bijective)
            expected = comp.count(m.table()) ? MappingClass::compositional : MappingClass::holistic;
        CHECK(classify(m) == expected);
        ++counts[static_cast<std::size_t>(classify(m))];
    }
    CHECK(bijections == 24);
    CHECK(counts == std::array<int, kNumMappingClasses>{4, 228, 16, 8});
}

TEST_CASE("compositional set of 2x3 and 3x3 spaces matches the definition")
{
    for (const FactorSpace& space : {FactorSpace::uniform(3, 2), FactorSpace::uniform(2, 3)}) {
        const auto comp = compositional_tables(space);
        CHECK(static_cast<double>(comp.size()) == compositional_count(space.num_factors(), space.cardinality(0)));
        for (const auto& table : comp)
            CHECK(classify(Mapping(space, table)) == MappingClass::compositional);
    }
    CHECK(compositional_count(3, 3) == 6.0 * 216.0);
}

TEST_CASE("decompose then recompose gives the mapping back")
{
    const FactorSpace space = FactorSpace::uniform(3, 4);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Mapping m = sample_compositional(space, seed);
        const auto w = decompose_compositional(m);
        REQUIRE(w.has_value());
        CHECK(recompose(space, space, *w) == m);
    }
    CHECK_FALSE(decompose_compositional(Mapping::constant(space, 0)).has_value());
}

TEST_CASE("compositional sampling is uniform over the 8 elements of the 2x2 group")
{
    const FactorSpace space = FactorSpace::uniform(2, 2);
    std::map<std::vector<std::size_t>, int> hits;
    const int draws = 8000;
    for (int s = 0; s < draws; ++s)
        ++hits[sample_compositional(space, static_cast<std::uint64_t>(s)).table()];
    CHECK(hits.size() == 8);
    double chi2 = 0.0;
    for (const auto& [table, n] : hits)
        chi2 += (n - 1000.0) * (n - 1000.0) / 1000.0;
    CHECK(chi2 < 24.3); // 7 dof, p = 0.001
}

TEST_CASE("mapping guards")
{
    const FactorSpace space = FactorSpace::uniform(2, 2);
    CHECK(code_of([&] { Mapping(space, {0, 1, 2}); }) == ErrorCode::length_mismatch);
    CHECK(code_of([&] { Mapping(space, {0, 1, 2, 4}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { enumerate_all_mappings(FactorSpace::uniform(3, 2)); }) == ErrorCode::cap_exceeded);
    CHECK(code_of([] { sample_compositional(FactorSpace({2, 3}), 0); }) == ErrorCode::unequal_cardinalities);
    CHECK(Mapping::identity(space).is_injective());
    CHECK(Mapping::constant(space, 3).is_constant());
    CHECK(classify(Mapping::identity(space)) == MappingClass::compositional);
}

TEST_CASE("mapping JSON round trip")
{
    const Mapping m(FactorSpace({2, 2}), {3, 1, 0, 2});
    nlohmann::json j = m;
    CHECK(j.get<Mapping>() == m);
    CHECK(code_of([] { nlohmann::json::parse(R"({"shape":[2,2]})").get<Mapping>(); }) == ErrorCode::parse_error);
}
