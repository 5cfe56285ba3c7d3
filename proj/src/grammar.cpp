#include "itlab/grammar.hpp"

#include "itlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace itlab {

namespace {

constexpr std::string_view kArrow = "→";

double log_sum_exp(std::span<const double> values)
{
    const double hi = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(hi))
        return hi;
    double acc = 0.0;
    for (double v : values)
        acc += std::exp(v - hi);
    return hi + std::log(acc);
}

void check_names(const NamingTable& names, const FactorSpace& target)
{
    const auto m = static_cast<std::size_t>(target.num_factors());
    require(names.value_names.size() >= m, ErrorCode::missing_names, "naming table lacks factors");
    for (std::size_t j = 0; j < m; ++j)
        require(names.value_names[j].size() >= static_cast<std::size_t>(target.cardinality(static_cast<int>(j))),
                ErrorCode::missing_names, "naming table lacks values for factor " + std::to_string(j + 1));
    std::vector<int> order = names.phrase_order;
    std::sort(order.begin(), order.end());
    for (std::size_t j = 0; j < m; ++j)
        require(j < order.size() && order[j] == static_cast<int>(j), ErrorCode::missing_names,
                "phrase_order must be a permutation of the target factors");
    require(order.size() == m, ErrorCode::missing_names, "phrase_order must be a permutation of the target factors");
}

} // namespace

NamingTable NamingTable::shapes_and_colors()
{
    return NamingTable{{{"circle", "box"}, {"blue", "red"}}, {1, 0}};
}

NamingTable NamingTable::generic(const FactorSpace& space)
{
    NamingTable names;
    for (int j = 0; j < space.num_factors(); ++j) {
        std::vector<std::string> words;
        for (int k = 0; k < space.cardinality(j); ++k)
            words.push_back(std::string(1, static_cast<char>('a' + j % 26)) + std::to_string(k));
        names.value_names.push_back(std::move(words));
        names.phrase_order.push_back(j);
    }
    return names;
}

std::string NamingTable::phrase(const FactorSpace& space, std::size_t point) const
{
    const FactorTuple t = space.unflatten(point);
    std::string out;
    for (int j : phrase_order) {
        if (!out.empty())
            out += ' ';
        out += value_names.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(t.at(static_cast<std::size_t>(j))));
    }
    return out;
}

std::string Grammar::text() const
{
    std::string out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (i > 0)
            out += '\n';
        out += rules[i];
    }
    return out;
}

int Grammar::coding_length() const { return count_characters(text()); }

int count_characters(std::string_view utf8)
{
    int count = 0;
    for (unsigned char c : utf8) {
        if (c == '\n')
            continue;
        // continuation bytes 10xxxxxx do not start a code point
        if ((c & 0xC0) != 0x80)
            ++count;
    }
    return count;
}

CodedGrammar grammar_and_coding_length(const Mapping& mapping, const NamingTable& names)
{
    const FactorSpace& source = mapping.source();
    const FactorSpace& target = mapping.target();
    check_names(names, target);

    CodedGrammar out;
    out.mapping_class = classify(mapping);

    if (out.mapping_class == MappingClass::compositional) {
        const CompositionalWitness w = *decompose_compositional(mapping);
        std::string start = "S" + std::string(kArrow);
        bool first = true;
        for (int j : names.phrase_order) {
            if (!first)
                start += ',';
            first = false;
            start += "z" + std::to_string(w.factor_permutation[static_cast<std::size_t>(j)] + 1);
        }
        out.grammar.rules.push_back(start);
        for (int j : names.phrase_order) {
            const auto ju = static_cast<std::size_t>(j);
            const std::string position = "z" + std::to_string(w.factor_permutation[ju] + 1);
            for (std::size_t k = 0; k < w.word_maps[ju].size(); ++k)
                out.grammar.rules.push_back(position + ":" + std::to_string(k) + std::string(kArrow) +
                                            names.value_names[ju][static_cast<std::size_t>(w.word_maps[ju][k])]);
        }
    } else {
        // group source points by their image, groups ordered by first member
        std::map<std::size_t, std::vector<std::size_t>> by_target;
        std::vector<std::size_t> order;
        for (std::size_t x = 0; x < source.total_points(); ++x) {
            auto& members = by_target[mapping(x)];
            if (members.empty())
                order.push_back(mapping(x));
            members.push_back(x);
        }
        for (std::size_t t : order) {
            const auto& members = by_target[t];
            std::string rule = "S:";
            if (members.size() == 1) {
                rule += source.code_string(members.front());
            } else {
                rule += " {";
                for (std::size_t i = 0; i < members.size(); ++i) {
                    if (i > 0)
                        rule += ", ";
                    rule += source.code_string(members[i]);
                }
                rule += "}";
            }
            rule += std::string(kArrow) + names.phrase(target, t);
            out.grammar.rules.push_back(std::move(rule));
        }
    }
    out.coding_length = out.grammar.coding_length();
    return out;
}

std::vector<double> prior_from_coding_lengths(std::span<const int> coding_lengths)
{
    require(!coding_lengths.empty(), ErrorCode::empty_input, "no coding lengths");
    std::vector<double> log_weights;
    log_weights.reserve(coding_lengths.size());
    for (int alpha : coding_lengths)
        log_weights.push_back(-static_cast<double>(alpha) * std::log(2.0));
    const double log_z = log_sum_exp(log_weights);
    std::vector<double> prior;
    prior.reserve(log_weights.size());
    for (double lw : log_weights)
        prior.push_back(std::exp(lw - log_z));
    return prior;
}

std::vector<double> prior_distribution(std::span<const Mapping> mappings, const NamingTable& names)
{
    std::vector<int> lengths;
    lengths.reserve(mappings.size());
    for (const Mapping& m : mappings)
        lengths.push_back(grammar_and_coding_length(m, names).coding_length);
    return prior_from_coding_lengths(lengths);
}

KolmogorovBounds kolmogorov_bounds(int num_factors, int cardinality)
{
    require(num_factors >= 1 && cardinality >= 1, ErrorCode::invalid_argument, "m and v must be >= 1");
    const double m = num_factors;
    const double v = cardinality;
    KolmogorovBounds b;
    b.bijection_bits = std::pow(v, m) * m * std::log2(v);
    b.compositional_bits = v * std::log2(v) + m * std::log2(m);
    b.ratio = b.compositional_bits > 0.0 ? b.bijection_bits / b.compositional_bits : 1.0;
    return b;
}

KolmogorovBounds kolmogorov_bounds(const FactorSpace& space)
{
    require(space.is_uniform(), ErrorCode::unequal_cardinalities, "bounds assume a uniform cardinality");
    return kolmogorov_bounds(space.num_factors(), space.cardinality(0));
}

} // namespace itlab
