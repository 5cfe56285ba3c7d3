#include "itlab/synth_data.hpp"

#include "itlab/errors.hpp"
#include "itlab/random.hpp"

#include <cmath>
#include <sstream>

namespace itlab {

double LabelFunction::operator()(const std::vector<double>& g) const
{
    if (kind == Kind::linear) {
        require(weights.size() == g.size(), ErrorCode::config_mismatch, "linear weights must match the factors");
        double y = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            y += weights[i] * g[i];
        return y;
    }
    require(weights.size() == 3 && g.size() >= 4, ErrorCode::config_mismatch,
            "the nonlinear label needs {a1, a2, a3} and at least four factors");
    return weights[0] * g[0] + weights[1] * g[1] + weights[2] * g[3] * g[2];
}

std::vector<double> linear_levels(int cardinality)
{
    std::vector<double> levels(static_cast<std::size_t>(cardinality), 0.0);
    for (int k = 0; k < cardinality && cardinality > 1; ++k)
        levels[static_cast<std::size_t>(k)] = static_cast<double>(k) / static_cast<double>(cardinality - 1);
    return levels;
}

void GeneratorConfig::validate()
{
    if (factor_values.empty()) {
        for (int c : space.cardinalities())
            factor_values.push_back(linear_levels(c));
    }
    require(factor_values.size() == static_cast<std::size_t>(space.num_factors()), ErrorCode::config_mismatch,
            "factor_values must list every factor");
    for (int i = 0; i < space.num_factors(); ++i)
        require(factor_values[static_cast<std::size_t>(i)].size() == static_cast<std::size_t>(space.cardinality(i)),
                ErrorCode::config_mismatch, "factor_values length must match the cardinality");
    if (label_fn.kind == LabelFunction::Kind::linear)
        require(label_fn.weights.size() == static_cast<std::size_t>(space.num_factors()), ErrorCode::config_mismatch,
                "linear weights must have one entry per factor");
    else
        require(label_fn.weights.size() == 3 && space.num_factors() >= 4, ErrorCode::config_mismatch,
                "the nonlinear label needs three weights and four factors");
    require(label_noise_sigma >= 0.0, ErrorCode::config_mismatch, "label noise must be nonnegative");
    require(samples_per_tuple >= 1, ErrorCode::config_mismatch, "samples_per_tuple must be >= 1");
    require(split_ratio > 0.0 && split_ratio <= 1.0, ErrorCode::config_mismatch, "split_ratio must lie in (0, 1]");
}

double GeneratorConfig::level(int factor, int value) const
{
    return factor_values.at(static_cast<std::size_t>(factor)).at(static_cast<std::size_t>(value));
}

SupportSplit split_support(const FactorSpace& space, double split_ratio, std::uint64_t seed)
{
    require(split_ratio > 0.0 && split_ratio <= 1.0, ErrorCode::invalid_argument, "split_ratio must lie in (0, 1]");
    const std::size_t total = space.total_points();
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i)
        order[i] = i;
    Rng rng = make_rng(seed);
    shuffle(rng, order);

    const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(total)));
    SupportSplit split;
    split.train.reserve(n_train);
    split.test.reserve(total - n_train);
    for (std::size_t k = 0; k < total; ++k)
        (k < n_train ? split.train : split.test).push_back(space.unflatten(order[k]));
    split.test_empty = split.test.empty();
    return split;
}

void append_one_hot(const FactorSpace& space, const FactorTuple& tuple, std::vector<double>& out)
{
    require(tuple.size() == static_cast<std::size_t>(space.num_factors()), ErrorCode::length_mismatch,
            "tuple does not match the space");
    for (int i = 0; i < space.num_factors(); ++i) {
        const int v = tuple[static_cast<std::size_t>(i)];
        require(v >= 0 && v < space.cardinality(i), ErrorCode::invalid_argument, "factor value out of range");
        for (int k = 0; k < space.cardinality(i); ++k)
            out.push_back(k == v ? 1.0 : 0.0);
    }
}

LabeledDataset build_dataset(const GeneratorConfig& config_in, const std::vector<FactorTuple>& support,
                             std::uint64_t stream)
{
    require(!support.empty(), ErrorCode::empty_input, "support is empty");
    GeneratorConfig config = config_in;
    config.validate();
    Rng rng = make_rng(derive_seed(config.seed, stream));

    LabeledDataset data;
    const std::size_t n = support.size() * static_cast<std::size_t>(config.samples_per_tuple);
    data.inputs.reserve(n);
    data.labels.reserve(n);
    data.factor_tuples.reserve(n);
    std::vector<double> levels(static_cast<std::size_t>(config.space.num_factors()));
    for (const FactorTuple& g : support) {
        require(g.size() == levels.size(), ErrorCode::config_mismatch, "support tuple does not match the space");
        for (std::size_t i = 0; i < levels.size(); ++i)
            levels[i] = config.level(static_cast<int>(i), g[i]);
        for (int s = 0; s < config.samples_per_tuple; ++s) {
            std::vector<double> x;
            x.reserve(static_cast<std::size_t>(config.space.one_hot_width() +
                                               (config.noise_space ? config.noise_space->one_hot_width() : 0)));
            append_one_hot(config.space, g, x);
            if (config.noise_space) {
                const FactorTuple o = config.noise_space->unflatten(uniform_index(rng, config.noise_space->total_points()));
                append_one_hot(*config.noise_space, o, x);
                data.noise_tuples.push_back(o);
            }
            double y = config.label_fn(levels);
            if (config.label_noise_sigma > 0.0)
                y += config.label_noise_sigma * standard_normal(rng);
            data.inputs.push_back(std::move(x));
            data.labels.push_back(y);
            data.factor_tuples.push_back(g);
        }
    }
    return data;
}

LabeledDataset mapping_dataset(const Mapping& mapping)
{
    LabeledDataset data;
    const FactorSpace& source = mapping.source();
    for (std::size_t x = 0; x < source.total_points(); ++x) {
        const FactorTuple g = source.unflatten(x);
        std::vector<double> input;
        append_one_hot(source, g, input);
        data.inputs.push_back(std::move(input));
        data.block_labels.push_back(mapping.target().unflatten(mapping(x)));
        data.factor_tuples.push_back(g);
        data.labels.push_back(static_cast<double>(mapping(x)));
    }
    return data;
}

std::string to_json_lines(const LabeledDataset& data)
{
    std::string out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        nlohmann::ordered_json rec;
        rec["tuple"] = data.factor_tuples.at(i);
        rec["input"] = data.inputs[i];
        if (!data.block_labels.empty())
            rec["label"] = data.block_labels.at(i);
        else
            rec["label"] = data.labels.at(i);
        if (!data.noise_tuples.empty())
            rec["noise"] = data.noise_tuples.at(i);
        out += rec.dump();
        out += '\n';
    }
    return out;
}

LabeledDataset from_json_lines(const std::string& text)
{
    LabeledDataset data;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            const auto rec = nlohmann::json::parse(line);
            data.factor_tuples.push_back(rec.at("tuple").get<FactorTuple>());
            data.inputs.push_back(rec.at("input").get<std::vector<double>>());
            const auto& label = rec.at("label");
            if (label.is_array()) {
                data.block_labels.push_back(label.get<std::vector<int>>());
                data.labels.push_back(0.0);
            } else {
                data.labels.push_back(label.get<double>());
            }
            if (rec.contains("noise"))
                data.noise_tuples.push_back(rec.at("noise").get<FactorTuple>());
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_error, std::string("bad dataset line: ") + e.what());
        }
    }
    return data;
}

void to_json(nlohmann::json& j, const GeneratorConfig& c)
{
    j = nlohmann::json{{"cardinalities", c.space.cardinalities()},
                       {"factor_values", c.factor_values},
                       {"label_fn", c.label_fn.kind == LabelFunction::Kind::linear ? "linear" : "nonlinear"},
                       {"label_weights", c.label_fn.weights},
                       {"label_noise_sigma", c.label_noise_sigma},
                       {"samples_per_tuple", c.samples_per_tuple},
                       {"split_ratio", c.split_ratio},
                       {"seed", c.seed}};
    if (c.noise_space)
        j["noise_cardinalities"] = c.noise_space->cardinalities();
}

void from_json(const nlohmann::json& j, GeneratorConfig& c)
{
    try {
        if (j.contains("cardinalities"))
            c.space = FactorSpace(j.at("cardinalities").get<std::vector<int>>());
        if (j.contains("factor_values"))
            c.factor_values = j.at("factor_values").get<std::vector<std::vector<double>>>();
        if (j.contains("noise_cardinalities")) {
            const auto nc = j.at("noise_cardinalities").get<std::vector<int>>();
            c.noise_space = nc.empty() ? std::nullopt : std::optional<FactorSpace>(FactorSpace(nc));
        }
        if (j.contains("label_fn")) {
            const auto kind = j.at("label_fn").get<std::string>();
            require(kind == "linear" || kind == "nonlinear", ErrorCode::config_invalid, "label_fn must be linear or nonlinear");
            c.label_fn.kind = kind == "linear" ? LabelFunction::Kind::linear : LabelFunction::Kind::nonlinear;
        }
        if (j.contains("label_weights"))
            c.label_fn.weights = j.at("label_weights").get<std::vector<double>>();
        c.label_noise_sigma = j.value("label_noise_sigma", c.label_noise_sigma);
        c.samples_per_tuple = j.value("samples_per_tuple", c.samples_per_tuple);
        c.split_ratio = j.value("split_ratio", c.split_ratio);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_invalid, std::string("bad generator config: ") + e.what());
    }
}

} // namespace itlab
