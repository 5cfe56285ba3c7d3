#pragma once

#include "itlab/factor_space.hpp"
#include "itlab/mappings.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace itlab {

struct LabelFunction {
    enum class Kind { linear, nonlinear };
    Kind kind = Kind::linear;
    std::vector<double> weights; ///< linear: a (one per factor); nonlinear: {a1, a2, a3}

    static LabelFunction linear(std::vector<double> a) { return {Kind::linear, std::move(a)}; }
    /// a1 g1 + a2 g2 + a3 g4 g3; needs at least four factors.
    static LabelFunction nonlinear(double a1, double a2, double a3) { return {Kind::nonlinear, {a1, a2, a3}}; }

    double operator()(const std::vector<double>& levels) const;
};

struct GeneratorConfig {
    FactorSpace space = FactorSpace({10, 10, 10, 8});
    /// Real level of each value of each factor; empty means linearly spaced in [0, 1].
    std::vector<std::vector<double>> factor_values;
    std::optional<FactorSpace> noise_space;
    LabelFunction label_fn = LabelFunction::linear({0.5, 0.5, 0.5, 0.5});
    double label_noise_sigma = 0.0;
    int samples_per_tuple = 1;
    double split_ratio = 0.5;
    std::uint64_t seed = 0;

    /// Fills default levels and checks dimensions; throws config_mismatch.
    void validate();
    double level(int factor, int value) const;
};

/// Values of one factor linearly spaced in [0, 1] (a single value sits at 0).
std::vector<double> linear_levels(int cardinality);

struct LabeledDataset {
    std::vector<std::vector<double>> inputs;
    std::vector<double> labels;                  ///< regression targets
    std::vector<std::vector<int>> block_labels;  ///< categorical targets per block (may be empty)
    std::vector<FactorTuple> factor_tuples;      ///< ground truth, evaluation only
    std::vector<FactorTuple> noise_tuples;

    std::size_t size() const noexcept { return inputs.size(); }
    std::size_t input_dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

struct SupportSplit {
    std::vector<FactorTuple> train;
    std::vector<FactorTuple> test;
    bool test_empty = false;
};

/// Uniform random partition with |train| = round(split_ratio * |G|).
SupportSplit split_support(const FactorSpace& space, double split_ratio, std::uint64_t seed);

/// Concatenated one-hot blocks (G, then O); appends to `out`.
void append_one_hot(const FactorSpace& space, const FactorTuple& tuple, std::vector<double>& out);

/// samples_per_tuple inputs per tuple with O drawn uniformly; regression
/// labels from the label function plus Gaussian noise. `stream` selects an
/// independent random stream under config.seed (e.g. train vs test).
LabeledDataset build_dataset(const GeneratorConfig& config, const std::vector<FactorTuple>& support,
                             std::uint64_t stream = 0);

/// One sample per source point: input one-hot(G), block labels = the
/// mapping's output tuple.
LabeledDataset mapping_dataset(const Mapping& mapping);

/// One JSON object per line: {"tuple": [...], "input": [...], "label": ...}.
std::string to_json_lines(const LabeledDataset& data);
LabeledDataset from_json_lines(const std::string& text);

void to_json(nlohmann::json& j, const GeneratorConfig& config);
void from_json(const nlohmann::json& j, GeneratorConfig& config);

} // namespace itlab
