#pragma once

#include "itlab/grammar.hpp"
#include "itlab/mappings.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace itlab {

/// Every mapping of a tiny space with its class, coding length and a
/// row-major output table, precomputed once and shared read-only.
class MappingUniverse {
public:
    MappingUniverse(const FactorSpace& space, const NamingTable& names, std::uint64_t cap = kDefaultEnumerationCap);

    const FactorSpace& space() const noexcept { return space_; }
    std::size_t size() const noexcept { return mappings_.size(); }
    std::size_t points() const noexcept { return space_.total_points(); }

    const Mapping& mapping(std::size_t i) const { return mappings_.at(i); }
    const std::vector<Mapping>& mappings() const noexcept { return mappings_; }
    MappingClass mapping_class(std::size_t i) const { return classes_.at(i); }
    int coding_length(std::size_t i) const { return coding_lengths_.at(i); }
    const std::vector<int>& coding_lengths() const noexcept { return coding_lengths_; }

    /// l_i(x)
    std::size_t output(std::size_t i, std::size_t x) const noexcept { return outputs_[i * points() + x]; }

    /// Index of the mapping with exactly this table, if enumerated.
    std::size_t index_of(const Mapping& mapping) const;

private:
    FactorSpace space_;
    std::vector<Mapping> mappings_;
    std::vector<MappingClass> classes_;
    std::vector<int> coding_lengths_;
    std::vector<std::size_t> outputs_;
};

enum class PriorMode { coding_length, uniform };

/// Categorical distribution over the universe, kept in log space.
class Posterior {
public:
    Posterior() = default;
    /// Normalizes the given log weights.
    explicit Posterior(std::vector<double> log_weights);

    static Posterior from_prior(const MappingUniverse& universe, PriorMode mode);

    std::size_t size() const noexcept { return log_theta_.size(); }
    const std::vector<double>& log_theta() const noexcept { return log_theta_; }
    std::vector<double> probabilities() const;
    double probability(std::size_t i) const;

    std::size_t support_size() const;
    std::size_t mode() const;
    std::array<double, kNumMappingClasses> class_mass(const MappingUniverse& universe) const;

private:
    std::vector<double> log_theta_;
};

struct SignalPair {
    std::size_t x = 0;   ///< source flat index
    std::size_t msg = 0; ///< target flat index

    bool operator==(const SignalPair& other) const = default;
};

using SignalDataset = std::vector<SignalPair>;

/// Full graph of a mapping, repeated `copies` times.
SignalDataset mapping_graph(const Mapping& mapping, std::size_t copies = 1);

/// P(L | D) ∝ P(D | L) P(L) with per-pair likelihood (1 - eps) on agreement
/// and eps / (|points| - 1) otherwise. Throws all_zero_mass when nothing
/// survives (only possible with eps = 0).
Posterior bayes_update(const MappingUniverse& universe, const Posterior& posterior, const SignalDataset& data,
                       double likelihood_noise);

/// n pairs; x uniform over `inputs`, l drawn from the posterior per pair.
SignalDataset transmit_dataset(const MappingUniverse& universe, const Posterior& posterior,
                               std::span<const std::size_t> inputs, std::size_t n, std::uint64_t seed);

struct InteractionOutcome {
    SignalDataset successes;
    /// Candidate set shown in each successful round (parallel to successes).
    std::vector<std::vector<std::size_t>> candidates;
    std::size_t rounds = 0;
    double success_rate = 0.0;
};

/// Lewis referential game. Per round: target x, a speaker mapping names it,
/// a listener mapping picks uniformly among the preimages of the message in
/// the candidate set (or among all candidates when there are none).
InteractionOutcome lewis_interaction(const MappingUniverse& universe, const Posterior& speaker,
                                     const Posterior& listener, std::size_t rounds, std::size_t num_candidates,
                                     std::uint64_t seed);

/// Update on recorded successes with P(success | x, candidates, L)
/// = 1 / |{y in candidates : L(y) = L(x)}|. Ambiguous mappings lose mass;
/// the message itself is not scored.
Posterior success_update(const MappingUniverse& universe, const Posterior& posterior,
                         const InteractionOutcome& outcome);

enum class InteractionLikelihood { success, agreement };

struct ILConfig {
    FactorSpace space = FactorSpace::uniform(2, 2);
    std::size_t generations = 20;
    std::size_t dataset_size = 8;
    std::size_t interaction_rounds = 40;
    double likelihood_noise = 0.05;
    std::size_t num_candidates = 4;
    PriorMode prior_mode = PriorMode::coding_length;
    bool interaction_enabled = true;
    InteractionLikelihood interaction_likelihood = InteractionLikelihood::success;
    std::uint64_t seed = 0;

    void validate(const MappingUniverse& universe) const;
};

struct GenerationRecord {
    std::size_t generation = 0;
    std::array<double, kNumMappingClasses> class_mass{};
    double game_success_rate = 0.0;
    std::size_t dominant_mapping = 0;
};

/// Generation t: fresh agent with the configured prior imitates D_{t-1}
/// (D_{-1} = initial_data), optionally plays the game with a copy of itself
/// and updates on the successes, then produces D_t.
std::vector<GenerationRecord> run_iterated_learning(const MappingUniverse& universe, const ILConfig& config,
                                                    const SignalDataset& initial_data);

/// First mapping of the class in enumeration order (the default D_0 uses the first holistic one).
std::size_t first_of_class(const MappingUniverse& universe, MappingClass cls);

} // namespace itlab
